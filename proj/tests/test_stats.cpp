#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"

using namespace mdpconc;

TEST_CASE("span basics") {
  CHECK(value_span({1.0, 0.0}) == 1.0);
  CHECK(value_span({3.0, 3.0, 3.0}) == 0.0);
  CHECK(value_span({3.0, -2.0, 5.0}) == 7.0);
  CHECK_THROWS_AS(value_span({}), EmptyVector);
}

TEST_CASE("max deviation on the symmetric model") {
  const MdpModel m = fixtures::symmetric_model();
  const StationaryPolicy pi{{0, 0}};
  CHECK(max_abs_deviation(m, pi, {1.0, 0.0}) == Catch::Approx(0.5).margin(1e-15));
  CHECK(max_abs_deviation(m, pi, {4.0, 4.0}) == 0.0);
}

TEST_CASE("max deviation collapses to successor differences on deterministic chains") {
  const MdpModel m = fixtures::cycle_model(4);
  const StationaryPolicy pi{{0, 0, 0, 0}};
  const Vec v{0.3, -1.0, 2.0, 0.0};
  double expected = 0.0;
  for (int s = 0; s < 4; ++s) {
    const int succ = (s + 1) % 4;
    for (int sp = 0; sp < 4; ++sp)
      expected = std::max(expected, std::fabs(v[sp] - v[succ]));
  }
  CHECK(max_abs_deviation(m, pi, v) == Catch::Approx(expected).margin(1e-15));
  // The support-restricted variant only sees realized successors.
  double support_expected = 0.0;
  for (int s = 0; s < 4; ++s) {
    const int succ = (s + 1) % 4;
    support_expected = std::max(support_expected, std::fabs(v[succ] - v[succ]));
  }
  CHECK(max_abs_deviation(m, pi, v, true) == Catch::Approx(support_expected).margin(1e-15));
}

TEST_CASE("conditional standard deviation") {
  const MdpModel m = fixtures::symmetric_model();
  const StationaryPolicy pi{{0, 0}};
  const Vec sigma = conditional_std(m, pi, {1.0, 0.0});
  CHECK(sigma[0] == Catch::Approx(0.5).margin(1e-15));
  CHECK(sigma[1] == Catch::Approx(0.5).margin(1e-15));

  const Vec flat = conditional_std(m, pi, {2.0, 2.0});
  CHECK(flat[0] == 0.0);

  const MdpModel cyc = fixtures::cycle_model(3);
  const Vec det = conditional_std(cyc, StationaryPolicy{{0, 0, 0}}, {5.0, -1.0, 2.0});
  for (double s : det) CHECK(s == 0.0);
}

TEST_CASE("diameter oracles") {
  CHECK(diameter(fixtures::swap_model()) == Catch::Approx(1.0).margin(1e-9));
  CHECK(diameter(fixtures::cycle_model(4)) == Catch::Approx(3.0).margin(1e-9));
  CHECK(diameter(fixtures::symmetric_model()) == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("diameter is infinite when states cannot reach each other") {
  MdpModel m;
  m.n_states = 2;
  m.n_actions = 1;
  m.r_max = 1.0;
  m.transition = {1, 0, 0, 1};
  m.reward = {0, 0};
  m = validate_model(std::move(m));
  CHECK(std::isinf(diameter(m)));
}

TEST_CASE("diameter catches almost-sure-unreachable targets behind positive probability") {
  // From state 0 the single action flips a coin between the target and an
  // absorbing dead end, so no policy reaches the target with probability 1.
  MdpModel m;
  m.n_states = 3;
  m.n_actions = 1;
  m.r_max = 1.0;
  m.transition = {
      0.0, 0.5, 0.5,  // s0 -> target w.p. 1/2, dead end w.p. 1/2
      0.0, 1.0, 0.0,  // s1 absorbing (the target of interest)
      0.0, 0.0, 1.0,  // s2 absorbing dead end
  };
  m.reward = {0, 0, 0};
  m = validate_model(std::move(m));
  const Vec t = min_hitting_times(m, 1);
  CHECK(std::isinf(t[0]));
  CHECK(std::isinf(t[2]));
  CHECK(t[1] == 0.0);
}

TEST_CASE("diameter is invariant under state relabeling") {
  const MdpModel m = random_model(4, 2, 1.0, ModelStructure::communicating, 3);
  const std::vector<int> perm{2, 0, 3, 1};
  MdpModel relabeled = m;
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) {
      for (int s2 = 0; s2 < 4; ++s2)
        relabeled.transition[(static_cast<std::size_t>(perm[s]) * 2 + a) * 4 + perm[s2]] =
            m.p(s, a, s2);
      relabeled.reward[static_cast<std::size_t>(perm[s]) * 2 + a] = m.r(s, a);
    }
  relabeled = validate_model(std::move(relabeled));
  CHECK(diameter(m) == Catch::Approx(diameter(relabeled)).margin(1e-8));
}

TEST_CASE("sigma process prefix sums") {
  const Vec zero(3, 0.0);
  const Vec z = sigma_process({0, 1, 2, 0}, zero);
  for (double v : z) CHECK(v == 0.0);

  const Vec half(2, 0.5);
  std::vector<int> states(9, 0);
  const Vec s = sigma_process(states, half);
  CHECK(s[8] == Catch::Approx(2.0).margin(1e-15));

  const MdpModel m = fixtures::symmetric_model();
  const StationaryPolicy pi{{0, 0}};
  const Trajectory traj = simulate(m, pi, 100, 99);
  const Vec sig = conditional_std(m, pi, {1.0, 0.0});
  const Vec cum = sigma_process(traj.states, sig);
  CHECK(cum[100] == Catch::Approx(25.0).margin(1e-12));
  for (std::size_t t = 1; t < cum.size(); ++t) CHECK(cum[t] >= cum[t - 1]);
}

TEST_CASE("dispersion chain sigma <= K <= H on communicating models") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MdpModel m = random_model(2 + static_cast<int>(seed % 4), 2, 1.5,
                                    ModelStructure::communicating, seed);
    const double diam = diameter(m);
    REQUIRE(std::isfinite(diam));
    const StationaryPolicy pi = random_policy(m, seed, 7);
    REQUIRE(in_pi_ar(m, pi));
    const AverageEvalSolution sol = solve_arpe(m, pi);
    const DispersionStats stats = dispersion_stats(m, pi, sol.bias, diam);
    for (double s : stats.cond_std) CHECK(s <= stats.max_dev + 1e-12);
    CHECK(stats.max_dev <= stats.span + 1e-12);
    REQUIRE(stats.diameter_rmax.has_value());
    CHECK(*stats.diameter_rmax == Catch::Approx(diam * m.r_max).margin(1e-12));

    // The diameter product caps the span of optimal policies.
    AroeOptions opt;
    opt.check_class = false;
    const AverageOptimalSolution best = solve_aroe(m, opt);
    CHECK(value_span(best.bias) <= diam * m.r_max + 1e-9);
  }
}

TEST_CASE("span of a slow-mixing policy can exceed the diameter cap") {
  // Both states have a deterministic swap action, so the diameter is 1.
  // The sticky policy (stay w.p. 0.9 in each state) still has a unique gain,
  // but its bias span is 5: the diameter product bounds the span of optimal
  // policies, not of arbitrary gain-unique ones.
  MdpModel m;
  m.n_states = 2;
  m.n_actions = 2;
  m.r_max = 1.0;
  m.transition = {
      0.0, 1.0,  // s=0, swap
      0.9, 0.1,  // s=0, sticky
      1.0, 0.0,  // s=1, swap
      0.1, 0.9,  // s=1, sticky
  };
  m.reward = {1.0, 1.0, 0.0, 0.0};
  m = validate_model(std::move(m));
  REQUIRE(is_communicating(m));
  CHECK(diameter(m) == Catch::Approx(1.0).margin(1e-9));

  const StationaryPolicy sticky{{1, 1}};
  REQUIRE(in_pi_ar(m, sticky));
  const AverageEvalSolution sol = solve_arpe(m, sticky, 1);
  CHECK(sol.gain == Catch::Approx(0.5).margin(1e-10));
  CHECK(value_span(sol.bias) == Catch::Approx(5.0).margin(1e-9));
  CHECK(value_span(sol.bias) > diameter(m) * m.r_max);

  // The optimal policy's span does respect the cap.
  AroeOptions opt;
  opt.check_class = false;
  const AverageOptimalSolution best = solve_aroe(m, opt);
  CHECK(value_span(best.bias) <= diameter(m) * m.r_max + 1e-9);
}

TEST_CASE("dispersion statistics ignore constant shifts") {
  const MdpModel m = random_model(4, 2, 1.0, ModelStructure::unichain, 41);
  const StationaryPolicy pi = random_policy(m, 41, 3);
  const AverageEvalSolution sol = solve_arpe(m, pi);
  Vec shifted = sol.bias;
  for (double& v : shifted) v += 17.25;
  CHECK(value_span(shifted) == Catch::Approx(value_span(sol.bias)).margin(1e-12));
  CHECK(max_abs_deviation(m, pi, shifted) ==
        Catch::Approx(max_abs_deviation(m, pi, sol.bias)).margin(1e-12));
  const Vec s1 = conditional_std(m, pi, sol.bias);
  const Vec s2 = conditional_std(m, pi, shifted);
  for (int s = 0; s < m.n_states; ++s) CHECK(s1[s] == Catch::Approx(s2[s]).margin(1e-12));
}

TEST_CASE("finite-horizon dispersion basics") {
  // Constant rewards flatten every stage value.
  MdpModel flat = fixtures::symmetric_model();
  flat.reward = {0.5, 0.5, 0.5, 0.5};
  flat = validate_model(std::move(flat));
  FiniteHorizonPolicy pi;
  pi.stages.assign(4, StationaryPolicy{{0, 0}});
  const FiniteHorizonDispersion d = fh_dispersion(flat, pi, solve_fhpe(flat, pi));
  for (double k : d.k_per_stage) CHECK(k == 0.0);
  CHECK(d.g(3) == 0.0);

  // Symmetric model: every stage has K_t = 0.5, so g(T) = T for T <= h; the
  // terminal stage past the horizon contributes no variance.
  const MdpModel m = fixtures::symmetric_model();
  FiniteHorizonPolicy pi2;
  pi2.stages.assign(7, StationaryPolicy{{0, 0}});
  const FiniteHorizonDispersion d2 = fh_dispersion(m, pi2, solve_fhpe(m, pi2));
  for (int t = 0; t <= 6; ++t) CHECK(d2.k_per_stage[t] == Catch::Approx(0.5).margin(1e-12));
  for (int T = 1; T <= 6; ++T) CHECK(d2.g(T) == Catch::Approx(static_cast<double>(T)).margin(1e-9));
  CHECK(d2.g(7) == Catch::Approx(6.0).margin(1e-9));
}

TEST_CASE("effective sample size of a staircase profile") {
  FiniteHorizonDispersion d;
  d.horizon = 3;
  d.k_per_stage = {0.0, 1.0, 2.0, 3.0};
  d.h_per_stage = {0.0, 1.0, 2.0, 3.0};
  CHECK(d.k_bar(3) == 3.0);
  CHECK(d.g(3) == Catch::Approx(14.0 / 9.0).margin(1e-15));
  CHECK(d.g(2) == Catch::Approx(5.0 / 4.0).margin(1e-15));
  // g never exceeds T, and the running maxima are monotone.
  for (int T = 1; T <= 4; ++T) {
    CHECK(d.g(T) <= static_cast<double>(T));
    CHECK(d.k_bar(T) >= d.k_bar(T - 1));
  }
}

TEST_CASE("swap model h=1 stage deviations match direct enumeration") {
  const MdpModel m = fixtures::swap_model();
  FiniteHorizonPolicy pi;
  pi.stages.assign(2, StationaryPolicy{{0, 0}});
  const FiniteHorizonSolution sol = solve_fhpe(m, pi);
  CHECK(sol.values[1][0] == 1.0);
  CHECK(sol.values[1][1] == 0.0);
  const FiniteHorizonDispersion d = fh_dispersion(m, pi, sol);
  // Deterministic swap: conditional mean of V_1 at (s, pi_1(s)) is V_1 of
  // the other state; the worst pair deviation is |1 - 0| = 1.
  double expected = 0.0;
  for (int s = 0; s < 2; ++s) {
    const double mean = sol.values[1][1 - s];
    for (int sp = 0; sp < 2; ++sp)
      expected = std::max(expected, std::fabs(sol.values[1][sp] - mean));
  }
  CHECK(d.k_per_stage[1] == Catch::Approx(expected).margin(1e-15));
}
