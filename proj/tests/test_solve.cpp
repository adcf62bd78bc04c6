#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"

using namespace mdpconc;

TEST_CASE("average evaluation on the symmetric model") {
  const MdpModel m = fixtures::symmetric_model();
  const AverageEvalSolution sol = solve_arpe(m, StationaryPolicy{{0, 0}}, 1);
  CHECK(sol.gain == Catch::Approx(0.5).margin(1e-12));
  CHECK(sol.bias[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(sol.bias[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("constant reward gives gain c and flat bias") {
  MdpModel m = random_model(4, 2, 1.0, ModelStructure::unichain, 4);
  const double c = 0.75;
  for (double& r : m.reward) r = c;
  m = validate_model(std::move(m));
  for (const StationaryPolicy& pi : enumerate_policies(m, 100)) {
    const AverageEvalSolution sol = solve_arpe(m, pi);
    CHECK(sol.gain == Catch::Approx(c).margin(1e-10));
    for (double v : sol.bias) CHECK(std::fabs(v) < 1e-9);
  }
}

TEST_CASE("unequal class gains are rejected before solving") {
  CHECK_THROWS_AS(solve_arpe(fixtures::stay_swap_model(1.0, 0.0), StationaryPolicy{{0, 0}}),
                  NotInPiAR);
}

TEST_CASE("equal-gain multichain policies pass the gain check but the system is singular") {
  // Two absorbing states with the same reward: the gain is unique, but the
  // bias is not unique up to a single constant, so the pinned linear system
  // degenerates.
  const MdpModel m = fixtures::stay_swap_model(0.5, 0.5);
  const StationaryPolicy both_stay{{0, 0}};
  REQUIRE(in_pi_ar(m, both_stay));
  CHECK_THROWS_AS(solve_arpe(m, both_stay), SingularSystem);
}

TEST_CASE("evaluation residual stays below 1e-9 on random models") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MdpModel m = random_model(5, 3, 1.0, ModelStructure::unichain, seed);
    const StationaryPolicy pi = random_policy(m, seed, 0);
    const AverageEvalSolution sol = solve_arpe(m, pi);
    CHECK(arpe_residual(m, pi, sol.gain, sol.bias) <= 1e-9);
  }
}

TEST_CASE("bias is unique up to a constant across reference states") {
  const MdpModel m = random_model(5, 2, 1.0, ModelStructure::unichain, 17);
  const StationaryPolicy pi = random_policy(m, 17, 1);
  const AverageEvalSolution a = solve_arpe(m, pi, 0);
  const AverageEvalSolution b = solve_arpe(m, pi, 3);
  CHECK(a.gain == Catch::Approx(b.gain).margin(1e-10));
  const double shift = a.bias[0] - b.bias[0];
  for (int s = 0; s < m.n_states; ++s)
    CHECK(a.bias[s] - b.bias[s] == Catch::Approx(shift).margin(1e-9));
  // Downstream dispersion statistics are shift-invariant.
  CHECK(value_span(a.bias) == Catch::Approx(value_span(b.bias)).margin(1e-12));
  CHECK(max_abs_deviation(m, pi, a.bias) ==
        Catch::Approx(max_abs_deviation(m, pi, b.bias)).margin(1e-12));
  const Vec sa = conditional_std(m, pi, a.bias);
  const Vec sb = conditional_std(m, pi, b.bias);
  for (int s = 0; s < m.n_states; ++s) CHECK(sa[s] == Catch::Approx(sb[s]).margin(1e-12));
}

TEST_CASE("gain matches Cesaro power iteration") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const MdpModel m = random_model(4, 2, 1.0, ModelStructure::unichain, seed);
    const StationaryPolicy pi = random_policy(m, seed, 2);
    const AverageEvalSolution sol = solve_arpe(m, pi);
    CHECK(sol.gain == Catch::Approx(fixtures::power_iteration_gain(m, pi)).margin(1e-4));
  }
}

TEST_CASE("optimality: action-only rewards are maxed pointwise") {
  const MdpModel m = fixtures::action_reward_model(3, 3);
  const AverageOptimalSolution sol = solve_aroe(m);
  CHECK(sol.gain == Catch::Approx(1.0).margin(1e-8));
  for (const auto& actions : sol.greedy_actions) {
    REQUIRE(actions.size() == 1);
    CHECK(actions.front() == 2);
  }
}

TEST_CASE("optimality on the swap model") {
  const AverageOptimalSolution sol = solve_aroe(fixtures::swap_model());
  CHECK(sol.gain == Catch::Approx(0.5).margin(1e-8));
}

TEST_CASE("optimal gain equals the best enumerated policy gain") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const MdpModel m = random_model(4, 3, 1.0, ModelStructure::unichain, seed);
    const AverageOptimalSolution best = solve_aroe(m);
    double brute = -1.0;
    for (const StationaryPolicy& pi : enumerate_policies(m, 1000))
      brute = std::max(brute, solve_arpe(m, pi).gain);
    CHECK(best.gain == Catch::Approx(brute).margin(1e-6));
    // No enumerated policy beats the optimum.
    for (const StationaryPolicy& pi : enumerate_policies(m, 1000))
      CHECK(solve_arpe(m, pi).gain <= best.gain + 1e-6);
  }
}

TEST_CASE("greedy policies satisfy the evaluation equation at the optimum") {
  const MdpModel m = random_model(4, 2, 1.0, ModelStructure::unichain, 23);
  const AverageOptimalSolution best = solve_aroe(m);
  for (const StationaryPolicy& pi : best.optimal_policies)
    CHECK(arpe_residual(m, pi, best.gain, best.bias) <= 1e-7);
}

TEST_CASE("optimality-equation residual is tight at the fixed point") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const MdpModel m = random_model(5, 3, 1.0, ModelStructure::unichain, seed);
    AroeOptions opt;
    opt.check_class = false;
    const AverageOptimalSolution best = solve_aroe(m, opt);
    double residual = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
      double top = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.n_actions; ++a) {
        double q = m.r(s, a);
        for (int s2 = 0; s2 < m.n_states; ++s2) q += m.p(s, a, s2) * best.bias[s2];
        top = std::max(top, q);
      }
      residual = std::max(residual, std::fabs(best.gain + best.bias[s] - top));
    }
    CHECK(residual <= 1e-7);
  }
}

TEST_CASE("optimality refuses non weakly-communicating models without force") {
  // Two disconnected absorbing states cannot be weakly communicating.
  MdpModel m;
  m.n_states = 2;
  m.n_actions = 1;
  m.r_max = 1.0;
  m.transition = {1, 0, 0, 1};
  m.reward = {1.0, 0.0};
  m = validate_model(std::move(m));
  CHECK_THROWS_AS(solve_aroe(m), NotSolvableHint);
  AroeOptions opt;
  opt.force = true;
  opt.max_iter = 1000;
  CHECK_THROWS_AS(solve_aroe(m, opt), NoConvergence);  // gains differ, span never closes
}

TEST_CASE("discounted evaluation closed forms") {
  const MdpModel m = fixtures::symmetric_model();
  const StationaryPolicy pi{{0, 0}};

  // Constant reward: geometric series.
  MdpModel flat = m;
  flat.reward = {0.25, 0.25, 0.25, 0.25};
  flat = validate_model(std::move(flat));
  const DiscountedSolution c = solve_drpe(flat, pi, 0.5);
  for (double v : c.values) CHECK(v == Catch::Approx(0.5).margin(1e-12));

  // Hand 2x2 solve at gamma = 0.5: V0 = 1 + 0.25(V0+V1), V1 = 0.25(V0+V1)
  // gives (3/2, 1/2).
  const DiscountedSolution sol = solve_drpe(m, pi, 0.5);
  CHECK(sol.values[0] == Catch::Approx(1.5).margin(1e-12));
  CHECK(sol.values[1] == Catch::Approx(0.5).margin(1e-12));
  CHECK(drpe_residual(m, pi, 0.5, sol.values) <= 1e-10 * (1.0 + max_abs(sol.values)));

  // Vanishing discount of the horizon: values approach the one-step reward.
  const DiscountedSolution tiny = solve_drpe(m, pi, 1e-9);
  CHECK(tiny.values[0] == Catch::Approx(1.0).margin(1e-8));
  CHECK(tiny.values[1] == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("discounted optimality") {
  const MdpModel one = fixtures::one_state_model();
  const DiscountedOptimalSolution sol = solve_droe(one, 0.9);
  CHECK(sol.values[0] == Catch::Approx(10.0).margin(1e-9));
  REQUIRE(sol.greedy_actions[0].size() == 1);
  CHECK(sol.greedy_actions[0].front() == 1);

  MdpModel flat = fixtures::symmetric_model();
  flat.reward = {0.5, 0.5, 0.5, 0.5};
  flat = validate_model(std::move(flat));
  const DiscountedOptimalSolution c = solve_droe(flat, 0.8);
  for (double v : c.values) CHECK(v == Catch::Approx(2.5).margin(1e-9));
}

TEST_CASE("discounted optimum dominates every enumerated policy") {
  const MdpModel m = random_model(4, 3, 1.0, ModelStructure::dense, 31);
  const double gamma = 0.9;
  const DiscountedOptimalSolution best = solve_droe(m, gamma, 1e-10);
  const double cap = m.r_max / (1.0 - gamma);
  for (double v : best.values) {
    CHECK(v >= 0.0);
    CHECK(v <= cap + 1e-9);
  }
  for (const StationaryPolicy& pi : enumerate_policies(m, 1000)) {
    const DiscountedSolution eval = solve_drpe(m, pi, gamma);
    for (int s = 0; s < m.n_states; ++s) CHECK(eval.values[s] <= best.values[s] + 1e-8);
  }
}

TEST_CASE("finite-horizon recursions") {
  const MdpModel m = fixtures::swap_model();

  // h = 0 collapses to one-step reward maximization.
  const FiniteHorizonOptimalSolution h0 = solve_fhdp(m, 0);
  CHECK(h0.solution.values[0][0] == 1.0);
  CHECK(h0.solution.values[0][1] == 0.0);
  CHECK(h0.solution.values[1][0] == 0.0);

  // Swap model, h = 1: both starts collect exactly one unit.
  const FiniteHorizonOptimalSolution h1 = solve_fhdp(m, 1);
  CHECK(h1.solution.values[0][0] == Catch::Approx(1.0));
  CHECK(h1.solution.values[0][1] == Catch::Approx(1.0));

  // Constant reward sums across stages.
  MdpModel flat = fixtures::symmetric_model();
  flat.reward = {0.5, 0.5, 0.5, 0.5};
  flat = validate_model(std::move(flat));
  FiniteHorizonPolicy pi;
  pi.stages.assign(6, StationaryPolicy{{0, 0}});
  const FiniteHorizonSolution eval = solve_fhpe(flat, pi);
  for (double v : eval.values[0]) CHECK(v == Catch::Approx(3.0).margin(1e-12));
  for (double v : eval.values[6]) CHECK(v == 0.0);
}

TEST_CASE("finite-horizon optimum dominates enumerated stage policies") {
  const MdpModel m = random_model(3, 2, 1.0, ModelStructure::dense, 13);
  const int h = 2;
  const FiniteHorizonOptimalSolution best = solve_fhdp(m, h);
  const PolicyRange maps = enumerate_policies(m, 100);
  const std::uint64_t n_maps = maps.size();
  // All (n_maps)^(h+1) stagewise policies.
  for (std::uint64_t i = 0; i < n_maps * n_maps * n_maps; ++i) {
    FiniteHorizonPolicy pi;
    std::uint64_t code = i;
    for (int t = 0; t <= h; ++t) {
      pi.stages.push_back(maps.at(code % n_maps));
      code /= n_maps;
    }
    const FiniteHorizonSolution eval = solve_fhpe(m, pi);
    for (int t = 0; t <= h + 1; ++t)
      for (int s = 0; s < m.n_states; ++s)
        CHECK(eval.values[t][s] <= best.solution.values[t][s] + 1e-12);
  }
}

TEST_CASE("finite-horizon values equal brute-force path enumeration") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MdpModel m = random_model(3, 2, 1.0, ModelStructure::dense, seed);
    const FiniteHorizonOptimalSolution best = solve_fhdp(m, 2);
    for (int s = 0; s < m.n_states; ++s)
      CHECK(best.solution.values[0][s] ==
            Catch::Approx(fixtures::brute_force_fh_value(m, best.greedy, s)).margin(1e-10));
  }
}
