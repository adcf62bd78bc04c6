#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mdpconc/bounds.hpp"
#include "mdpconc/classify.hpp"
#include "mdpconc/model.hpp"
#include "mdpconc/rng.hpp"
#include "mdpconc/solve.hpp"
#include "mdpconc/stats.hpp"

namespace mdpconc {

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// One simulated sample path: states S_0..S_T, actions A_0..A_{T-1} and the
/// per-step rewards. Every transition taken has positive probability.
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;
  Vec rewards;
  std::uint64_t seed = 0;
  std::string policy_id;

  long long length() const { return static_cast<long long>(actions.size()); }
};

/// Start either at a fixed state or from a distribution over states.
struct InitialState {
  std::optional<int> fixed = 0;
  Vec dist;  // used when fixed is empty

  static InitialState at(int s) { return InitialState{s, {}}; }
  static InitialState from(Vec rho) { return InitialState{std::nullopt, std::move(rho)}; }
};

namespace detail {

// Inverse-CDF draw over a probability row, fixed state-index order, strict
// inequality advances. Falls back to the last positive entry if rounding
// pushes u past the accumulated mass.
inline int sample_index(const double* row, int n, double u) {
  double c = 0.0;
  int last_positive = -1;
  for (int i = 0; i < n; ++i) {
    const double p = row[i];
    if (p > 0.0) last_positive = i;
    c += p;
    if (u < c) return p > 0.0 ? i : last_positive;
  }
  return last_positive;
}

inline int draw_initial(const MdpModel& m, const InitialState& init, std::uint64_t seed) {
  if (init.fixed) {
    if (*init.fixed < 0 || *init.fixed >= m.n_states)
      throw DomainError("initial state out of range");
    return *init.fixed;
  }
  if (static_cast<int>(init.dist.size()) != m.n_states)
    throw DimensionMismatch("initial distribution length != n_states");
  return sample_index(init.dist.data(), m.n_states,
                      rng::uniform01(seed, rng::kStreamInitial, 0));
}

}  // namespace detail

/// Simulates T steps of a stationary policy. Deterministic in
/// (model, policy, T, seed, init) on every platform.
inline Trajectory simulate(const MdpModel& m, const StationaryPolicy& pi, long long T,
                           std::uint64_t seed, const InitialState& init = {}) {
  check_policy(m, pi);
  if (T < 1) throw DomainError("T must be >= 1");
  Trajectory traj;
  traj.seed = seed;
  traj.policy_id = "stationary";
  traj.states.reserve(T + 1);
  traj.actions.reserve(T);
  traj.rewards.reserve(T);
  int s = detail::draw_initial(m, init, seed);
  traj.states.push_back(s);
  for (long long t = 0; t < T; ++t) {
    const int a = pi(s);
    traj.actions.push_back(a);
    traj.rewards.push_back(m.r(s, a));
    const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t));
    const double* row = &m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states];
    s = detail::sample_index(row, m.n_states, u);
    traj.states.push_back(s);
  }
  return traj;
}

/// Simulates T <= h+1 steps of a finite-horizon policy.
inline Trajectory simulate_fh(const MdpModel& m, const FiniteHorizonPolicy& pi, long long T,
                              std::uint64_t seed, const InitialState& init = {}) {
  check_policy(m, pi);
  if (T < 1) throw DomainError("T must be >= 1");
  if (T > static_cast<long long>(pi.horizon()) + 1)
    throw HorizonExceeded("T exceeds horizon+1");
  Trajectory traj;
  traj.seed = seed;
  traj.policy_id = "finite_horizon";
  int s = detail::draw_initial(m, init, seed);
  traj.states.push_back(s);
  for (long long t = 0; t < T; ++t) {
    const int a = pi.act(static_cast<int>(t), s);
    traj.actions.push_back(a);
    traj.rewards.push_back(m.r(s, a));
    const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t));
    const double* row = &m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states];
    s = detail::sample_index(row, m.n_states, u);
    traj.states.push_back(s);
  }
  return traj;
}

/// History-dependent decision rule. `u` is a fresh uniform draw the policy
/// may consume for randomization; deterministic learners ignore it.
class LearningPolicy {
 public:
  virtual ~LearningPolicy() = default;
  virtual int act(const MdpModel& m, const std::vector<int>& states,
                  const std::vector<int>& actions, double u) = 0;
  virtual std::string id() const = 0;
};

class UniformRandomLearner final : public LearningPolicy {
 public:
  int act(const MdpModel& m, const std::vector<int>&, const std::vector<int>&,
          double u) override {
    return std::min(m.n_actions - 1, static_cast<int>(u * m.n_actions));
  }
  std::string id() const override { return "uniform_random"; }
};

class StationaryLearner final : public LearningPolicy {
 public:
  explicit StationaryLearner(StationaryPolicy pi) : pi_(std::move(pi)) {}
  int act(const MdpModel&, const std::vector<int>& states, const std::vector<int>&,
          double) override {
    return pi_(states.back());
  }
  std::string id() const override { return "stationary"; }

 private:
  StationaryPolicy pi_;
};

inline Trajectory simulate_learning(const MdpModel& m, LearningPolicy& learner, long long T,
                                    std::uint64_t seed, const InitialState& init = {}) {
  if (T < 1) throw DomainError("T must be >= 1");
  Trajectory traj;
  traj.seed = seed;
  traj.policy_id = learner.id();
  int s = detail::draw_initial(m, init, seed);
  traj.states.push_back(s);
  for (long long t = 0; t < T; ++t) {
    const double ua = rng::uniform01(seed, rng::kStreamLearner, static_cast<std::uint64_t>(t));
    int a = learner.act(m, traj.states, traj.actions, ua);
    if (a < 0 || a >= m.n_actions) throw InvalidPolicy("learning policy chose invalid action");
    traj.actions.push_back(a);
    traj.rewards.push_back(m.r(s, a));
    const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t));
    const double* row = &m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states];
    s = detail::sample_index(row, m.n_states, u);
    traj.states.push_back(s);
  }
  return traj;
}

inline double cumulative_reward(const Trajectory& traj) {
  double acc = 0.0;
  for (double r : traj.rewards) acc += r;
  return acc;
}

inline double discounted_reward(const Trajectory& traj, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  double acc = 0.0;
  for (std::size_t t = 0; t < traj.rewards.size(); ++t)
    acc += std::pow(gamma, static_cast<double>(t)) * traj.rewards[t];
  return acc;
}

// ---------------------------------------------------------------------------
// Martingale traces
// ---------------------------------------------------------------------------

/// The martingale-difference terms extracted from a trajectory, their
/// partial sums, and the predictable variance process.
struct MartingaleTrace {
  Vec m;             // MDS terms, index t = 1..T stored at [t-1]
  Vec partial_sums;  // [t] = sum of m up to index t, length T+1, [0]=0
  Vec sigma_cum;     // [t] = sum of conditional variances, length T+1
};

constexpr double kEvalResidualTol = 1e-6;

/// Surprise terms of the gain/bias evaluation identity:
/// m_t = V(S_t) - E[V(S_t)|S_{t-1}, pi(S_{t-1})].
inline MartingaleTrace martingale_trace_average(const MdpModel& m, const StationaryPolicy& pi,
                                                const AverageEvalSolution& sol,
                                                const Trajectory& traj) {
  const double res = arpe_residual(m, pi, sol.gain, sol.bias);
  if (res > kEvalResidualTol)
    throw InconsistentValueFunction("gain/bias pair does not solve the evaluation equation", res);
  const Vec mean = conditional_mean(m, pi, sol.bias);
  const Vec sigma = conditional_std(m, pi, sol.bias);
  const long long T = traj.length();
  MartingaleTrace out;
  out.m.resize(T);
  out.partial_sums.assign(T + 1, 0.0);
  out.sigma_cum.assign(T + 1, 0.0);
  for (long long t = 1; t <= T; ++t) {
    const int prev = traj.states[t - 1];
    out.m[t - 1] = sol.bias[traj.states[t]] - mean[prev];
    out.partial_sums[t] = out.partial_sums[t - 1] + out.m[t - 1];
    out.sigma_cum[t] = out.sigma_cum[t - 1] + sigma[prev] * sigma[prev];
  }
  return out;
}

/// Discounted flavor: terms are gamma^t N_t with
/// N_t = V_gamma(S_t) - E[V_gamma(S_t)|S_{t-1}, pi(S_{t-1})].
inline MartingaleTrace martingale_trace_discounted(const MdpModel& m, const StationaryPolicy& pi,
                                                   const DiscountedSolution& sol,
                                                   const Trajectory& traj) {
  const double res = drpe_residual(m, pi, sol.gamma, sol.values);
  if (res > kEvalResidualTol)
    throw InconsistentValueFunction("discounted values do not solve the evaluation equation", res);
  const Vec mean = conditional_mean(m, pi, sol.values);
  const Vec sigma = conditional_std(m, pi, sol.values);
  const long long T = traj.length();
  MartingaleTrace out;
  out.m.resize(T);
  out.partial_sums.assign(T + 1, 0.0);
  out.sigma_cum.assign(T + 1, 0.0);
  for (long long t = 1; t <= T; ++t) {
    const int prev = traj.states[t - 1];
    const double scale = std::pow(sol.gamma, static_cast<double>(t));
    out.m[t - 1] = scale * (sol.values[traj.states[t]] - mean[prev]);
    out.partial_sums[t] = out.partial_sums[t - 1] + out.m[t - 1];
    out.sigma_cum[t] = out.sigma_cum[t - 1] + scale * scale * sigma[prev] * sigma[prev];
  }
  return out;
}

/// Finite-horizon flavor: terms are
/// W_t = V_t(S_t) - E[V_t(S_t)|S_{t-1}, pi_{t-1}(S_{t-1})].
inline MartingaleTrace martingale_trace_fh(const MdpModel& m, const FiniteHorizonPolicy& pi,
                                           const FiniteHorizonSolution& sol,
                                           const Trajectory& traj) {
  if (pi.horizon() != sol.horizon) throw DimensionMismatch("policy and solution horizons differ");
  const long long T = traj.length();
  if (T > static_cast<long long>(sol.horizon) + 1) throw HorizonExceeded("trajectory longer than horizon+1");
  // Stage-consistency proxy for the recursion: one backward sweep must
  // reproduce the given values.
  {
    double worst = 0.0;
    for (int t = 0; t <= sol.horizon; ++t) {
      for (int s = 0; s < m.n_states; ++s) {
        const int a = pi.act(t, s);
        double q = m.r(s, a);
        for (int s2 = 0; s2 < m.n_states; ++s2) q += m.p(s, a, s2) * sol.values[t + 1][s2];
        worst = std::max(worst, std::fabs(q - sol.values[t][s]));
      }
      if (worst > kEvalResidualTol) break;
    }
    if (worst > kEvalResidualTol)
      throw InconsistentValueFunction("stage values do not satisfy the recursion", worst);
  }
  MartingaleTrace out;
  out.m.resize(T);
  out.partial_sums.assign(T + 1, 0.0);
  out.sigma_cum.assign(T + 1, 0.0);
  for (long long t = 1; t <= T; ++t) {
    const int prev = traj.states[t - 1];
    const int a = pi.act(static_cast<int>(t) - 1, prev);
    const Vec& vt = sol.values[t];
    double mean = 0.0, var = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) mean += m.p(prev, a, s2) * vt[s2];
    for (int s2 = 0; s2 < m.n_states; ++s2) {
      const double d = vt[s2] - mean;
      var += m.p(prev, a, s2) * d * d;
    }
    out.m[t - 1] = vt[traj.states[t]] - mean;
    out.partial_sums[t] = out.partial_sums[t - 1] + out.m[t - 1];
    out.sigma_cum[t] = out.sigma_cum[t - 1] + var;
  }
  return out;
}

// Absolute gaps of the three reward decompositions; zero up to rounding on
// every simulated path.
inline double decomposition_gap_average(const Trajectory& traj, const AverageEvalSolution& sol,
                                        const MartingaleTrace& trace) {
  const long long T = traj.length();
  const double lhs = cumulative_reward(traj) - static_cast<double>(T) * sol.gain -
                     trace.partial_sums[T] -
                     (sol.bias[traj.states.front()] - sol.bias[traj.states.back()]);
  return std::fabs(lhs);
}

inline double decomposition_gap_discounted(const Trajectory& traj, const DiscountedSolution& sol,
                                           const MartingaleTrace& trace) {
  const long long T = traj.length();
  const double tail = std::pow(sol.gamma, static_cast<double>(T)) * sol.values[traj.states.back()];
  const double lhs = discounted_reward(traj, sol.gamma) - trace.partial_sums[T] -
                     (sol.values[traj.states.front()] - tail);
  return std::fabs(lhs);
}

inline double decomposition_gap_fh(const Trajectory& traj, const FiniteHorizonSolution& sol,
                                   const MartingaleTrace& trace) {
  const long long T = traj.length();
  const double lhs = cumulative_reward(traj) - trace.partial_sums[T] -
                     (sol.values[0][traj.states.front()] - sol.values[T][traj.states.back()]);
  return std::fabs(lhs);
}

// ---------------------------------------------------------------------------
// Parallel run fan-out
// ---------------------------------------------------------------------------

/// Worker cap: MDPCONC_THREADS when set, hardware concurrency otherwise.
inline int worker_count(long long n_tasks) {
  int cap = 0;
  if (const char* env = std::getenv("MDPCONC_THREADS")) cap = std::atoi(env);
  if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap <= 0) cap = 1;
  return static_cast<int>(std::min<long long>(cap, std::max<long long>(1, n_tasks)));
}

/// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
/// merging order never affects them.
template <class Fn>
inline void parallel_runs(long long n, Fn&& fn) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const long long i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

namespace detail {

inline std::array<double, 5> quantile_summary(Vec values) {
  std::array<double, 5> q{0, 0, 0, 0, 0};
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  const auto pick = [&](double p) {
    const std::size_t i = static_cast<std::size_t>(p * (values.size() - 1));
    return values[i];
  };
  q = {values.front(), pick(0.25), pick(0.5), pick(0.75), values.back()};
  return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Coverage experiments
// ---------------------------------------------------------------------------

enum class Reading { per_T, uniform };

/// Empirical violation counting for one bound on seeded trajectory
/// ensembles. Deterministic in (inputs, base seed).
struct CoverageReport {
  std::string bound_kind;
  double delta = 0.0;
  long long T = 0;
  long long n_runs = 0;
  long long violations = 0;
  double coverage = 1.0;
  bool applicable = true;
  std::optional<long long> threshold_T0;
  std::array<double, 5> margin_quantiles{};  // min, q25, median, q75, max of rhs-lhs
};

namespace detail {

struct RhsTable {
  Vec rhs;          // index t, valid for t in [t_begin, T]
  long long t_begin = 1;
};

template <class BoundAt>
inline RhsTable build_rhs(long long T, Reading reading, BoundAt&& bound_at) {
  RhsTable table;
  table.rhs.assign(static_cast<std::size_t>(T) + 1, 0.0);
  const BoundResult at_T = bound_at(T);
  if (!at_T.applicable)
    throw DomainError("bound not applicable at T (threshold not yet reached)");
  if (reading == Reading::per_T) {
    table.t_begin = T;
    table.rhs[T] = at_T.value;
    return table;
  }
  table.t_begin = at_T.threshold_T0 ? std::max<long long>(1, *at_T.threshold_T0) : 1;
  for (long long t = table.t_begin; t <= T; ++t) table.rhs[t] = bound_at(t).value;
  return table;
}

template <class LhsWalk, class BoundAt>
inline CoverageReport run_coverage(BoundKind kind, double delta, long long T, long long n_runs,
                                   Reading reading, BoundAt&& bound_at, LhsWalk&& lhs_walk) {
  if (n_runs < 1) throw DomainError("n_runs must be >= 1");
  const RhsTable table = build_rhs(T, reading, bound_at);

  std::vector<char> violated(n_runs, 0);
  Vec margins(n_runs, 0.0);
  parallel_runs(n_runs, [&](long long run) {
    double worst_margin = std::numeric_limits<double>::infinity();
    bool bad = false;
    lhs_walk(run, [&](long long t, double lhs) {
      if (t < table.t_begin) return;
      const double margin = table.rhs[t] - lhs;
      worst_margin = std::min(worst_margin, margin);
      if (margin < 0.0) bad = true;
    });
    violated[run] = bad ? 1 : 0;
    margins[run] = worst_margin;
  });

  CoverageReport report;
  report.bound_kind = to_string(kind);
  report.delta = delta;
  report.T = T;
  report.n_runs = n_runs;
  for (char v : violated) report.violations += v;
  report.coverage = 1.0 - static_cast<double>(report.violations) / static_cast<double>(n_runs);
  const BoundResult at_T = bound_at(T);
  report.applicable = at_T.applicable;
  report.threshold_T0 = at_T.threshold_T0;
  report.margin_quantiles = quantile_summary(std::move(margins));
  return report;
}

}  // namespace detail

/// Average-reward family: centered/uncentered single-policy bounds,
/// policy-independent forms (need d_rmax = D * r_max), and the regret-gap
/// forms (policy must then be an optimal one; the gap statistic
/// R_T - T * gain is learner-independent).
inline CoverageReport coverage_experiment_average(
    const MdpModel& m, const StationaryPolicy& pi, const AverageEvalSolution& sol,
    BoundKind kind, double delta, long long T, long long n_runs, std::uint64_t base_seed,
    Reading reading = Reading::per_T, const InitialState& init = {},
    bool conservative = false, std::optional<double> d_rmax = std::nullopt) {
  const DispersionStats stats = dispersion_stats(m, pi, sol.bias);
  const bool centered =
      kind == BoundKind::azuma_centered || kind == BoundKind::lil_centered;

  BoundParams params;
  params.k = stats.max_dev;
  params.h = stats.span;
  params.conservative = conservative;
  if (d_rmax) {
    params.diam = *d_rmax / m.r_max;
    params.r_max = m.r_max;
  }
  auto bound_at = [&](long long t) { return evaluate_bound(kind, params, t, delta); };

  auto lhs_walk = [&](long long run, auto&& emit) {
    const std::uint64_t seed = rng::run_seed(base_seed, static_cast<std::uint64_t>(run));
    int s = detail::draw_initial(m, init, seed);
    const int s0 = s;
    double reward_sum = 0.0;
    for (long long t = 1; t <= T; ++t) {
      const int a = pi(s);
      reward_sum += m.r(s, a);
      const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t - 1));
      const double* row = &m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states];
      s = detail::sample_index(row, m.n_states, u);
      const double drift = reward_sum - static_cast<double>(t) * sol.gain;
      const double lhs = centered ? std::fabs(drift - (sol.bias[s0] - sol.bias[s]))
                                  : std::fabs(drift);
      emit(t, lhs);
    }
  };
  return detail::run_coverage(kind, delta, T, n_runs, reading, bound_at, lhs_walk);
}

/// Two-trajectory kinds over the average-reward family. For two_policy the
/// statistic is | |R1-R2| - T|J1-J2| |; for two_optimal it is |R1-R2|.
inline CoverageReport coverage_experiment_two_policy(
    const MdpModel& m, const StationaryPolicy& pi1, const AverageEvalSolution& sol1,
    const StationaryPolicy& pi2, const AverageEvalSolution& sol2, BoundKind kind,
    double delta, long long T, long long n_runs, std::uint64_t base_seed,
    Reading reading = Reading::per_T, const InitialState& init = {},
    bool conservative = false) {
  const DispersionStats st1 = dispersion_stats(m, pi1, sol1.bias);
  const DispersionStats st2 = dispersion_stats(m, pi2, sol2.bias);
  BoundParams params;
  params.k = st1.max_dev;
  params.h = st1.span;
  params.k2 = st2.max_dev;
  params.h2 = st2.span;
  params.conservative = conservative;
  auto bound_at = [&](long long t) { return evaluate_bound(kind, params, t, delta); };

  const bool optimal_pair =
      kind == BoundKind::two_optimal_azuma || kind == BoundKind::two_optimal_lil;
  auto lhs_walk = [&](long long run, auto&& emit) {
    const std::uint64_t seed1 = rng::run_seed(base_seed, 2 * static_cast<std::uint64_t>(run));
    const std::uint64_t seed2 = rng::run_seed(base_seed, 2 * static_cast<std::uint64_t>(run) + 1);
    int s1 = detail::draw_initial(m, init, seed1);
    int s2 = detail::draw_initial(m, init, seed2);
    double r1 = 0.0, r2 = 0.0;
    for (long long t = 1; t <= T; ++t) {
      const int a1 = pi1(s1), a2 = pi2(s2);
      r1 += m.r(s1, a1);
      r2 += m.r(s2, a2);
      const double u1 = rng::uniform01(seed1, rng::kStreamTransition, static_cast<std::uint64_t>(t - 1));
      const double u2 = rng::uniform01(seed2, rng::kStreamTransition, static_cast<std::uint64_t>(t - 1));
      s1 = detail::sample_index(&m.transition[(static_cast<std::size_t>(s1) * m.n_actions + a1) * m.n_states], m.n_states, u1);
      s2 = detail::sample_index(&m.transition[(static_cast<std::size_t>(s2) * m.n_actions + a2) * m.n_states], m.n_states, u2);
      const double diff = std::fabs(r1 - r2);
      const double lhs = optimal_pair
                             ? diff
                             : std::fabs(diff - static_cast<double>(t) * std::fabs(sol1.gain - sol2.gain));
      emit(t, lhs);
    }
  };
  return detail::run_coverage(kind, delta, T, n_runs, reading, bound_at, lhs_walk);
}

/// Discounted family: centered bounds around V(S_0) - gamma^T V(S_T),
/// uncentered around V(S_0).
inline CoverageReport coverage_experiment_discounted(
    const MdpModel& m, const StationaryPolicy& pi, const DiscountedSolution& sol,
    BoundKind kind, double delta, long long T, long long n_runs, std::uint64_t base_seed,
    Reading reading = Reading::per_T, const InitialState& init = {},
    bool conservative = false) {
  const double k_gamma = max_abs_deviation(m, pi, sol.values);
  BoundParams params;
  params.k = k_gamma;
  params.gamma = sol.gamma;
  params.r_max = m.r_max;
  params.conservative = conservative;
  auto bound_at = [&](long long t) { return evaluate_bound(kind, params, t, delta); };

  const bool centered =
      kind == BoundKind::disc_azuma || kind == BoundKind::disc_lil;
  auto lhs_walk = [&](long long run, auto&& emit) {
    const std::uint64_t seed = rng::run_seed(base_seed, static_cast<std::uint64_t>(run));
    int s = detail::draw_initial(m, init, seed);
    const int s0 = s;
    double disc_sum = 0.0;
    for (long long t = 1; t <= T; ++t) {
      const int a = pi(s);
      disc_sum += std::pow(sol.gamma, static_cast<double>(t - 1)) * m.r(s, a);
      const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t - 1));
      s = detail::sample_index(&m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states], m.n_states, u);
      const double tail = std::pow(sol.gamma, static_cast<double>(t)) * sol.values[s];
      const double lhs = centered ? std::fabs(disc_sum - (sol.values[s0] - tail))
                                  : std::fabs(disc_sum - sol.values[s0]);
      emit(t, lhs);
    }
  };
  return detail::run_coverage(kind, delta, T, n_runs, reading, bound_at, lhs_walk);
}

/// Finite-horizon family: centered bounds around V_0(S_0) - V_T(S_T),
/// uncentered around V_0(S_0).
inline CoverageReport coverage_experiment_fh(
    const MdpModel& m, const FiniteHorizonPolicy& pi, const FiniteHorizonSolution& sol,
    BoundKind kind, double delta, long long T, long long n_runs, std::uint64_t base_seed,
    Reading reading = Reading::per_T, const InitialState& init = {},
    bool conservative = false) {
  const FiniteHorizonDispersion disp = fh_dispersion(m, pi, sol);
  BoundParams params;
  params.fh = &disp;
  params.conservative = conservative;
  auto bound_at = [&](long long t) { return evaluate_bound(kind, params, t, delta); };

  const bool centered = kind == BoundKind::fh_azuma || kind == BoundKind::fh_lil;
  auto lhs_walk = [&](long long run, auto&& emit) {
    const std::uint64_t seed = rng::run_seed(base_seed, static_cast<std::uint64_t>(run));
    int s = detail::draw_initial(m, init, seed);
    const double v0 = sol.values[0][s];
    double reward_sum = 0.0;
    for (long long t = 1; t <= T; ++t) {
      const int a = pi.act(static_cast<int>(t) - 1, s);
      reward_sum += m.r(s, a);
      const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t - 1));
      s = detail::sample_index(&m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states], m.n_states, u);
      const double lhs = centered ? std::fabs(reward_sum - (v0 - sol.values[t][s]))
                                  : std::fabs(reward_sum - v0);
      emit(t, lhs);
    }
  };
  return detail::run_coverage(kind, delta, T, n_runs, reading, bound_at, lhs_walk);
}

// ---------------------------------------------------------------------------
// Law-of-large-numbers / CLT / LIL experiments
// ---------------------------------------------------------------------------

struct LlnReport {
  double max_abs_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  long long T = 0;
  long long n_runs = 0;
};

inline LlnReport lln_experiment(const MdpModel& m, const StationaryPolicy& pi,
                                const AverageEvalSolution& sol, long long T, long long n_runs,
                                std::uint64_t base_seed, double tolerance,
                                const InitialState& init = {}) {
  if (T < 1 || n_runs < 1) throw DomainError("T and n_runs must be >= 1");
  Vec deviations(n_runs, 0.0);
  parallel_runs(n_runs, [&](long long run) {
    const std::uint64_t seed = rng::run_seed(base_seed, static_cast<std::uint64_t>(run));
    int s = detail::draw_initial(m, init, seed);
    double reward_sum = 0.0;
    for (long long t = 0; t < T; ++t) {
      const int a = pi(s);
      reward_sum += m.r(s, a);
      const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t));
      s = detail::sample_index(&m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states], m.n_states, u);
    }
    deviations[run] = std::fabs(reward_sum / static_cast<double>(T) - sol.gain);
  });
  LlnReport report;
  report.T = T;
  report.n_runs = n_runs;
  report.tolerance = tolerance;
  for (double d : deviations) report.max_abs_deviation = std::max(report.max_abs_deviation, d);
  report.pass = report.max_abs_deviation < tolerance;
  return report;
}

namespace detail {

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Kolmogorov-Smirnov distance of a sample against the standard normal.
inline double ks_to_std_normal(Vec sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = std_normal_cdf(sample[i]);
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - cdf));
  }
  return d;
}

// The variance clock must be able to grow: some state of every recurrent
// class needs sigma > 0.
inline void require_sigma_nondegenerate(const MdpModel& m, const StationaryPolicy& pi,
                                        const Vec& sigma) {
  const auto structure = classify_chain(induced_chain(m, pi));
  for (const auto& cls : structure.recurrent_classes) {
    bool any = false;
    for (int s : cls) any |= sigma[s] > 0.0;
    if (!any)
      throw SigmaDegenerate("conditional variance vanishes on a recurrent class");
  }
}

}  // namespace detail

struct CltReport {
  double ks_distance = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double t_level = 0.0;
  long long n_samples = 0;
};

/// Samples the normalized reward at the stopping time where the cumulative
/// conditional variance first reaches t_level, and reports the KS distance
/// of the sample to the standard normal.
inline CltReport clt_experiment(const MdpModel& m, const StationaryPolicy& pi,
                                const AverageEvalSolution& sol, double t_level,
                                long long n_samples, std::uint64_t base_seed,
                                double tolerance = 0.05, const InitialState& init = {}) {
  if (!(t_level > 0.0)) throw DomainError("t_level must be > 0");
  if (n_samples < 1) throw DomainError("n_samples must be >= 1");
  const Vec sigma = conditional_std(m, pi, sol.bias);
  detail::require_sigma_nondegenerate(m, pi, sigma);
  double sigma_min_sq = std::numeric_limits<double>::infinity();
  for (double s : sigma)
    if (s > 0.0) sigma_min_sq = std::min(sigma_min_sq, s * s);
  const long long cap = static_cast<long long>(100.0 * t_level / sigma_min_sq);

  Vec sample(n_samples, 0.0);
  std::atomic<bool> degenerate{false};
  parallel_runs(n_samples, [&](long long run) {
    const std::uint64_t seed = rng::run_seed(base_seed, static_cast<std::uint64_t>(run));
    int s = detail::draw_initial(m, init, seed);
    double reward_sum = 0.0, clock = 0.0;
    long long t = 0;
    while (clock < t_level) {
      if (t >= cap) { degenerate.store(true); return; }
      const int a = pi(s);
      reward_sum += m.r(s, a);
      clock += sigma[s] * sigma[s];
      const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t));
      s = detail::sample_index(&m.transition[(static_cast<std::size_t>(s) * m.n_actions + a) * m.n_states], m.n_states, u);
      ++t;
    }
    sample[run] = (reward_sum - static_cast<double>(t) * sol.gain) / std::sqrt(t_level);
  });
  if (degenerate.load())
    throw SigmaDegenerate("stopping time exceeded cap " + std::to_string(cap));

  CltReport report;
  report.t_level = t_level;
  report.n_samples = n_samples;
  report.tolerance = tolerance;
  report.ks_distance = detail::ks_to_std_normal(std::move(sample));
  report.pass = report.ks_distance < tolerance;
  return report;
}

struct LilReport {
  double sup_ratio = 0.0;
  double lo = 0.5, hi = 1.5;  // heuristic envelope, never a hard gate
  bool within = false;
  long long T_max = 0;
  long long n_runs = 0;
  double eval_start = 0.0;  // variance-clock level where evaluation begins
};

/// Running-ratio supremum |sum m_t| / sqrt(2 S_t loglog S_t) over all runs
/// and times with variance clock S_t >= eval_start. The envelope check is a
/// finite-time heuristic for an asymptotic statement and is reported, never
/// enforced. eval_start below e^e is clamped: the denominator degenerates
/// as loglog approaches zero.
inline LilReport lil_envelope_experiment(const MdpModel& m, const StationaryPolicy& pi,
                                         const AverageEvalSolution& sol, long long T_max,
                                         long long n_runs, std::uint64_t base_seed,
                                         double lo = 0.5, double hi = 1.5,
                                         double eval_start = 15.15426224147926,
                                         const InitialState& init = {}) {
  if (T_max < 1 || n_runs < 1) throw DomainError("T_max and n_runs must be >= 1");
  const Vec sigma = conditional_std(m, pi, sol.bias);
  detail::require_sigma_nondegenerate(m, pi, sigma);
  const double start = std::max(eval_start, std::exp(std::exp(1.0)));
  const Vec mean = conditional_mean(m, pi, sol.bias);

  Vec sup_per_run(n_runs, 0.0);
  parallel_runs(n_runs, [&](long long run) {
    const std::uint64_t seed = rng::run_seed(base_seed, static_cast<std::uint64_t>(run));
    int s = detail::draw_initial(m, init, seed);
    double msum = 0.0, clock = 0.0, sup = 0.0;
    for (long long t = 1; t <= T_max; ++t) {
      const int prev = s;
      const double u = rng::uniform01(seed, rng::kStreamTransition, static_cast<std::uint64_t>(t - 1));
      s = detail::sample_index(&m.transition[(static_cast<std::size_t>(prev) * m.n_actions + pi(prev)) * m.n_states], m.n_states, u);
      msum += sol.bias[s] - mean[prev];
      clock += sigma[prev] * sigma[prev];
      if (clock >= start) {
        const double denom = std::sqrt(2.0 * clock * std::log(std::log(clock)));
        sup = std::max(sup, std::fabs(msum) / denom);
      }
    }
    sup_per_run[run] = sup;
  });

  LilReport report;
  report.T_max = T_max;
  report.n_runs = n_runs;
  report.lo = lo;
  report.hi = hi;
  report.eval_start = start;
  for (double s : sup_per_run) report.sup_ratio = std::max(report.sup_ratio, s);
  report.within = report.sup_ratio > lo && report.sup_ratio < hi;
  return report;
}

// ---------------------------------------------------------------------------
// Regret-gap experiment
// ---------------------------------------------------------------------------

struct RegretGapReport {
  long long n_runs = 0;
  long long T = 0;
  double delta = 0.0;
  long long violations = 0;
  double coverage = 1.0;
  double max_identity_gap = 0.0;  // |(cumulative - interim) - gap| over runs
  double max_gap_over_T = 0.0;    // sup |D_T| / T, sublinearity diagnostic
  double max_gap_lil_ratio = 0.0; // sup |D_T| / sqrt(2 T loglog T)
  std::string learner_id;
  std::string bound_kind;
};

/// Simulates the optimal policy and a learning policy on independent seeds,
/// checks the regret-gap identity, and counts violations of the requested
/// gap bound. The gap R*_T - T*gain is the same for every learner.
inline RegretGapReport regret_gap_experiment(
    const MdpModel& m, const AverageOptimalSolution& opt,
    const std::function<std::unique_ptr<LearningPolicy>()>& make_learner, BoundKind kind,
    double delta, long long T, long long n_runs, std::uint64_t base_seed,
    const InitialState& init = {}, bool conservative = false,
    std::optional<double> d_rmax = std::nullopt) {
  if (T < 1 || n_runs < 1) throw DomainError("T and n_runs must be >= 1");
  const StationaryPolicy pi_star = opt.optimal_policies.front();
  AverageEvalSolution sol{opt.gain, opt.bias, opt.ref_state};
  const DispersionStats stats = dispersion_stats(m, pi_star, sol.bias);
  BoundParams params;
  params.k = stats.max_dev;
  params.h = stats.span;
  params.conservative = conservative;
  if (d_rmax) {
    params.diam = *d_rmax / m.r_max;
    params.r_max = m.r_max;
  }
  const BoundResult bound = evaluate_bound(kind, params, T, delta);
  if (!bound.applicable) throw DomainError("bound not applicable at T");

  std::vector<char> violated(n_runs, 0);
  Vec identity_gaps(n_runs, 0.0), gaps(n_runs, 0.0);
  std::string learner_id;
  {
    auto probe = make_learner();
    learner_id = probe->id();
  }
  parallel_runs(n_runs, [&](long long run) {
    const std::uint64_t seed_star = rng::run_seed(base_seed, 2 * static_cast<std::uint64_t>(run));
    const std::uint64_t seed_mu = rng::run_seed(base_seed, 2 * static_cast<std::uint64_t>(run) + 1);
    const Trajectory star = simulate(m, pi_star, T, seed_star, init);
    auto learner = make_learner();
    const Trajectory mu = simulate_learning(m, *learner, T, seed_mu, init);
    const double r_star = cumulative_reward(star);
    const double r_mu = cumulative_reward(mu);
    const double gap = r_star - static_cast<double>(T) * opt.gain;
    const double cumulative = r_star - r_mu;
    const double interim = static_cast<double>(T) * opt.gain - r_mu;
    identity_gaps[run] = std::fabs((cumulative - interim) - gap);
    gaps[run] = gap;
    violated[run] = std::fabs(gap) > bound.value ? 1 : 0;
  });

  RegretGapReport report;
  report.n_runs = n_runs;
  report.T = T;
  report.delta = delta;
  report.learner_id = learner_id;
  report.bound_kind = to_string(kind);
  for (char v : violated) report.violations += v;
  report.coverage = 1.0 - static_cast<double>(report.violations) / static_cast<double>(n_runs);
  for (double g : identity_gaps) report.max_identity_gap = std::max(report.max_identity_gap, g);
  const double tf = static_cast<double>(T);
  const double lil_denom = tf > std::exp(std::exp(1.0))
                               ? std::sqrt(2.0 * tf * std::log(std::log(tf)))
                               : std::sqrt(tf);
  for (double g : gaps) {
    report.max_gap_over_T = std::max(report.max_gap_over_T, std::fabs(g) / tf);
    report.max_gap_lil_ratio = std::max(report.max_gap_lil_ratio, std::fabs(g) / lil_denom);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Vanishing-discount diagnostics
// ---------------------------------------------------------------------------

struct VanishingDiscountRow {
  double gamma = 0.0;
  double f_value = 0.0;
  double k_gamma = 0.0;
  double disc_azuma = 0.0;
  double disc_lil = 0.0;
  double f_gap = 0.0;      // |f_gamma(T) - T|
  double k_gap = 0.0;      // |K_gamma - K|
  double azuma_gap = 0.0;  // |disc azuma - average azuma|
  double lil_gap = 0.0;
};

struct VanishingDiscountReport {
  double k_avg = 0.0;
  double avg_azuma = 0.0;
  double avg_lil = 0.0;
  long long T = 0;
  double delta = 0.0;
  std::vector<VanishingDiscountRow> rows;
  bool gaps_shrink = false;          // every gap column nonincreasing, strictly
                                     // unless already at numerical zero
  double final_relative_gap = 0.0;   // azuma gap at the last gamma, relative
};

/// Tracks how the discounted bound ingredients approach their
/// average-reward counterparts as gamma increases toward 1.
inline VanishingDiscountReport vanishing_discount_check(
    const MdpModel& m, const StationaryPolicy& pi, long long T, double delta,
    const std::vector<double>& gamma_list, int ref_state = 0) {
  if (gamma_list.empty()) throw DomainError("gamma_list must be nonempty");
  for (std::size_t i = 1; i < gamma_list.size(); ++i)
    if (!(gamma_list[i] > gamma_list[i - 1]))
      throw DomainError("gamma_list must be strictly increasing");

  const AverageEvalSolution avg = solve_arpe(m, pi, ref_state);
  VanishingDiscountReport report;
  report.T = T;
  report.delta = delta;
  report.k_avg = max_abs_deviation(m, pi, avg.bias);
  report.avg_azuma = azuma_centered(report.k_avg, T, delta).value;
  report.avg_lil = report.k_avg > 0.0
                       ? lil_centered(report.k_avg, T, delta).value
                       : 0.0;

  for (double gamma : gamma_list) {
    const DiscountedSolution sol = solve_drpe(m, pi, gamma);
    VanishingDiscountRow row;
    row.gamma = gamma;
    row.f_value = f_gamma(gamma, T);
    row.k_gamma = max_abs_deviation(m, pi, sol.values);
    row.disc_azuma = disc_bound(row.k_gamma, gamma, m.r_max, T, delta, false, false).value;
    row.disc_lil = row.k_gamma > 0.0
                       ? disc_bound(row.k_gamma, gamma, m.r_max, T, delta, true, false).value
                       : 0.0;
    row.f_gap = std::fabs(row.f_value - static_cast<double>(T));
    row.k_gap = std::fabs(row.k_gamma - report.k_avg);
    row.azuma_gap = std::fabs(row.disc_azuma - report.avg_azuma);
    row.lil_gap = std::fabs(row.disc_lil - report.avg_lil);
    report.rows.push_back(row);
  }

  // Strict shrinkage, with ties tolerated only at numerical zero.
  auto shrinks = [](double prev, double next) {
    return next < prev || (next <= 1e-9 && prev <= 1e-9);
  };
  report.gaps_shrink = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    report.gaps_shrink = report.gaps_shrink &&
                         shrinks(report.rows[i - 1].f_gap, report.rows[i].f_gap) &&
                         shrinks(report.rows[i - 1].k_gap, report.rows[i].k_gap) &&
                         shrinks(report.rows[i - 1].azuma_gap, report.rows[i].azuma_gap);
  }
  const double base = report.avg_azuma > 0.0 ? report.avg_azuma : 1.0;
  report.final_relative_gap = report.rows.back().azuma_gap / base;
  return report;
}

}  // namespace mdpconc
