#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mdpconc/classify.hpp"
#include "mdpconc/linalg.hpp"
#include "mdpconc/model.hpp"

namespace mdpconc {

/// Gain and differential (bias) value of a stationary policy, normalized by
/// bias[ref_state] = 0.
struct AverageEvalSolution {
  double gain = 0.0;
  Vec bias;
  int ref_state = 0;
};

inline double arpe_residual(const MdpModel& m, const StationaryPolicy& pi,
                            double gain, const Vec& bias) {
  const InducedChain chain = induced_chain(m, pi);
  double worst = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    double mean = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) mean += chain.transition(s, s2) * bias[s2];
    worst = std::max(worst, std::fabs(gain + bias[s] - chain.reward[s] - mean));
  }
  return worst;
}

/// Solves the average-reward evaluation equation for a stationary policy by
/// the direct linear system { (I - P)V + gain*1 = r ; V(ref) = 0 }.
/// Throws NotInPiAR when the gain is not unique, SingularSystem when the
/// chain is numerically degenerate.
inline AverageEvalSolution solve_arpe(const MdpModel& m, const StationaryPolicy& pi,
                                      int ref_state = 0) {
  check_policy(m, pi);
  if (ref_state < 0 || ref_state >= m.n_states)
    throw DomainError("ref_state out of range");
  if (!in_pi_ar(m, pi))
    throw NotInPiAR("recurrent classes of the induced chain have unequal gains");

  const InducedChain chain = induced_chain(m, pi);
  const int n = m.n_states;
  Matrix a(n + 1, n + 1);
  Vec b(n + 1, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int s2 = 0; s2 < n; ++s2)
      a(s, s2) = (s == s2 ? 1.0 : 0.0) - chain.transition(s, s2);
    a(s, n) = 1.0;
    b[s] = chain.reward[s];
  }
  a(n, ref_state) = 1.0;
  Vec x = lu_solve(std::move(a), std::move(b));

  AverageEvalSolution sol;
  sol.gain = x[n];
  sol.bias.assign(x.begin(), x.begin() + n);
  sol.ref_state = ref_state;
  return sol;
}

namespace detail {

// One Bellman sweep: out[s] = max_a [ r(s,a) + sum_s' P(s'|s,a) v(s') ].
inline void bellman_max(const MdpModel& m, const Vec& v, Vec& out) {
  for (int s = 0; s < m.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m.n_actions; ++a) {
      double q = m.r(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) q += m.p(s, a, s2) * v[s2];
      best = std::max(best, q);
    }
    out[s] = best;
  }
}

// Per-state sets of actions whose Q-value is within a relative tie
// tolerance of the maximum.
inline std::vector<std::vector<int>> greedy_action_sets(const MdpModel& m, const Vec& v,
                                                        double discount, double tie_tol) {
  std::vector<std::vector<int>> sets(m.n_states);
  Vec q(m.n_actions, 0.0);
  for (int s = 0; s < m.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < m.n_actions; ++a) {
      double acc = m.r(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) acc += discount * m.p(s, a, s2) * v[s2];
      q[a] = acc;
      best = std::max(best, acc);
    }
    const double cutoff = best - tie_tol * (1.0 + std::fabs(best));
    for (int a = 0; a < m.n_actions; ++a)
      if (q[a] >= cutoff) sets[s].push_back(a);
  }
  return sets;
}

inline StationaryPolicy first_selection(const std::vector<std::vector<int>>& sets) {
  StationaryPolicy pi;
  pi.decision.reserve(sets.size());
  for (const auto& s : sets) pi.decision.push_back(s.front());
  return pi;
}

// Cartesian product of per-state greedy sets, capped.
inline std::vector<StationaryPolicy> product_policies(
    const std::vector<std::vector<int>>& sets, std::size_t cap, bool& truncated) {
  std::vector<StationaryPolicy> out;
  out.push_back(first_selection(sets));
  truncated = false;
  std::vector<std::size_t> idx(sets.size(), 0);
  while (true) {
    int s = static_cast<int>(sets.size()) - 1;
    while (s >= 0 && idx[s] + 1 >= sets[s].size()) { idx[s] = 0; --s; }
    if (s < 0) break;
    ++idx[s];
    if (out.size() >= cap) { truncated = true; break; }
    StationaryPolicy pi;
    pi.decision.reserve(sets.size());
    for (std::size_t j = 0; j < sets.size(); ++j) pi.decision.push_back(sets[j][idx[j]]);
    out.push_back(std::move(pi));
  }
  return out;
}

}  // namespace detail

struct AroeOptions {
  double tol = 1e-10;
  long long max_iter = 500000;
  int ref_state = 0;
  double damping = 0.5;   // aperiodicity transform; fixed point unchanged
  double tie_tol = 1e-9;
  bool check_class = true;
  std::uint64_t class_cap = 1000000;
  bool force = false;     // skip the weak-communication precheck
  std::size_t policy_cap = 64;
};

/// Optimal gain, bias and the greedy policy set from relative value
/// iteration on the damped Bellman operator.
struct AverageOptimalSolution {
  double gain = 0.0;
  Vec bias;
  int ref_state = 0;
  std::vector<std::vector<int>> greedy_actions;
  std::vector<StationaryPolicy> optimal_policies;
  bool policies_truncated = false;
  long long iterations = 0;
  double final_span = 0.0;
};

inline AverageOptimalSolution solve_aroe(const MdpModel& m, const AroeOptions& opt = {}) {
  if (opt.ref_state < 0 || opt.ref_state >= m.n_states)
    throw DomainError("ref_state out of range");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0))
    throw DomainError("damping must lie in (0,1]");
  if (opt.check_class && !opt.force) {
    const MdpClass cls = classify_model(m, opt.class_cap);
    if (cls.weakly_communicating == Flag::no)
      throw NotSolvableHint(
          "model is not weakly communicating; optimality equation may be unsolvable "
          "(pass force to attempt anyway)");
  }

  const int n = m.n_states;
  Vec v(n, 0.0), tv(n, 0.0);
  double span_change = std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 0.0;
  long long iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    detail::bellman_max(m, v, tv);
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
      const double change = tv[s] - v[s];
      lo = std::min(lo, change);
      hi = std::max(hi, change);
    }
    span_change = hi - lo;
    if (span_change <= opt.tol) break;
    const double offset = tv[opt.ref_state];
    for (int s = 0; s < n; ++s)
      v[s] = (1.0 - opt.damping) * v[s] + opt.damping * (tv[s] - offset);
  }
  if (span_change > opt.tol)
    throw NoConvergence("relative value iteration", iter, span_change);

  AverageOptimalSolution sol;
  sol.gain = 0.5 * (lo + hi);
  sol.ref_state = opt.ref_state;
  sol.bias = v;
  const double shift = sol.bias[opt.ref_state];
  for (double& x : sol.bias) x -= shift;
  sol.greedy_actions = detail::greedy_action_sets(m, sol.bias, 1.0, opt.tie_tol);
  sol.optimal_policies =
      detail::product_policies(sol.greedy_actions, opt.policy_cap, sol.policies_truncated);
  sol.iterations = iter;
  sol.final_span = span_change;
  return sol;
}

/// Discounted value of a stationary policy: V = (I - gamma P)^{-1} r.
struct DiscountedSolution {
  double gamma = 0.0;
  Vec values;
};

inline DiscountedSolution solve_drpe(const MdpModel& m, const StationaryPolicy& pi, double gamma) {
  check_policy(m, pi);
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  const InducedChain chain = induced_chain(m, pi);
  const int n = m.n_states;
  Matrix a(n, n);
  for (int s = 0; s < n; ++s)
    for (int s2 = 0; s2 < n; ++s2)
      a(s, s2) = (s == s2 ? 1.0 : 0.0) - gamma * chain.transition(s, s2);
  return DiscountedSolution{gamma, lu_solve(std::move(a), chain.reward)};
}

inline double drpe_residual(const MdpModel& m, const StationaryPolicy& pi,
                            double gamma, const Vec& values) {
  const InducedChain chain = induced_chain(m, pi);
  double worst = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    double mean = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) mean += chain.transition(s, s2) * values[s2];
    worst = std::max(worst, std::fabs(values[s] - chain.reward[s] - gamma * mean));
  }
  return worst;
}

struct DiscountedOptimalSolution {
  double gamma = 0.0;
  Vec values;
  std::vector<std::vector<int>> greedy_actions;
  long long iterations = 0;
};

/// Value iteration with the stopping rule ||V_{k+1}-V_k|| <= tol(1-gamma)/(2 gamma),
/// which guarantees ||V - V*|| <= tol. Iterates stay within [0, r_max/(1-gamma)].
inline DiscountedOptimalSolution solve_droe(const MdpModel& m, double gamma,
                                            double tol = 1e-10, long long max_iter = 1000000,
                                            double tie_tol = 1e-9) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  const int n = m.n_states;
  const double stop = tol * (1.0 - gamma) / (2.0 * gamma);
  Vec v(n, 0.0), next(n, 0.0);
  long long iter = 0;
  double diff = std::numeric_limits<double>::infinity();
  for (; iter < max_iter; ++iter) {
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.n_actions; ++a) {
        double q = m.r(s, a);
        for (int s2 = 0; s2 < n; ++s2) q += gamma * m.p(s, a, s2) * v[s2];
        best = std::max(best, q);
      }
      next[s] = best;
    }
    diff = 0.0;
    for (int s = 0; s < n; ++s) diff = std::max(diff, std::fabs(next[s] - v[s]));
    v = next;
    if (diff <= stop) break;
  }
  if (diff > stop) throw NoConvergence("discounted value iteration", iter, diff);

  DiscountedOptimalSolution sol;
  sol.gamma = gamma;
  sol.values = v;
  sol.greedy_actions = detail::greedy_action_sets(m, v, gamma, tie_tol);
  sol.iterations = iter;
  return sol;
}

/// Stagewise values V_t for t = 0..h+1 with V_{h+1} identically zero.
struct FiniteHorizonSolution {
  int horizon = 0;
  std::vector<Vec> values;  // h+2 vectors
};

inline FiniteHorizonSolution solve_fhpe(const MdpModel& m, const FiniteHorizonPolicy& pi) {
  check_policy(m, pi);
  const int h = pi.horizon();
  FiniteHorizonSolution sol;
  sol.horizon = h;
  sol.values.assign(h + 2, Vec(m.n_states, 0.0));
  for (int t = h; t >= 0; --t) {
    const Vec& next = sol.values[t + 1];
    for (int s = 0; s < m.n_states; ++s) {
      const int a = pi.act(t, s);
      double q = m.r(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) q += m.p(s, a, s2) * next[s2];
      sol.values[t][s] = q;
    }
  }
  return sol;
}

struct FiniteHorizonOptimalSolution {
  FiniteHorizonSolution solution;
  FiniteHorizonPolicy greedy;  // lowest action index on ties
};

inline FiniteHorizonOptimalSolution solve_fhdp(const MdpModel& m, int h) {
  if (h < 0) throw DomainError("horizon must be >= 0");
  FiniteHorizonOptimalSolution out;
  out.solution.horizon = h;
  out.solution.values.assign(h + 2, Vec(m.n_states, 0.0));
  out.greedy.stages.assign(h + 1, StationaryPolicy{std::vector<int>(m.n_states, 0)});
  for (int t = h; t >= 0; --t) {
    const Vec& next = out.solution.values[t + 1];
    for (int s = 0; s < m.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < m.n_actions; ++a) {
        double q = m.r(s, a);
        for (int s2 = 0; s2 < m.n_states; ++s2) q += m.p(s, a, s2) * next[s2];
        if (q > best) { best = q; best_a = a; }
      }
      out.solution.values[t][s] = best;
      out.greedy.stages[t].decision[s] = best_a;
    }
  }
  return out;
}

}  // namespace mdpconc
