#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mdpconc/model.hpp"
#include "mdpconc/solve.hpp"

namespace mdpconc {

/// max(v) - min(v). Invariant to adding a constant.
inline double value_span(const Vec& v) {
  if (v.empty()) throw EmptyVector("span of empty vector");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

/// Conditional mean of v at the successor state: m(s) = sum_s' P(s'|s,pi(s)) v(s').
inline Vec conditional_mean(const MdpModel& m, const StationaryPolicy& pi, const Vec& v) {
  check_policy(m, pi);
  Vec mean(m.n_states, 0.0);
  for (int s = 0; s < m.n_states; ++s) {
    const int a = pi(s);
    double acc = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) acc += m.p(s, a, s2) * v[s2];
    mean[s] = acc;
  }
  return mean;
}

/// Largest deviation of a value at any next state from its conditional mean:
/// max over (s, s+) of |v(s+) - m(s)|. The inner maximum ranges over all
/// states by default; support_only restricts s+ to successors with positive
/// probability, which is all the martingale arguments need.
inline double max_abs_deviation(const MdpModel& m, const StationaryPolicy& pi,
                                const Vec& v, bool support_only = false) {
  const Vec mean = conditional_mean(m, pi, v);
  double worst = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    const int a = pi(s);
    for (int s2 = 0; s2 < m.n_states; ++s2) {
      if (support_only && !(m.p(s, a, s2) > 0.0)) continue;
      worst = std::max(worst, std::fabs(v[s2] - mean[s]));
    }
  }
  return worst;
}

/// Conditional standard deviation of v at the successor, per state.
/// Two-pass (mean, then variance) to avoid cancellation.
inline Vec conditional_std(const MdpModel& m, const StationaryPolicy& pi, const Vec& v) {
  const Vec mean = conditional_mean(m, pi, v);
  Vec sigma(m.n_states, 0.0);
  for (int s = 0; s < m.n_states; ++s) {
    const int a = pi(s);
    double var = 0.0;
    for (int s2 = 0; s2 < m.n_states; ++s2) {
      const double d = v[s2] - mean[s];
      var += m.p(s, a, s2) * d * d;
    }
    sigma[s] = std::sqrt(std::max(var, 0.0));
  }
  return sigma;
}

struct DiameterOptions {
  double tol = 1e-10;
  long long max_iter = 1000000;
  double divergence_cap = 1e9;  // hitting times past this count as unreachable
};

namespace detail {

// States from which the target can be reached with probability one under
// some policy. Standard two-level fixpoint: shrink the candidate set to
// states that can make progress toward the target without ever stepping
// outside the candidate set.
inline std::vector<char> almost_sure_reach_set(const MdpModel& m, int target) {
  const int n = m.n_states;
  std::vector<char> win(n, 1);
  while (true) {
    std::vector<char> x(n, 0);
    x[target] = 1;
    bool grew = true;
    while (grew) {
      grew = false;
      for (int s = 0; s < n; ++s) {
        if (x[s] || !win[s]) continue;
        for (int a = 0; a < m.n_actions; ++a) {
          bool stays = true, progresses = false;
          for (int s2 = 0; s2 < n; ++s2) {
            if (!(m.p(s, a, s2) > 0.0)) continue;
            if (!win[s2]) { stays = false; break; }
            if (x[s2]) progresses = true;
          }
          if (stays && progresses) { x[s] = 1; grew = true; break; }
        }
      }
    }
    if (x == win) break;
    win = std::move(x);
  }
  return win;
}

}  // namespace detail

/// Minimal expected hitting times of `target` over all policies, by value
/// iteration on T(s) = 1 + min_a sum_{s''!=target} P(s''|s,a) T(s''),
/// T(target) = 0. Entries are +infinity when no policy reaches the target
/// with probability one from s, or past the divergence cap.
inline Vec min_hitting_times(const MdpModel& m, int target, const DiameterOptions& opt = {}) {
  const int n = m.n_states;
  if (target < 0 || target >= n) throw DomainError("target state out of range");
  const std::vector<char> win = detail::almost_sure_reach_set(m, target);
  const double inf = std::numeric_limits<double>::infinity();

  Vec t(n, 0.0), next(n, 0.0);
  for (int s = 0; s < n; ++s)
    if (!win[s]) t[s] = next[s] = inf;

  double diff = inf;
  double biggest = 0.0;
  for (long long iter = 0; iter < opt.max_iter; ++iter) {
    biggest = 0.0;
    diff = 0.0;
    for (int s = 0; s < n; ++s) {
      if (s == target || !win[s]) continue;
      double best = inf;
      for (int a = 0; a < m.n_actions; ++a) {
        double q = 1.0;
        for (int s2 = 0; s2 < n; ++s2) {
          if (s2 == target || !(m.p(s, a, s2) > 0.0)) continue;
          if (!win[s2]) { q = inf; break; }
          q += m.p(s, a, s2) * t[s2];
        }
        best = std::min(best, q);
      }
      next[s] = best;
      diff = std::max(diff, std::fabs(best - t[s]));
      biggest = std::max(biggest, best);
    }
    t = next;
    if (biggest > opt.divergence_cap) {
      for (int s = 0; s < n; ++s)
        if (t[s] > opt.divergence_cap) t[s] = inf;
      return t;
    }
    if (diff <= opt.tol * (1.0 + biggest)) return t;
  }
  throw NoConvergence("hitting-time iteration", opt.max_iter, diff);
}

/// Worst-case over ordered state pairs of the best-policy expected hitting
/// time. +infinity when some pair is unreachable.
inline double diameter(const MdpModel& m, const DiameterOptions& opt = {}) {
  double worst = 0.0;
  for (int target = 0; target < m.n_states; ++target) {
    const Vec t = min_hitting_times(m, target, opt);
    for (int s = 0; s < m.n_states; ++s) {
      if (s == target) continue;
      if (!std::isfinite(t[s])) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, t[s]);
    }
  }
  return worst;
}

/// Prefix sums of sigma(S_tau)^2 along a state trajectory:
/// out[0] = 0, out[t] = sum_{tau < t} sigma(S_tau)^2.
inline Vec sigma_process(const std::vector<int>& states, const Vec& sigma) {
  Vec out(states.size(), 0.0);
  for (std::size_t t = 1; t < states.size(); ++t) {
    const double s = sigma[states[t - 1]];
    out[t] = out[t - 1] + s * s;
  }
  return out;
}

/// Span, max deviation and conditional std of one value function, plus
/// diameter * r_max when the caller has a finite diameter at hand.
struct DispersionStats {
  double span = 0.0;
  double max_dev = 0.0;
  Vec cond_std;
  std::optional<double> diameter_rmax;
};

inline DispersionStats dispersion_stats(const MdpModel& m, const StationaryPolicy& pi,
                                        const Vec& v,
                                        std::optional<double> diam = std::nullopt,
                                        bool support_only = false) {
  DispersionStats out;
  out.span = value_span(v);
  out.max_dev = max_abs_deviation(m, pi, v, support_only);
  out.cond_std = conditional_std(m, pi, v);
  if (diam && std::isfinite(*diam)) out.diameter_rmax = *diam * m.r_max;
  return out;
}

/// Per-stage dispersion of a finite-horizon value sequence, with the
/// running maxima and effective sample size used by the horizon bounds.
struct FiniteHorizonDispersion {
  int horizon = 0;
  Vec k_per_stage;  // t = 0..h
  Vec h_per_stage;

  // Running maxima over stages 0..min(T,h).
  double k_bar(int T) const {
    double best = 0.0;
    const int hi = std::min<int>(T, horizon);
    for (int t = 0; t <= hi; ++t) best = std::max(best, k_per_stage[t]);
    return best;
  }
  double h_bar(int T) const {
    double best = 0.0;
    const int hi = std::min<int>(T, horizon);
    for (int t = 0; t <= hi; ++t) best = std::max(best, h_per_stage[t]);
    return best;
  }
  // Effective sample size: sum_{t=1..min(T,h)} K_t^2 / k_bar(T)^2, zero when
  // every K_t vanishes. Always <= T.
  double g(int T) const {
    const double kb = k_bar(T);
    if (kb <= 0.0) return 0.0;
    double acc = 0.0;
    const int hi = std::min<int>(T, horizon);
    for (int t = 1; t <= hi; ++t) acc += k_per_stage[t] * k_per_stage[t];
    return acc / (kb * kb);
  }
};

inline FiniteHorizonDispersion fh_dispersion(const MdpModel& m, const FiniteHorizonPolicy& pi,
                                             const FiniteHorizonSolution& sol,
                                             bool support_only = false) {
  check_policy(m, pi);
  if (pi.horizon() != sol.horizon)
    throw DimensionMismatch("policy and solution horizons differ");
  FiniteHorizonDispersion out;
  out.horizon = sol.horizon;
  out.k_per_stage.resize(sol.horizon + 1);
  out.h_per_stage.resize(sol.horizon + 1);
  for (int t = 0; t <= sol.horizon; ++t) {
    out.k_per_stage[t] = max_abs_deviation(m, pi.stages[t], sol.values[t], support_only);
    out.h_per_stage[t] = value_span(sol.values[t]);
  }
  return out;
}

}  // namespace mdpconc
