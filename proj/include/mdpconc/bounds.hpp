#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "mdpconc/errors.hpp"
#include "mdpconc/stats.hpp"

namespace mdpconc {

// All logarithms here are natural. Every bound is evaluated totally: a value
// is produced even when the time index is below the validity threshold, so
// envelopes can be plotted before their onset; `applicable` carries the
// threshold verdict.

enum class BoundKind {
  azuma_centered,
  lil_centered,
  azuma_uncentered,
  lil_uncentered,
  policy_independent_azuma,
  policy_independent_lil,
  two_policy_azuma,
  two_policy_lil,
  two_optimal_azuma,
  two_optimal_lil,
  regret_gap_azuma,
  regret_gap_lil,
  regret_gap_model_azuma,
  regret_gap_model_lil,
  disc_azuma,
  disc_lil,
  disc_uncentered_azuma,
  disc_uncentered_lil,
  disc_two_policy,
  fh_azuma,
  fh_lil,
  fh_uncentered_azuma,
  fh_uncentered_lil,
  fh_two_policy,
};

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::azuma_centered: return "azuma_centered";
    case BoundKind::lil_centered: return "lil_centered";
    case BoundKind::azuma_uncentered: return "azuma_uncentered";
    case BoundKind::lil_uncentered: return "lil_uncentered";
    case BoundKind::policy_independent_azuma: return "policy_independent_azuma";
    case BoundKind::policy_independent_lil: return "policy_independent_lil";
    case BoundKind::two_policy_azuma: return "two_policy_azuma";
    case BoundKind::two_policy_lil: return "two_policy_lil";
    case BoundKind::two_optimal_azuma: return "two_optimal_azuma";
    case BoundKind::two_optimal_lil: return "two_optimal_lil";
    case BoundKind::regret_gap_azuma: return "regret_gap_azuma";
    case BoundKind::regret_gap_lil: return "regret_gap_lil";
    case BoundKind::regret_gap_model_azuma: return "regret_gap_model_azuma";
    case BoundKind::regret_gap_model_lil: return "regret_gap_model_lil";
    case BoundKind::disc_azuma: return "disc_azuma";
    case BoundKind::disc_lil: return "disc_lil";
    case BoundKind::disc_uncentered_azuma: return "disc_uncentered_azuma";
    case BoundKind::disc_uncentered_lil: return "disc_uncentered_lil";
    case BoundKind::disc_two_policy: return "disc_two_policy";
    case BoundKind::fh_azuma: return "fh_azuma";
    case BoundKind::fh_lil: return "fh_lil";
    case BoundKind::fh_uncentered_azuma: return "fh_uncentered_azuma";
    case BoundKind::fh_uncentered_lil: return "fh_uncentered_lil";
    case BoundKind::fh_two_policy: return "fh_two_policy";
  }
  return "?";
}

inline std::optional<BoundKind> bound_kind_from_string(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(BoundKind::fh_two_policy); ++k)
    if (s == to_string(static_cast<BoundKind>(k))) return static_cast<BoundKind>(k);
  return std::nullopt;
}

struct BoundResult {
  double value = 0.0;
  bool applicable = true;
  std::optional<long long> threshold_T0;
  std::string notes;
};

namespace detail {

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
}
inline void check_T(long long T) {
  if (T < 1) throw DomainError("T must be >= 1");
}
inline void check_nonneg(double x, const char* name) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError(std::string(name) + " must be finite and >= 0");
}

constexpr double kE = 2.718281828459045235;

// max{ K sqrt(3 m (2 loglog(1.5 m) + log(2/delta))), K^2 }, with the K^2
// fallback taken outright when 1.5 m <= e, where loglog is not positive.
inline double lil_value(double k, double m, double delta) {
  const double x = 1.5 * m;
  if (!(x > kE)) return k * k;
  const double root = k * std::sqrt(3.0 * m * (2.0 * std::log(std::log(x)) + std::log(2.0 / delta)));
  return std::max(root, k * k);
}

// The printed validity onset ceil((173/K) log(4/delta)) and the variant
// derived from the source condition sum c_t^2 >= 173 log(4/delta), which
// scales by 1/K^2 instead.
inline long long lil_threshold_printed(double k, double delta) {
  return static_cast<long long>(std::ceil((173.0 / k) * std::log(4.0 / delta)));
}
inline long long lil_threshold_conservative(double k, double delta) {
  return static_cast<long long>(std::ceil((173.0 / (k * k)) * std::log(4.0 / delta)));
}

inline std::string lil_notes(double k, double delta, bool conservative) {
  const long long printed = lil_threshold_printed(k, delta);
  const long long cons = lil_threshold_conservative(k, delta);
  return "T0_printed=" + std::to_string(printed) + ";T0_conservative=" + std::to_string(cons) +
         ";using=" + (conservative ? "conservative" : "printed");
}

}  // namespace detail

/// K sqrt(2 T log(2/delta)); always applicable.
inline BoundResult azuma_centered(double k, long long T, double delta) {
  detail::check_delta(delta);
  detail::check_T(T);
  detail::check_nonneg(k, "K");
  return {k * std::sqrt(2.0 * static_cast<double>(T) * std::log(2.0 / delta)), true,
          std::nullopt, ""};
}

/// Finite-time iterated-logarithm envelope with validity onset T0.
inline BoundResult lil_centered(double k, long long T, double delta, bool conservative = false) {
  detail::check_delta(delta);
  detail::check_T(T);
  detail::check_nonneg(k, "K");
  if (k == 0.0) throw KZero("iterated-logarithm threshold undefined at K=0");
  BoundResult out;
  out.value = detail::lil_value(k, static_cast<double>(T), delta);
  out.threshold_T0 = conservative ? detail::lil_threshold_conservative(k, delta)
                                  : detail::lil_threshold_printed(k, delta);
  out.applicable = T >= *out.threshold_T0;
  out.notes = detail::lil_notes(k, delta, conservative);
  return out;
}

/// Centered bounds plus the span term that absorbs the trajectory boundary.
inline BoundResult azuma_uncentered(double k, double h, long long T, double delta) {
  detail::check_nonneg(h, "H");
  BoundResult out = azuma_centered(k, T, delta);
  out.value += h;
  return out;
}

inline BoundResult lil_uncentered(double k, double h, long long T, double delta,
                                  bool conservative = false) {
  detail::check_nonneg(h, "H");
  BoundResult out = lil_centered(k, T, delta, conservative);
  out.value += h;
  return out;
}

/// Uncentered bounds with both K and H replaced by diameter * r_max, valid
/// for any stationary policy with a unique gain on a communicating model.
inline BoundResult policy_independent(double diam, double r_max, long long T, double delta,
                                      bool lil, bool conservative = false) {
  if (!std::isfinite(diam)) throw InfiniteDiameter("policy-independent bound needs a finite diameter");
  detail::check_nonneg(diam, "D");
  detail::check_nonneg(r_max, "r_max");
  const double c = diam * r_max;
  return lil ? lil_uncentered(c, c, T, delta, conservative) : azuma_uncentered(c, c, T, delta);
}

/// Reward-difference bound for two stationary policies: the two per-policy
/// uncentered bounds at confidence delta/2 summed.
inline BoundResult two_policy(double k1, double h1, double k2, double h2, long long T,
                              double delta, bool lil, bool conservative = false) {
  detail::check_delta(delta);
  const double half = delta / 2.0;
  if (!lil) {
    BoundResult a = azuma_uncentered(k1, h1, T, half);
    const BoundResult b = azuma_uncentered(k2, h2, T, half);
    a.value += b.value;
    return a;
  }
  BoundResult a = lil_uncentered(k1, h1, T, half, conservative);
  const BoundResult b = lil_uncentered(k2, h2, T, half, conservative);
  a.value += b.value;
  a.threshold_T0 = std::max(*a.threshold_T0, *b.threshold_T0);
  a.applicable = T >= *a.threshold_T0;
  a.notes += "|" + b.notes;
  return a;
}

/// Two optimal policies share (K, H) and gain, so the two-policy bound
/// collapses to twice the single-policy bound at delta/2.
inline BoundResult two_optimal(double k, double h, long long T, double delta, bool lil,
                               bool conservative = false) {
  return two_policy(k, h, k, h, T, delta, lil, conservative);
}

/// Gap between cumulative and interim cumulative regret: same closed forms
/// as the single-policy uncentered bounds, evaluated at the optimal
/// policy's statistics. Independent of the learning policy.
inline BoundResult regret_gap(double k_star, double h_star, long long T, double delta,
                              bool lil, bool conservative = false) {
  return lil ? lil_uncentered(k_star, h_star, T, delta, conservative)
             : azuma_uncentered(k_star, h_star, T, delta);
}

inline BoundResult regret_gap_model(double diam, double r_max, long long T, double delta,
                                    bool lil, bool conservative = false) {
  return policy_independent(diam, r_max, T, delta, lil, conservative);
}

/// sum_{t=1..T} gamma^{2t} = (gamma^2 - gamma^{2T+2}) / (1 - gamma^2).
inline double f_gamma(double gamma, long long T) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
  if (T < 0) throw DomainError("T must be >= 0");
  const double g2 = gamma * gamma;
  return (g2 - std::pow(gamma, 2.0 * static_cast<double>(T) + 2.0)) / (1.0 - g2);
}

namespace detail {

// Smallest T' >= 1 with f_gamma(T') > c, or nullopt when the limit
// gamma^2/(1-gamma^2) never crosses c.
inline std::optional<long long> disc_threshold(double gamma, double c) {
  const double g2 = gamma * gamma;
  const double limit = g2 / (1.0 - g2);
  if (!(limit > c)) return std::nullopt;
  // f(T') > c  <=>  gamma^{2T'+2} < g2 - c (1 - g2)
  const double rhs = g2 - c * (1.0 - g2);
  long long guess = 1;
  if (rhs > 0.0 && c > 0.0) {
    const double raw = (std::log(rhs) / (2.0 * std::log(gamma)) - 1.0);
    guess = std::max<long long>(1, static_cast<long long>(std::floor(raw)) - 2);
  }
  while (!(f_gamma(gamma, guess) > c)) ++guess;
  while (guess > 1 && f_gamma(gamma, guess - 1) > c) --guess;
  return guess;
}

}  // namespace detail

/// Discounted-return concentration. The azuma flavor scales with
/// sqrt(f_gamma(T)); the lil flavor is applicable only once f_gamma crosses
/// its onset, which a bounded f_gamma may never do (reported via
/// applicable=false with no threshold). Uncentered flavors add the tail
/// gamma^T r_max / (1-gamma).
inline BoundResult disc_bound(double k_gamma, double gamma, double r_max, long long T,
                              double delta, bool lil, bool uncentered,
                              bool conservative = false) {
  detail::check_delta(delta);
  detail::check_T(T);
  detail::check_nonneg(k_gamma, "K_gamma");
  const double f = f_gamma(gamma, T);
  BoundResult out;
  if (!lil) {
    out.value = k_gamma * std::sqrt(2.0 * f * std::log(2.0 / delta));
  } else {
    if (k_gamma == 0.0) throw KZero("iterated-logarithm threshold undefined at K=0");
    out.value = detail::lil_value(k_gamma, f, delta);
    const double c_printed = (173.0 / k_gamma) * std::log(4.0 / delta);
    const double c_cons = (173.0 / (k_gamma * k_gamma)) * std::log(4.0 / delta);
    const auto t0_printed = detail::disc_threshold(gamma, c_printed);
    const auto t0_cons = detail::disc_threshold(gamma, c_cons);
    const auto used = conservative ? t0_cons : t0_printed;
    out.threshold_T0 = used;
    out.applicable = used.has_value() && T >= *used;
    out.notes = "T0_printed=" + (t0_printed ? std::to_string(*t0_printed) : "never") +
                ";T0_conservative=" + (t0_cons ? std::to_string(*t0_cons) : "never") +
                ";using=" + (conservative ? "conservative" : "printed");
  }
  if (uncentered) {
    detail::check_nonneg(r_max, "r_max");
    out.value += std::pow(gamma, static_cast<double>(T)) * r_max / (1.0 - gamma);
  }
  return out;
}

/// Discounted two-policy difference: per-policy centered bounds at delta/2
/// summed. The lil flavor's onset is the larger of the two per-policy
/// thresholds at delta/2.
inline BoundResult disc_two_policy(double k1_gamma, double k2_gamma, double gamma,
                                   long long T, double delta, bool lil = false,
                                   bool conservative = false) {
  detail::check_delta(delta);
  const double half = delta / 2.0;
  BoundResult a = disc_bound(k1_gamma, gamma, 0.0, T, half, lil, false, conservative);
  const BoundResult b = disc_bound(k2_gamma, gamma, 0.0, T, half, lil, false, conservative);
  a.value += b.value;
  if (lil) {
    if (a.threshold_T0 && b.threshold_T0) {
      a.threshold_T0 = std::max(*a.threshold_T0, *b.threshold_T0);
      a.applicable = T >= *a.threshold_T0;
    } else {
      a.threshold_T0 = std::nullopt;
      a.applicable = false;
    }
    a.notes += "|" + b.notes;
  }
  return a;
}

/// Finite-horizon concentration parameterized by per-stage dispersion.
/// Centered flavors scale with the effective sample size g(T); uncentered
/// flavors use T itself and add the running span maximum.
inline BoundResult fh_bound(const FiniteHorizonDispersion& disp, long long T, double delta,
                            bool lil, bool uncentered, bool conservative = false) {
  detail::check_delta(delta);
  detail::check_T(T);
  if (T > static_cast<long long>(disp.horizon) + 1)
    throw HorizonExceeded("T=" + std::to_string(T) + " exceeds horizon+1=" +
                          std::to_string(disp.horizon + 1));
  const int ti = static_cast<int>(T);
  const double kb = disp.k_bar(ti);
  const double g = disp.g(ti);
  BoundResult out;
  if (!lil) {
    const double m = uncentered ? static_cast<double>(T) : g;
    out.value = kb * std::sqrt(2.0 * m * std::log(2.0 / delta));
  } else {
    const double need = conservative && kb > 0.0
                            ? (173.0 / (kb * kb)) * std::log(4.0 / delta)
                            : 173.0 * std::log(4.0 / delta);
    // Onset uses g at the last stage the recursion defines.
    const double g_end = disp.g(disp.horizon + 1);
    std::optional<long long> t0;
    if (kb > 0.0 && g_end >= need) {
      for (int tc = 1; tc <= disp.horizon + 1; ++tc)
        if (disp.g(tc) >= need) { t0 = tc; break; }
    }
    out.threshold_T0 = t0;
    out.applicable = t0.has_value() && T >= *t0;
    out.notes = std::string("onset=g(T')>=") + (conservative ? "173/Kbar^2*" : "173*") +
                "log(4/delta)";
    if (kb == 0.0) {
      out.value = 0.0;
      if (uncentered) out.value += disp.h_bar(ti);
      return out;
    }
    const double m = uncentered ? static_cast<double>(T) : g;
    out.value = detail::lil_value(kb, m, delta);
  }
  if (uncentered) out.value += disp.h_bar(ti);
  return out;
}

/// Finite-horizon two-policy difference: per-policy centered bounds at
/// delta/2 summed.
inline BoundResult fh_two_policy(const FiniteHorizonDispersion& d1,
                                 const FiniteHorizonDispersion& d2, long long T,
                                 double delta, bool lil = false, bool conservative = false) {
  detail::check_delta(delta);
  const double half = delta / 2.0;
  BoundResult a = fh_bound(d1, T, half, lil, false, conservative);
  const BoundResult b = fh_bound(d2, T, half, lil, false, conservative);
  a.value += b.value;
  if (lil) {
    if (a.threshold_T0 && b.threshold_T0) {
      a.threshold_T0 = std::max(*a.threshold_T0, *b.threshold_T0);
      a.applicable = T >= *a.threshold_T0;
    } else {
      a.threshold_T0 = std::nullopt;
      a.applicable = false;
    }
  }
  return a;
}

/// Parameter bag for the kind-dispatched entry point used by the CLI and
/// the coverage harness.
struct BoundParams {
  std::optional<double> k, h;        // single-policy dispersion
  std::optional<double> k2, h2;      // second policy, two-policy kinds
  std::optional<double> diam;        // diameter
  std::optional<double> r_max;
  std::optional<double> gamma;
  const FiniteHorizonDispersion* fh = nullptr;
  const FiniteHorizonDispersion* fh2 = nullptr;
  bool conservative = false;
};

inline BoundResult evaluate_bound(BoundKind kind, const BoundParams& p, long long T, double delta) {
  auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw DomainError(std::string("bound requires parameter ") + name);
    return *v;
  };
  switch (kind) {
    case BoundKind::azuma_centered:
      return azuma_centered(need(p.k, "K"), T, delta);
    case BoundKind::lil_centered:
      return lil_centered(need(p.k, "K"), T, delta, p.conservative);
    case BoundKind::azuma_uncentered:
      return azuma_uncentered(need(p.k, "K"), need(p.h, "H"), T, delta);
    case BoundKind::lil_uncentered:
      return lil_uncentered(need(p.k, "K"), need(p.h, "H"), T, delta, p.conservative);
    case BoundKind::policy_independent_azuma:
      return policy_independent(need(p.diam, "D"), need(p.r_max, "r_max"), T, delta, false);
    case BoundKind::policy_independent_lil:
      return policy_independent(need(p.diam, "D"), need(p.r_max, "r_max"), T, delta, true,
                                p.conservative);
    case BoundKind::two_policy_azuma:
      return two_policy(need(p.k, "K1"), need(p.h, "H1"), need(p.k2, "K2"), need(p.h2, "H2"),
                        T, delta, false);
    case BoundKind::two_policy_lil:
      return two_policy(need(p.k, "K1"), need(p.h, "H1"), need(p.k2, "K2"), need(p.h2, "H2"),
                        T, delta, true, p.conservative);
    case BoundKind::two_optimal_azuma:
      return two_optimal(need(p.k, "K"), need(p.h, "H"), T, delta, false);
    case BoundKind::two_optimal_lil:
      return two_optimal(need(p.k, "K"), need(p.h, "H"), T, delta, true, p.conservative);
    case BoundKind::regret_gap_azuma:
      return regret_gap(need(p.k, "K*"), need(p.h, "H*"), T, delta, false);
    case BoundKind::regret_gap_lil:
      return regret_gap(need(p.k, "K*"), need(p.h, "H*"), T, delta, true, p.conservative);
    case BoundKind::regret_gap_model_azuma:
      return regret_gap_model(need(p.diam, "D"), need(p.r_max, "r_max"), T, delta, false);
    case BoundKind::regret_gap_model_lil:
      return regret_gap_model(need(p.diam, "D"), need(p.r_max, "r_max"), T, delta, true,
                              p.conservative);
    case BoundKind::disc_azuma:
      return disc_bound(need(p.k, "K_gamma"), need(p.gamma, "gamma"), 0.0, T, delta, false, false);
    case BoundKind::disc_lil:
      return disc_bound(need(p.k, "K_gamma"), need(p.gamma, "gamma"), 0.0, T, delta, true, false,
                        p.conservative);
    case BoundKind::disc_uncentered_azuma:
      return disc_bound(need(p.k, "K_gamma"), need(p.gamma, "gamma"), need(p.r_max, "r_max"), T,
                        delta, false, true);
    case BoundKind::disc_uncentered_lil:
      return disc_bound(need(p.k, "K_gamma"), need(p.gamma, "gamma"), need(p.r_max, "r_max"), T,
                        delta, true, true, p.conservative);
    case BoundKind::disc_two_policy:
      return disc_two_policy(need(p.k, "K1_gamma"), need(p.k2, "K2_gamma"),
                             need(p.gamma, "gamma"), T, delta, false);
    case BoundKind::fh_azuma:
      if (!p.fh) throw DomainError("bound requires finite-horizon dispersion");
      return fh_bound(*p.fh, T, delta, false, false);
    case BoundKind::fh_lil:
      if (!p.fh) throw DomainError("bound requires finite-horizon dispersion");
      return fh_bound(*p.fh, T, delta, true, false, p.conservative);
    case BoundKind::fh_uncentered_azuma:
      if (!p.fh) throw DomainError("bound requires finite-horizon dispersion");
      return fh_bound(*p.fh, T, delta, false, true);
    case BoundKind::fh_uncentered_lil:
      if (!p.fh) throw DomainError("bound requires finite-horizon dispersion");
      return fh_bound(*p.fh, T, delta, true, true, p.conservative);
    case BoundKind::fh_two_policy:
      if (!p.fh || !p.fh2) throw DomainError("bound requires two finite-horizon dispersions");
      return fh_two_policy(*p.fh, *p.fh2, T, delta, false);
  }
  throw DomainError("unknown bound kind");
}

}  // namespace mdpconc
