#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mdpconc/errors.hpp"
#include "mdpconc/linalg.hpp"
#include "mdpconc/rng.hpp"

namespace mdpconc {

// Tolerance for row-stochasticity checks. Rows are never renormalized
// silently: a violated row is a modeling bug, not noise to be hidden.
constexpr double kRowSumTol = 1e-12;

/// Finite MDP with dense 0-based state/action indices, transition tensor
/// P(s'|s,a) and bounded rewards r(s,a) in [0, r_max]. r_max is declared,
/// not inferred: several bounds depend on the declared range.
/// Immutable after construction; safe to share across threads.
struct MdpModel {
  int n_states = 0;
  int n_actions = 0;
  double r_max = 1.0;
  std::vector<double> transition;  // [s][a][s'] row-major
  std::vector<double> reward;      // [s][a]
  std::optional<double> gamma;     // optional model-level defaults
  std::optional<int> horizon;
  std::vector<std::string> state_names;   // display only, never computed on
  std::vector<std::string> action_names;

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const {
    return reward[static_cast<std::size_t>(s) * n_actions + a];
  }
};

/// Time-invariant deterministic decision rule, one action per state.
struct StationaryPolicy {
  std::vector<int> decision;

  int operator()(int s) const { return decision[s]; }
  bool operator==(const StationaryPolicy& o) const = default;
};

/// Per-stage decision rules for horizon h: stages[t], t = 0..h.
struct FiniteHorizonPolicy {
  std::vector<StationaryPolicy> stages;

  int horizon() const { return static_cast<int>(stages.size()) - 1; }
  int act(int t, int s) const { return stages[t].decision[s]; }
};

inline void check_policy(const MdpModel& m, const StationaryPolicy& pi) {
  if (static_cast<int>(pi.decision.size()) != m.n_states)
    throw InvalidPolicy("policy covers " + std::to_string(pi.decision.size()) +
                        " states, model has " + std::to_string(m.n_states));
  for (int s = 0; s < m.n_states; ++s)
    if (pi.decision[s] < 0 || pi.decision[s] >= m.n_actions)
      throw InvalidPolicy("action " + std::to_string(pi.decision[s]) +
                          " at state " + std::to_string(s) + " out of range");
}

inline void check_policy(const MdpModel& m, const FiniteHorizonPolicy& pi) {
  if (pi.stages.empty()) throw InvalidPolicy("finite-horizon policy has no stages");
  for (const auto& stage : pi.stages) check_policy(m, stage);
}

/// Markov chain induced by running a stationary policy: row-stochastic
/// transition matrix P(s'|s) and per-state reward r(s).
struct InducedChain {
  Matrix transition;
  Vec reward;

  int n_states() const { return transition.rows(); }
};

inline InducedChain induced_chain(const MdpModel& m, const StationaryPolicy& pi) {
  check_policy(m, pi);
  InducedChain chain{Matrix(m.n_states, m.n_states), Vec(m.n_states, 0.0)};
  for (int s = 0; s < m.n_states; ++s) {
    const int a = pi(s);
    for (int s2 = 0; s2 < m.n_states; ++s2) chain.transition(s, s2) = m.p(s, a, s2);
    chain.reward[s] = m.r(s, a);
  }
  return chain;
}

/// Enforces all model invariants. Returns the model unchanged on success.
inline MdpModel validate_model(MdpModel raw) {
  if (raw.n_states < 1 || raw.n_actions < 1)
    throw DimensionMismatch("n_states and n_actions must be >= 1");
  if (!(raw.r_max > 0.0) || !std::isfinite(raw.r_max))
    throw DomainError("r_max must be a positive finite real");
  const std::size_t nt = static_cast<std::size_t>(raw.n_states) * raw.n_actions * raw.n_states;
  const std::size_t nr = static_cast<std::size_t>(raw.n_states) * raw.n_actions;
  if (raw.transition.size() != nt)
    throw DimensionMismatch("transition tensor has " + std::to_string(raw.transition.size()) +
                            " entries, expected " + std::to_string(nt));
  if (raw.reward.size() != nr)
    throw DimensionMismatch("reward table has " + std::to_string(raw.reward.size()) +
                            " entries, expected " + std::to_string(nr));
  if (!raw.state_names.empty() && static_cast<int>(raw.state_names.size()) != raw.n_states)
    throw DimensionMismatch("state_names length mismatch");
  if (!raw.action_names.empty() && static_cast<int>(raw.action_names.size()) != raw.n_actions)
    throw DimensionMismatch("action_names length mismatch");
  if (raw.gamma && !(*raw.gamma > 0.0 && *raw.gamma < 1.0))
    throw DomainError("gamma must lie in (0,1)");
  if (raw.horizon && *raw.horizon < 0) throw DomainError("horizon must be >= 0");

  for (int s = 0; s < raw.n_states; ++s) {
    for (int a = 0; a < raw.n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < raw.n_states; ++s2) {
        const double p = raw.p(s, a, s2);
        if (!(p >= 0.0) || p > 1.0 || !std::isfinite(p))
          throw NonStochasticRow(s, a, p - 1.0);
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kRowSumTol) throw NonStochasticRow(s, a, sum - 1.0);
      const double rv = raw.r(s, a);
      if (!(rv >= 0.0) || rv > raw.r_max || !std::isfinite(rv))
        throw RewardOutOfRange(s, a, rv, raw.r_max);
    }
  }
  return raw;
}

// ---------------------------------------------------------------------------
// On-disk format: a JSON object with n_states, n_actions, r_max,
// transition[s][a][s'], reward[s][a], plus optional gamma / horizon /
// state_names / action_names. Doubles round-trip bit-exactly.
// ---------------------------------------------------------------------------

inline nlohmann::json model_to_json(const MdpModel& m) {
  nlohmann::json j;
  j["n_states"] = m.n_states;
  j["n_actions"] = m.n_actions;
  j["r_max"] = m.r_max;
  nlohmann::json trans = nlohmann::json::array();
  for (int s = 0; s < m.n_states; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    for (int a = 0; a < m.n_actions; ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int s2 = 0; s2 < m.n_states; ++s2) row.push_back(m.p(s, a, s2));
      per_action.push_back(std::move(row));
    }
    trans.push_back(std::move(per_action));
  }
  j["transition"] = std::move(trans);
  nlohmann::json rew = nlohmann::json::array();
  for (int s = 0; s < m.n_states; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < m.n_actions; ++a) row.push_back(m.r(s, a));
    rew.push_back(std::move(row));
  }
  j["reward"] = std::move(rew);
  if (m.gamma) j["gamma"] = *m.gamma;
  if (m.horizon) j["horizon"] = *m.horizon;
  if (!m.state_names.empty()) j["state_names"] = m.state_names;
  if (!m.action_names.empty()) j["action_names"] = m.action_names;
  return j;
}

inline MdpModel model_from_json(const nlohmann::json& j) {
  MdpModel m;
  try {
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.r_max = j.at("r_max").get<double>();
    const auto& trans = j.at("transition");
    const auto& rew = j.at("reward");
    if (static_cast<int>(trans.size()) != m.n_states)
      throw DimensionMismatch("transition outer dimension != n_states");
    if (static_cast<int>(rew.size()) != m.n_states)
      throw DimensionMismatch("reward outer dimension != n_states");
    m.transition.reserve(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states);
    m.reward.reserve(static_cast<std::size_t>(m.n_states) * m.n_actions);
    for (int s = 0; s < m.n_states; ++s) {
      if (static_cast<int>(trans[s].size()) != m.n_actions ||
          static_cast<int>(rew[s].size()) != m.n_actions)
        throw DimensionMismatch("per-state action dimension != n_actions");
      for (int a = 0; a < m.n_actions; ++a) {
        if (static_cast<int>(trans[s][a].size()) != m.n_states)
          throw DimensionMismatch("transition row length != n_states");
        for (int s2 = 0; s2 < m.n_states; ++s2)
          m.transition.push_back(trans[s][a][s2].get<double>());
        m.reward.push_back(rew[s][a].get<double>());
      }
    }
    if (j.contains("gamma")) m.gamma = j.at("gamma").get<double>();
    if (j.contains("horizon")) m.horizon = j.at("horizon").get<int>();
    if (j.contains("state_names")) m.state_names = j.at("state_names").get<std::vector<std::string>>();
    if (j.contains("action_names")) m.action_names = j.at("action_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DimensionMismatch(std::string("malformed model JSON: ") + e.what());
  }
  return validate_model(std::move(m));
}

inline MdpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DimensionMismatch(std::string("cannot parse JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const MdpModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileNotFound(path);
  out << model_to_json(m).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Policy enumeration
// ---------------------------------------------------------------------------

/// All |A|^|S| deterministic stationary policies in lexicographic order of
/// the decision vector. Lazily indexed so callers can stream without
/// materializing the whole set.
class PolicyRange {
 public:
  PolicyRange(int n_states, int n_actions, std::uint64_t count)
      : n_states_(n_states), n_actions_(n_actions), count_(count) {}

  std::uint64_t size() const { return count_; }

  StationaryPolicy at(std::uint64_t index) const {
    StationaryPolicy pi;
    pi.decision.assign(n_states_, 0);
    for (int s = n_states_ - 1; s >= 0; --s) {
      pi.decision[s] = static_cast<int>(index % n_actions_);
      index /= n_actions_;
    }
    return pi;
  }

  class iterator {
   public:
    iterator(const PolicyRange* range, std::uint64_t i) : range_(range), i_(i) {}
    StationaryPolicy operator*() const { return range_->at(i_); }
    iterator& operator++() { ++i_; return *this; }
    bool operator!=(const iterator& o) const { return i_ != o.i_; }

   private:
    const PolicyRange* range_;
    std::uint64_t i_;
  };

  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, count_); }

 private:
  int n_states_;
  int n_actions_;
  std::uint64_t count_;
};

/// Number of deterministic stationary policies, saturating at 2^64-1.
inline std::uint64_t policy_count(int n_states, int n_actions) {
  std::uint64_t count = 1;
  for (int s = 0; s < n_states; ++s) {
    const std::uint64_t next = count * static_cast<std::uint64_t>(n_actions);
    if (n_actions != 0 && next / n_actions != count) return ~0ULL;  // overflow
    count = next;
  }
  return count;
}

inline PolicyRange enumerate_policies(const MdpModel& m, std::uint64_t cap) {
  const std::uint64_t count = policy_count(m.n_states, m.n_actions);
  if (count > cap) throw EnumerationTooLarge(count, cap);
  return PolicyRange(m.n_states, m.n_actions, count);
}

// ---------------------------------------------------------------------------
// Random test-fixture models
// ---------------------------------------------------------------------------

enum class ModelStructure { dense, communicating, unichain };

/// Deterministic-in-seed random model. "dense" draws every transition row
/// from the uniform simplex. "communicating" mixes epsilon=0.01 of a random
/// cyclic permutation into every action, which makes the union graph
/// strongly connected. "unichain" mixes epsilon=0.01 of the uniform row into
/// every (s,a), so every induced chain has a single recurrent class.
inline MdpModel random_model(int n_states, int n_actions, double r_max,
                             ModelStructure structure, std::uint64_t seed) {
  constexpr double kEps = 0.01;
  MdpModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.r_max = r_max;
  m.transition.resize(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
  m.reward.resize(static_cast<std::size_t>(n_states) * n_actions, 0.0);

  std::vector<int> cycle(n_states, 0);
  if (structure == ModelStructure::communicating) {
    // Random cyclic permutation: shuffle an ordering, then step along it.
    std::vector<int> order(n_states);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n_states - 1; i > 0; --i) {
      const double u = rng::uniform01(seed, rng::kStreamModelPermutation, static_cast<std::uint64_t>(i));
      const int k = std::min(i, static_cast<int>(u * (i + 1)));
      std::swap(order[i], order[k]);
    }
    for (int i = 0; i < n_states; ++i) cycle[order[i]] = order[(i + 1) % n_states];
  }

  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const std::uint64_t base = (static_cast<std::uint64_t>(s) * n_actions + a) *
                                 static_cast<std::uint64_t>(n_states);
      // Dirichlet(1,..,1) row via normalized exponentials.
      Vec row(n_states, 0.0);
      double total = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double u = rng::uniform01(seed, rng::kStreamModelTransition, base + s2);
        row[s2] = -std::log(1.0 - u);
        total += row[s2];
      }
      if (total <= 0.0) { row.assign(n_states, 1.0); total = n_states; }
      for (int s2 = 0; s2 < n_states; ++s2) row[s2] /= total;

      if (structure == ModelStructure::communicating) {
        for (int s2 = 0; s2 < n_states; ++s2) row[s2] *= (1.0 - kEps);
        row[cycle[s]] += kEps;
      } else if (structure == ModelStructure::unichain) {
        const double mix = kEps / n_states;
        for (int s2 = 0; s2 < n_states; ++s2) row[s2] = (1.0 - kEps) * row[s2] + mix;
      }
      double sum = 0.0;
      for (double v : row) sum += v;
      for (int s2 = 0; s2 < n_states; ++s2)
        m.transition[base + s2] = row[s2] / sum;

      m.reward[static_cast<std::size_t>(s) * n_actions + a] =
          r_max * rng::uniform01(seed, rng::kStreamModelReward,
                                 static_cast<std::uint64_t>(s) * n_actions + a);
    }
  }
  return validate_model(std::move(m));
}

/// Uniformly random decision vector, deterministic in (seed, draw).
inline StationaryPolicy random_policy(const MdpModel& m, std::uint64_t seed, std::uint64_t draw) {
  StationaryPolicy pi;
  pi.decision.resize(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    const double u = rng::uniform01(seed, rng::kStreamPolicyDraw,
                                    draw * static_cast<std::uint64_t>(m.n_states) + s);
    pi.decision[s] = std::min(m.n_actions - 1, static_cast<int>(u * m.n_actions));
  }
  return pi;
}

}  // namespace mdpconc
