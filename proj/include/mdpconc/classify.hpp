#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "mdpconc/linalg.hpp"
#include "mdpconc/model.hpp"

namespace mdpconc {

// Per-class gain equality tolerance used by in_pi_ar. Linear solves at
// double precision cannot distinguish gains closer than this.
constexpr double kGainEqualTol = 1e-9;

enum class Flag { no, yes, unknown };

inline const char* to_string(Flag f) {
  switch (f) {
    case Flag::no: return "false";
    case Flag::yes: return "true";
    default: return "unknown";
  }
}

/// Partition of the state space of a Markov chain into closed strongly
/// connected recurrent classes plus transient states.
struct ChainStructure {
  std::vector<std::vector<int>> recurrent_classes;
  std::vector<int> transient_states;
};

namespace detail {

// Iterative Tarjan SCC over an adjacency list. Returns component id per
// vertex; ids are assigned in reverse topological order.
inline int strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                         std::vector<int>& comp) {
  const int n = static_cast<int>(adj.size());
  comp.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0, n_comps = 0;

  struct Frame { int v; std::size_t child; };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.child < adj[f.v].size()) {
        const int w = adj[f.v][f.child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = n_comps;
            if (w == f.v) break;
          }
          ++n_comps;
        }
        const int v = f.v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }
  return n_comps;
}

inline std::vector<std::vector<int>> chain_adjacency(const InducedChain& chain,
                                                     double support_tol) {
  const int n = chain.n_states();
  std::vector<std::vector<int>> adj(n);
  for (int s = 0; s < n; ++s)
    for (int s2 = 0; s2 < n; ++s2)
      if (chain.transition(s, s2) > support_tol) adj[s].push_back(s2);
  return adj;
}

inline std::vector<std::vector<int>> union_adjacency(const MdpModel& m, double support_tol) {
  std::vector<std::vector<int>> adj(m.n_states);
  for (int s = 0; s < m.n_states; ++s)
    for (int s2 = 0; s2 < m.n_states; ++s2) {
      for (int a = 0; a < m.n_actions; ++a) {
        if (m.p(s, a, s2) > support_tol) { adj[s].push_back(s2); break; }
      }
    }
  return adj;
}

inline bool strongly_connected(const std::vector<std::vector<int>>& adj) {
  if (adj.empty()) return true;
  std::vector<int> comp;
  return strongly_connected_components(adj, comp) == 1;
}

}  // namespace detail

/// Decomposes the chain into recurrent classes and transients: a strongly
/// connected component is a recurrent class iff it is closed (no edge
/// leaves it). Entries > support_tol count as edges.
inline ChainStructure classify_chain(const InducedChain& chain, double support_tol = 0.0) {
  const int n = chain.n_states();
  const auto adj = detail::chain_adjacency(chain, support_tol);
  std::vector<int> comp;
  const int n_comps = detail::strongly_connected_components(adj, comp);

  std::vector<char> closed(n_comps, 1);
  for (int s = 0; s < n; ++s)
    for (int w : adj[s])
      if (comp[w] != comp[s]) closed[comp[s]] = 0;

  ChainStructure out;
  std::vector<std::vector<int>> members(n_comps);
  for (int s = 0; s < n; ++s) members[comp[s]].push_back(s);
  for (int c = 0; c < n_comps; ++c) {
    if (closed[c]) out.recurrent_classes.push_back(members[c]);
    else out.transient_states.insert(out.transient_states.end(), members[c].begin(), members[c].end());
  }
  std::sort(out.recurrent_classes.begin(), out.recurrent_classes.end());
  std::sort(out.transient_states.begin(), out.transient_states.end());
  return out;
}

/// True iff every state is reachable from every other under *some* policy,
/// which reduces to strong connectivity of the union digraph
/// (edge s -> s' iff P(s'|s,a) > tol for some a).
inline bool is_communicating(const MdpModel& m, double support_tol = 0.0) {
  return detail::strongly_connected(detail::union_adjacency(m, support_tol));
}

/// Model classification flags. Flags requiring policy enumeration are
/// `unknown` when |A|^|S| exceeds the cap; `communicating` is always decided.
struct MdpClass {
  Flag recurrent = Flag::unknown;
  Flag unichain = Flag::unknown;
  Flag communicating = Flag::unknown;
  Flag weakly_communicating = Flag::unknown;
  std::uint64_t n_policies = 0;
  bool enumerated = false;
};

inline MdpClass classify_model(const MdpModel& m, std::uint64_t cap = 1000000,
                               double support_tol = 0.0) {
  if (m.n_states < 1 || m.n_actions < 1)
    throw DimensionMismatch("classify_model needs a nonempty model");
  MdpClass out;
  out.communicating = is_communicating(m, support_tol) ? Flag::yes : Flag::no;
  out.n_policies = policy_count(m.n_states, m.n_actions);
  if (out.n_policies > cap) return out;

  out.enumerated = true;
  bool all_single_class = true;
  bool all_no_transients = true;
  // recurrent_somewhere[s]: s lies in a recurrent class under some policy.
  std::vector<char> recurrent_somewhere(static_cast<std::size_t>(std::max(m.n_states, 1)), 0);
  const PolicyRange range(m.n_states, m.n_actions, out.n_policies);
  for (std::uint64_t i = 0; i < range.size(); ++i) {
    const auto structure = classify_chain(induced_chain(m, range.at(i)), support_tol);
    if (structure.recurrent_classes.size() != 1) all_single_class = false;
    if (!structure.transient_states.empty()) all_no_transients = false;
    for (const auto& cls : structure.recurrent_classes)
      for (int s : cls) recurrent_somewhere[s] = 1;
  }
  out.unichain = all_single_class ? Flag::yes : Flag::no;
  out.recurrent = (all_single_class && all_no_transients) ? Flag::yes : Flag::no;

  // Weak communication: let R be the union of recurrent states over all
  // policies. Require (i) R mutually reachable within the union digraph
  // restricted to R and closed under at least one action per state, and
  // (ii) every state outside R transient under every policy. Condition (ii)
  // holds by construction of R.
  std::vector<int> r_states;
  for (int s = 0; s < m.n_states; ++s)
    if (recurrent_somewhere[s]) r_states.push_back(s);
  bool weak = !r_states.empty();
  if (weak) {
    std::vector<int> pos(m.n_states, -1);
    for (std::size_t i = 0; i < r_states.size(); ++i) pos[r_states[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> restricted(r_states.size());
    const auto union_adj = detail::union_adjacency(m, support_tol);
    for (std::size_t i = 0; i < r_states.size(); ++i)
      for (int w : union_adj[r_states[i]])
        if (pos[w] >= 0) restricted[i].push_back(pos[w]);
    weak = detail::strongly_connected(restricted);
    for (int s : r_states) {
      if (!weak) break;
      bool has_closed_action = false;
      for (int a = 0; a < m.n_actions && !has_closed_action; ++a) {
        bool support_inside = true;
        for (int s2 = 0; s2 < m.n_states; ++s2)
          if (m.p(s, a, s2) > support_tol && pos[s2] < 0) { support_inside = false; break; }
        has_closed_action = support_inside;
      }
      weak = has_closed_action;
    }
  }
  out.weakly_communicating = weak ? Flag::yes : Flag::no;
  return out;
}

/// Stationary distribution of the chain restricted to a closed, strongly
/// connected class: solves mu' (I - P_C) = 0 with sum(mu) = 1.
inline Vec class_stationary_distribution(const InducedChain& chain,
                                         const std::vector<int>& cls) {
  const int k = static_cast<int>(cls.size());
  Matrix a(k, k);
  Vec b(k, 0.0);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      a(j, i) = (i == j ? 1.0 : 0.0) - chain.transition(cls[i], cls[j]);
  for (int i = 0; i < k; ++i) a(k - 1, i) = 1.0;  // replace one equation by normalization
  b[k - 1] = 1.0;
  return lu_solve(std::move(a), std::move(b));
}

/// Long-run average reward of a single recurrent class.
inline double class_gain(const InducedChain& chain, const std::vector<int>& cls) {
  const Vec mu = class_stationary_distribution(chain, cls);
  double gain = 0.0;
  for (std::size_t i = 0; i < cls.size(); ++i) gain += mu[i] * chain.reward[cls[i]];
  return gain;
}

/// Membership test for the policy class whose average-reward evaluation
/// equation has a unique gain: unichain induced chains qualify outright;
/// multichain ones qualify iff every recurrent class has the same gain.
inline bool in_pi_ar(const MdpModel& m, const StationaryPolicy& pi) {
  const InducedChain chain = induced_chain(m, pi);
  const ChainStructure structure = classify_chain(chain);
  if (structure.recurrent_classes.size() <= 1) return true;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& cls : structure.recurrent_classes) {
    const double g = class_gain(chain, cls);
    if (first) { lo = hi = g; first = false; }
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return (hi - lo) <= kGainEqualTol;
}

}  // namespace mdpconc
