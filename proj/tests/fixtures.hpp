#pragma once

#include "mdpconc/mdpconc.hpp"

// Small hand-built models reused across the test suites.
namespace fixtures {

using namespace mdpconc;

// Every row is (0.5, 0.5); r(0,.) = 1, r(1,.) = 0. Gain 0.5, bias (1,0),
// K = sigma = 0.5, H = 1, diameter 2.
inline MdpModel symmetric_model(int n_actions = 2) {
  MdpModel m;
  m.n_states = 2;
  m.n_actions = n_actions;
  m.r_max = 1.0;
  m.transition.assign(static_cast<std::size_t>(2) * n_actions * 2, 0.5);
  m.reward.resize(2 * n_actions);
  for (int a = 0; a < n_actions; ++a) {
    m.reward[a] = 1.0;
    m.reward[n_actions + a] = 0.0;
  }
  return validate_model(std::move(m));
}

// Every action deterministically moves to the other state; r(0,.) = 1,
// r(1,.) = 0. Every policy alternates, so the gain is always 0.5.
inline MdpModel swap_model(int n_actions = 2) {
  MdpModel m;
  m.n_states = 2;
  m.n_actions = n_actions;
  m.r_max = 1.0;
  m.transition.assign(static_cast<std::size_t>(2) * n_actions * 2, 0.0);
  m.reward.resize(2 * n_actions);
  for (int a = 0; a < n_actions; ++a) {
    m.transition[(0 * n_actions + a) * 2 + 1] = 1.0;
    m.transition[(1 * n_actions + a) * 2 + 0] = 1.0;
    m.reward[a] = 1.0;
    m.reward[n_actions + a] = 0.0;
  }
  return validate_model(std::move(m));
}

// Deterministic n-cycle with one action; reward 1 only at state 0.
inline MdpModel cycle_model(int n) {
  MdpModel m;
  m.n_states = n;
  m.n_actions = 1;
  m.r_max = 1.0;
  m.transition.assign(static_cast<std::size_t>(n) * n, 0.0);
  m.reward.assign(n, 0.0);
  for (int s = 0; s < n; ++s) m.transition[static_cast<std::size_t>(s) * n + (s + 1) % n] = 1.0;
  m.reward[0] = 1.0;
  return validate_model(std::move(m));
}

// Action 0 stays in place, action 1 swaps. Policy (0,0) has two absorbing
// states; the model is communicating but not unichain.
inline MdpModel stay_swap_model(double r0, double r1) {
  MdpModel m;
  m.n_states = 2;
  m.n_actions = 2;
  m.r_max = 1.0;
  m.transition = {
      1.0, 0.0,  // s=0, a=stay
      0.0, 1.0,  // s=0, a=swap
      0.0, 1.0,  // s=1, a=stay
      1.0, 0.0,  // s=1, a=swap
  };
  m.reward = {r0, r0, r1, r1};
  return validate_model(std::move(m));
}

// States 0 and 1 cycle; state 2 drains into them and is transient under the
// single action. Weakly communicating but not communicating.
inline MdpModel weakly_comm_model() {
  MdpModel m;
  m.n_states = 3;
  m.n_actions = 1;
  m.r_max = 1.0;
  m.transition = {
      0.0, 1.0, 0.0,
      1.0, 0.0, 0.0,
      0.5, 0.5, 0.0,
  };
  m.reward = {1.0, 0.0, 0.5};
  return validate_model(std::move(m));
}

// Single state, two actions with rewards (0, 1).
inline MdpModel one_state_model() {
  MdpModel m;
  m.n_states = 1;
  m.n_actions = 2;
  m.r_max = 1.0;
  m.transition = {1.0, 1.0};
  m.reward = {0.0, 1.0};
  return validate_model(std::move(m));
}

// Uniform-transition model whose rewards depend only on the action:
// r(s,a) = a / (n_actions - 1).
inline MdpModel action_reward_model(int n_states, int n_actions) {
  MdpModel m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.r_max = 1.0;
  m.transition.assign(
      static_cast<std::size_t>(n_states) * n_actions * n_states,
      1.0 / n_states);
  m.reward.resize(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      m.reward[static_cast<std::size_t>(s) * n_actions + a] =
          static_cast<double>(a) / (n_actions - 1);
  return validate_model(std::move(m));
}

// Gain of a unichain policy by Cesaro-averaged power iteration on the
// induced chain; independent of the linear-system solver.
inline double power_iteration_gain(const MdpModel& m, const StationaryPolicy& pi,
                                   int iters = 20000) {
  const InducedChain chain = induced_chain(m, pi);
  const int n = chain.n_states();
  Vec mu(n, 1.0 / n), next(n, 0.0), avg(n, 0.0);
  for (int k = 0; k < iters; ++k) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += mu[i] * chain.transition(i, j);
      next[j] = acc;
    }
    mu = next;
    for (int j = 0; j < n; ++j) avg[j] += mu[j];
  }
  double gain = 0.0;
  for (int j = 0; j < n; ++j) gain += (avg[j] / iters) * chain.reward[j];
  return gain;
}

// Expected total reward of a finite-horizon policy by exhaustive path
// enumeration; independent of backward induction.
inline double brute_force_fh_value(const MdpModel& m, const FiniteHorizonPolicy& pi,
                                   int s0, int t = 0) {
  if (t > pi.horizon()) return 0.0;
  const int a = pi.act(t, s0);
  double value = m.r(s0, a);
  for (int s2 = 0; s2 < m.n_states; ++s2) {
    const double p = m.p(s0, a, s2);
    if (p > 0.0) value += p * brute_force_fh_value(m, pi, s2, t + 1);
  }
  return value;
}

}  // namespace fixtures
