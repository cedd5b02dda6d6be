#pragma once

#include <vector>

#include "rrll/dataset.hpp"
#include "rrll/env.hpp"
#include "rrll/mlp.hpp"
#include "rrll/policy.hpp"

namespace rrll {

// Deterministic label correction: argmax policy actions along the trajectory,
// previous action seeded with the predictor's first label. Needs no ground
// truth.
inline std::vector<int> correct_labels(const trajectory& traj, const mlp& policy, double eta,
                                       int k) {
  if (traj.instances.empty()) throw domain_error("correct_labels: empty trajectory");
  std::vector<int> actions;
  actions.reserve(traj.instances.size());
  std::vector<double> state;
  mlp_cache cache;
  int prev_action = traj.instances.front().pred_label;
  for (const instance& ins : traj.instances) {
    build_state(ins, prev_action, k, state);
    const auto probs = policy_forward(policy, state, eta, cache);
    const int action = argmax_action(probs);
    actions.push_back(action);
    prev_action = action;
  }
  return actions;
}

// Same action chain, but scored: full step records with rewards/categories.
// Requires true labels.
inline std::vector<step_record> run_argmax_episode(const trajectory& traj, const mlp& policy,
                                                   double eta, const reward_spec& spec) {
  mlp_cache cache;
  const action_selector select = [&](std::span<const double> state, const instance&, int) {
    return argmax_action(policy_forward(policy, state, eta, cache));
  };
  return run_episode(traj, select, spec);
}

} // namespace rrll
