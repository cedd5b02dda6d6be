#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rrll/adam.hpp"
#include "rrll/dataset.hpp"
#include "rrll/env.hpp"
#include "rrll/errors.hpp"
#include "rrll/mlp.hpp"
#include "rrll/policy.hpp"
#include "rrll/rng.hpp"
#include "rrll/text.hpp"

namespace rrll {

// Policy-gradient training setup. Defaults are the tuned single-run values.
struct train_config {
  double learning_rate = 3e-4; // initial; decays 1%/epoch
  double switch_penalty = 1.0; // weight on log-prob of label switches
  double temperature = 1.0;    // softmax temperature
  double explore_eps = 0.1;    // epsilon-greedy mixing during training
  int epochs = 50;
  std::uint64_t seed = 1;
  reward_variant variant = reward_variant::full;
  int max_segment_len = 0; // >= 2 splits long trajectories; 0 disables

  // One optimizer update per trajectory (default) or one per epoch with
  // gradients accumulated across all trajectories.
  enum class batch_mode { per_trajectory, per_epoch };
  batch_mode batching = batch_mode::per_trajectory;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw config_error("learning_rate must be positive and finite");
    if (!(switch_penalty >= 0.0) || !std::isfinite(switch_penalty))
      throw config_error("switch_penalty must be >= 0 and finite");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw config_error("temperature must be positive and finite");
    if (explore_eps < 0.0 || explore_eps > 1.0) throw config_error("explore_eps must be in [0, 1]");
    if (epochs < 1) throw config_error("epochs must be >= 1");
    if (max_segment_len != 0 && max_segment_len < 2)
      throw config_error("max_segment_len must be 0 (off) or >= 2");
  }
};

// Hidden widths: the policy's scale with the alphabet, the baseline's do not.
inline std::vector<int> policy_dims(int k, int m) {
  const int h = 32 + 2 * k;
  return {state_dim(k, m), h, h, k};
}

// Hand-wired policy that reproduces the base predictor: the predicted-label
// one-hot block is routed identity-fashion through both ReLU layers, so the
// logits are `strength` on y-hat and 0 elsewhere. At eta = 1 and strength 8
// the maintain action carries ~0.9987 probability. Serves as a warm start and
// as the fixture for the perfect-predictor stability check.
inline mlp make_maintain_policy(int k, int m, double strength = 8.0) {
  if (k < 2 || m < 1) throw domain_error("make_maintain_policy: need k >= 2, m >= 1");
  mlp net;
  net.dims = policy_dims(k, m);
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    net.weights.emplace_back(
        static_cast<std::size_t>(net.dims[l]) * static_cast<std::size_t>(net.dims[l + 1]), 0.0);
    net.biases.emplace_back(static_cast<std::size_t>(net.dims[l + 1]), 0.0);
  }
  for (int c = 0; c < k; ++c) {
    net.weights[0][static_cast<std::size_t>(c) * static_cast<std::size_t>(net.dims[0]) +
                   static_cast<std::size_t>(c)] = 1.0;
    net.weights[1][static_cast<std::size_t>(c) * static_cast<std::size_t>(net.dims[1]) +
                   static_cast<std::size_t>(c)] = 1.0;
    net.weights[2][static_cast<std::size_t>(c) * static_cast<std::size_t>(net.dims[2]) +
                   static_cast<std::size_t>(c)] = strength;
  }
  return net;
}

inline std::vector<int> baseline_dims(int k, int m) {
  return {state_dim(k, m), 32, 32, 1};
}

// One row of the training stats table. Loss terms are per-trajectory means.
struct epoch_stats {
  int epoch = 0;
  double mean_return = 0.0;    // mean cumulative reward per trajectory
  double accuracy = 0.0;       // executed actions vs truth, over all steps
  double violation_rate = 0.0; // rule-breaking consecutive action pairs
  double policy_loss = 0.0;    // sum_t -(G_t - b_t) log pi
  double baseline_loss = 0.0;  // sum_t (b_t - G_t)^2
  double penalty_term = 0.0;   // alpha * sum_t 1{switch} log pi
  double lr = 0.0;
};

inline std::string serialize_stats(std::span<const epoch_stats> stats) {
  std::string out = "epoch\tmean_return\taccuracy\tviolation_rate\tpolicy_loss\tbaseline_loss\tpenalty_term\tlr\n";
  for (const auto& s : stats) {
    out += std::to_string(s.epoch);
    for (double v : {s.mean_return, s.accuracy, s.violation_rate, s.policy_loss, s.baseline_loss,
                     s.penalty_term, s.lr}) {
      out += '\t';
      out += fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<epoch_stats> parse_stats(std::string_view text, const std::string& origin) {
  std::vector<epoch_stats> out;
  const auto lines = split(text, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 8)
      throw data_error(origin + " line " + std::to_string(i + 1) + ": expected 8 columns");
    epoch_stats s;
    s.epoch = static_cast<int>(parse_int(cols[0], "stats epoch"));
    s.mean_return = parse_double(cols[1], "stats mean_return");
    s.accuracy = parse_double(cols[2], "stats accuracy");
    s.violation_rate = parse_double(cols[3], "stats violation_rate");
    s.policy_loss = parse_double(cols[4], "stats policy_loss");
    s.baseline_loss = parse_double(cols[5], "stats baseline_loss");
    s.penalty_term = parse_double(cols[6], "stats penalty_term");
    s.lr = parse_double(cols[7], "stats lr");
    out.push_back(s);
  }
  return out;
}

// Undiscounted returns-to-go: G_t = sum_{t' >= t} r_{t'}.
inline std::vector<double> returns_to_go(std::span<const int> rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i > 0; --i) {
    acc += rewards[i - 1];
    out[i - 1] = acc;
  }
  return out;
}

// Per-step weight on log pi(a_t | s_t) in the minimized objective:
//   -(G_t - b_t)  +  switch_penalty * 1{a_t != a_{t-1}}.
// The first step has no sampled predecessor, so it carries no switch term;
// a constant action sequence contributes no penalty at all.
inline std::vector<double> policy_objective_coeffs(std::span<const int> actions,
                                                   std::span<const double> returns,
                                                   std::span<const double> baseline_values,
                                                   double switch_penalty) {
  if (actions.size() != returns.size() || actions.size() != baseline_values.size())
    throw domain_error("policy_objective_coeffs: length mismatch");
  std::vector<double> coeffs(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    double c = -(returns[t] - baseline_values[t]);
    if (t > 0 && actions[t] != actions[t - 1]) c += switch_penalty;
    coeffs[t] = c;
  }
  return coeffs;
}

namespace detail {

// Scratch reused across trajectories within an epoch.
struct epoch_workspace {
  std::vector<mlp_cache> policy_caches;
  std::vector<mlp_cache> baseline_caches;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> probs;
  std::vector<int> actions;
  std::vector<int> rewards;
  std::vector<double> values;
  mlp_grads policy_grads;
  mlp_grads baseline_grads;
};

} // namespace detail

// One pass over all trajectories in a fresh shuffled order. For every
// trajectory: run the episode with the epsilon-greedy behaviour policy, form
// returns-to-go, fit the baseline to them (its update uses pre-update values
// and is applied first), then update the policy with advantage plus switch
// penalty coefficients. Aborts loudly on any non-finite loss or gradient.
inline epoch_stats train_epoch(const std::vector<trajectory>& trajs, const reward_spec& spec,
                               const train_config& cfg, double lr, int epoch_index, mlp& policy,
                               adam_state& policy_opt, mlp& baseline, adam_state& baseline_opt,
                               rng& gen) {
  const int k = spec.rules.alphabet().size();
  const bool per_traj = cfg.batching == train_config::batch_mode::per_trajectory;

  std::vector<std::size_t> order(trajs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  gen.shuffle(order);

  detail::epoch_workspace ws;
  ws.policy_grads = zeros_like(policy);
  ws.baseline_grads = zeros_like(baseline);

  double total_return = 0.0, policy_loss_sum = 0.0, baseline_loss_sum = 0.0, penalty_sum = 0.0;
  long long correct = 0, steps = 0, violations = 0, pairs = 0;

  for (const std::size_t idx : order) {
    const trajectory& traj = trajs[idx];
    if (traj.instances.empty()) throw data_error("train_epoch: empty trajectory " + traj.seq_id);
    const std::size_t len = traj.instances.size();
    if (ws.policy_caches.size() < len) {
      ws.policy_caches.resize(len);
      ws.baseline_caches.resize(len);
      ws.states.resize(len);
      ws.probs.resize(len);
    }
    ws.actions.resize(len);
    ws.rewards.resize(len);
    ws.values.resize(len);

    // Behaviour rollout. Parameters are frozen for the whole episode, so the
    // forward caches stay valid for the backward pass below.
    int prev_action = traj.instances.front().pred_label;
    for (std::size_t t = 0; t < len; ++t) {
      const instance& ins = traj.instances[t];
      if (!ins.has_truth())
        throw data_error("train_epoch: trajectory " + traj.seq_id + " lacks true labels");
      build_state(ins, prev_action, k, ws.states[t]);
      ws.probs[t] = policy_forward(policy, ws.states[t], cfg.temperature, ws.policy_caches[t]);
      const int action = sample_action(ws.probs[t], cfg.explore_eps, gen);
      ws.actions[t] = action;
      ws.rewards[t] = spec.reward(ins.true_label, ins.pred_label, action, prev_action);
      prev_action = action;

      ++steps;
      if (action == ins.true_label) ++correct;
      if (t > 0) {
        ++pairs;
        if (!spec.rules.is_reachable(ws.actions[t - 1], action)) ++violations;
      }
    }

    const std::vector<double> returns = returns_to_go(std::span<const int>(ws.rewards.data(), len));
    for (std::size_t t = 0; t < len; ++t)
      ws.values[t] = baseline_forward(baseline, ws.states[t], ws.baseline_caches[t]);

    double traj_policy_loss = 0.0, traj_baseline_loss = 0.0, traj_penalty = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double diff = ws.values[t] - returns[t];
      traj_baseline_loss += diff * diff;
      const double logp =
          log_prob_from_logits(ws.policy_caches[t].output, ws.actions[t], cfg.temperature);
      traj_policy_loss += -(returns[t] - ws.values[t]) * logp;
      if (t > 0 && ws.actions[t] != ws.actions[t - 1]) traj_penalty += cfg.switch_penalty * logp;
    }
    if (!std::isfinite(traj_policy_loss) || !std::isfinite(traj_baseline_loss) ||
        !std::isfinite(traj_penalty))
      throw numeric_error("non-finite loss in trajectory " + traj.seq_id);

    if (per_traj) {
      ws.policy_grads.zero();
      ws.baseline_grads.zero();
    }
    for (std::size_t t = 0; t < len; ++t)
      baseline_backward_step(baseline, ws.baseline_caches[t], ws.values[t], returns[t],
                             ws.baseline_grads);
    const std::vector<double> coeffs =
        policy_objective_coeffs(std::span<const int>(ws.actions.data(), len), returns,
                                std::span<const double>(ws.values.data(), len), cfg.switch_penalty);
    for (std::size_t t = 0; t < len; ++t)
      policy_backward_step(policy, ws.policy_caches[t], ws.probs[t], ws.actions[t], coeffs[t],
                           cfg.temperature, ws.policy_grads);

    if (per_traj) {
      try {
        // Baseline first; the coefficients above already hold its pre-update
        // values, and the two parameter sets are disjoint.
        adam_step(baseline, ws.baseline_grads, baseline_opt, lr);
        adam_step(policy, ws.policy_grads, policy_opt, lr);
      } catch (const numeric_error& e) {
        throw numeric_error("trajectory " + traj.seq_id + ": " + e.what());
      }
    }

    total_return += std::accumulate(ws.rewards.begin(), ws.rewards.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
    policy_loss_sum += traj_policy_loss;
    baseline_loss_sum += traj_baseline_loss;
    penalty_sum += traj_penalty;
  }

  if (!per_traj) {
    try {
      adam_step(baseline, ws.baseline_grads, baseline_opt, lr);
      adam_step(policy, ws.policy_grads, policy_opt, lr);
    } catch (const numeric_error& e) {
      throw numeric_error(std::string("epoch update: ") + e.what());
    }
  }

  const double n = static_cast<double>(trajs.size());
  epoch_stats out;
  out.epoch = epoch_index;
  out.mean_return = total_return / n;
  out.accuracy = steps > 0 ? static_cast<double>(correct) / static_cast<double>(steps) : 0.0;
  out.violation_rate = pairs > 0 ? static_cast<double>(violations) / static_cast<double>(pairs) : 0.0;
  out.policy_loss = policy_loss_sum / n;
  out.baseline_loss = baseline_loss_sum / n;
  out.penalty_term = penalty_sum / n;
  out.lr = lr;
  return out;
}

struct train_result {
  mlp policy;
  mlp baseline;
  adam_state policy_opt;
  adam_state baseline_opt;
  std::vector<epoch_stats> stats;
};

namespace detail {
inline constexpr std::uint64_t k_stream_init = 11;
inline constexpr std::uint64_t k_stream_epochs = 12;
} // namespace detail

// Training from explicitly supplied initial networks (a warm start or a
// checkpoint's nets). Optimizer state starts fresh; everything else matches
// train() below, including the epoch rng stream.
inline train_result train_from(const dataset& data, const rule_set& rules, const train_config& cfg,
                               mlp initial_policy, mlp initial_baseline) {
  cfg.validate();
  if (!data.has_truth) throw data_error("training data must carry true labels");
  if (data.alphabet != rules.alphabet().names())
    throw config_error("rule alphabet does not match the dataset alphabet");
  if (data.trajectories.empty()) throw data_error("training data has no trajectories");

  const int k = rules.alphabet().size();
  const int m = data.feature_dim;
  if (initial_policy.input_dim() != state_dim(k, m) || initial_policy.output_dim() != k ||
      initial_baseline.input_dim() != state_dim(k, m) || initial_baseline.output_dim() != 1)
    throw config_error("initial network dimensions do not match the dataset");

  const std::vector<trajectory>* trajs = &data.trajectories;
  std::vector<trajectory> segmented;
  if (cfg.max_segment_len >= 2) {
    segmented = segment(data.trajectories, cfg.max_segment_len);
    trajs = &segmented;
  }

  train_result res;
  res.policy = std::move(initial_policy);
  res.baseline = std::move(initial_baseline);
  res.policy_opt = make_adam(res.policy);
  res.baseline_opt = make_adam(res.baseline);

  const reward_spec spec{cfg.variant, rules};
  rng epoch_gen(mix_seed(cfg.seed, detail::k_stream_epochs));
  res.stats.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int e = 0; e < cfg.epochs; ++e) {
    const double lr = scheduled_lr(cfg.learning_rate, e);
    res.stats.push_back(train_epoch(*trajs, spec, cfg, lr, e, res.policy, res.policy_opt,
                                    res.baseline, res.baseline_opt, epoch_gen));
  }
  return res;
}

// Full training run: seeded init of both nets, epochs with the decaying
// learning-rate schedule, optional trajectory segmentation up front.
// Deterministic: a (dataset, config) pair pins every parameter bit.
inline train_result train(const dataset& data, const rule_set& rules, const train_config& cfg) {
  cfg.validate();
  if (data.alphabet != rules.alphabet().names())
    throw config_error("rule alphabet does not match the dataset alphabet");
  const int k = rules.alphabet().size();
  const int m = data.feature_dim;
  rng init_gen(mix_seed(cfg.seed, detail::k_stream_init));
  mlp policy = init_mlp(policy_dims(k, m), init_gen);
  mlp baseline = init_mlp(baseline_dims(k, m), init_gen);
  return train_from(data, rules, cfg, std::move(policy), std::move(baseline));
}

// ---- Hyperparameter sweep -------------------------------------------------

struct sweep_cell {
  int config_index = 0; // position in the lr x alpha x eta x epsilon grid
  double learning_rate = 0.0;
  double switch_penalty = 0.0;
  double temperature = 0.0;
  double explore_eps = 0.0;
  std::uint64_t seed = 0;
};

struct sweep_run {
  sweep_cell cell;
  std::vector<epoch_stats> stats;
};

// Grid order: lr (outer), then switch penalty, temperature, exploration, with
// seeds base_seed .. base_seed + n_seeds - 1 innermost.
inline std::vector<sweep_cell> sweep_grid(const std::vector<double>& lrs,
                                          const std::vector<double>& alphas,
                                          const std::vector<double>& etas,
                                          const std::vector<double>& epsilons, int n_seeds,
                                          std::uint64_t base_seed) {
  if (lrs.empty() || alphas.empty() || etas.empty() || epsilons.empty() || n_seeds < 1)
    throw config_error("sweep grids must be non-empty and sweep_seeds >= 1");
  std::vector<sweep_cell> cells;
  int config_index = 0;
  for (double lr : lrs)
    for (double a : alphas)
      for (double t : etas)
        for (double e : epsilons) {
          for (int s = 0; s < n_seeds; ++s) {
            sweep_cell c;
            c.config_index = config_index;
            c.learning_rate = lr;
            c.switch_penalty = a;
            c.temperature = t;
            c.explore_eps = e;
            c.seed = base_seed + static_cast<std::uint64_t>(s);
            cells.push_back(c);
          }
          ++config_index;
        }
  return cells;
}

// Trains every cell independently; cells share nothing but the (read-only)
// dataset, so they may run on `jobs` threads without affecting results.
// Output order equals grid order regardless of scheduling.
inline std::vector<sweep_run> sweep(const dataset& data, const rule_set& rules,
                                    const train_config& base, const std::vector<sweep_cell>& cells,
                                    int jobs) {
  if (jobs < 1) throw config_error("jobs must be >= 1");
  std::vector<sweep_run> runs(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;

  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        train_config cfg = base;
        cfg.learning_rate = cells[i].learning_rate;
        cfg.switch_penalty = cells[i].switch_penalty;
        cfg.temperature = cells[i].temperature;
        cfg.explore_eps = cells[i].explore_eps;
        cfg.seed = cells[i].seed;
        runs[i].cell = cells[i];
        runs[i].stats = train(data, rules, cfg).stats;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(cells.size()); // drain remaining work
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size());
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return runs;
}

} // namespace rrll
