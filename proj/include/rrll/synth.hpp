#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "rrll/dataset.hpp"
#include "rrll/errors.hpp"
#include "rrll/labels.hpp"
#include "rrll/rng.hpp"

namespace rrll {

// Synthetic benchmark: a rule-respecting Markov chain over true labels, plus a
// simulated base predictor whose mistakes can be biased toward rule-violating
// transitions. Features are class prototypes plus isotropic Gaussian noise.
struct synth_config {
  rule_set rules;
  int feature_dim = 32;   // M
  int traj_len = 100;     // steps per trajectory
  int n_train = 200;
  int n_test = 50;
  double stay_prob = 0.85;
  double predictor_error = 0.2;
  double violation_bias = 0.8;
  double feature_noise = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    if (feature_dim < 1) throw config_error("feature_dim must be >= 1");
    if (traj_len < 1) throw config_error("traj_len must be >= 1");
    if (n_train < 1) throw config_error("n_train must be >= 1");
    if (n_test < 0) throw config_error("n_test must be >= 0");
    const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(stay_prob)) throw config_error("stay_prob must be in [0, 1]");
    if (!in01(predictor_error)) throw config_error("predictor_error must be in [0, 1]");
    if (!in01(violation_bias)) throw config_error("violation_bias must be in [0, 1]");
    if (feature_noise < 0.0) throw config_error("feature_noise must be >= 0");
  }
};

namespace detail {
// Sub-stream tags so generation stages never share a draw sequence.
inline constexpr std::uint64_t k_stream_prototypes = 1;
inline constexpr std::uint64_t k_stream_truth = 2;
inline constexpr std::uint64_t k_stream_predictor = 3;
} // namespace detail

// K unit vectors with all pairwise dot products below 0.5, resampled as a set
// until the bound holds. Deterministic per seed.
inline std::vector<std::vector<double>> prototype_vectors(int k, int m, std::uint64_t seed) {
  if (k < 2 || m < 1) throw domain_error("prototype_vectors: need k >= 2, m >= 1");
  rng gen(mix_seed(seed, detail::k_stream_prototypes));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::vector<double>> protos(static_cast<std::size_t>(k));
    for (auto& p : protos) {
      p.resize(static_cast<std::size_t>(m));
      double norm2 = 0.0;
      for (auto& v : p) {
        v = gen.normal();
        norm2 += v * v;
      }
      const double norm = std::sqrt(norm2);
      if (norm < 1e-12) { // essentially impossible; resample the set
        p.clear();
        break;
      }
      for (auto& v : p) v /= norm;
    }
    bool ok = true;
    for (int i = 0; ok && i < k; ++i) {
      if (protos[static_cast<std::size_t>(i)].empty()) ok = false;
      for (int j = i + 1; ok && j < k; ++j) {
        double dot = 0.0;
        for (int d = 0; d < m; ++d)
          dot += protos[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] *
                 protos[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)];
        if (dot >= 0.5) ok = false;
      }
    }
    if (ok) return protos;
  }
  throw config_error("prototype_vectors: cannot place " + std::to_string(k) +
                     " well-separated prototypes in " + std::to_string(m) + " dimensions");
}

// True-label trajectories: n_train + n_test Markov chains of traj_len steps.
// The initial label is uniform over the alphabet; afterwards the stage
// persists with probability stay_prob, otherwise a uniformly random reachable
// non-self successor is drawn. A label with no non-self successor persists
// (absorbing); if stay_prob is 0 at such a label the chain cannot continue
// and generation fails. Every realized transition satisfies the rules.
inline std::vector<trajectory> generate_truth(const synth_config& cfg) {
  cfg.validate();
  const int k = cfg.rules.alphabet().size();
  rng gen(mix_seed(cfg.seed, detail::k_stream_truth));

  std::vector<std::vector<int>> successors(static_cast<std::size_t>(k));
  for (int label = 0; label < k; ++label) {
    for (int next : cfg.rules.reachable(label))
      if (next != label) successors[static_cast<std::size_t>(label)].push_back(next);
  }

  const int total = cfg.n_train + cfg.n_test;
  std::vector<trajectory> out;
  out.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    trajectory traj;
    char id[16];
    std::snprintf(id, sizeof(id), "subj-%04d", i);
    traj.seq_id = id;
    traj.instances.resize(static_cast<std::size_t>(cfg.traj_len));
    int label = gen.uniform_int(k);
    for (int t = 0; t < cfg.traj_len; ++t) {
      traj.instances[static_cast<std::size_t>(t)].true_label = label;
      if (t + 1 == cfg.traj_len) break;
      const auto& next_options = successors[static_cast<std::size_t>(label)];
      if (next_options.empty()) {
        if (cfg.stay_prob == 0.0)
          throw data_error("generate_truth: label '" + cfg.rules.alphabet().name(label) +
                           "' has no non-self successor and stay_prob is 0");
        continue; // absorbing stage persists
      }
      if (gen.uniform01() >= cfg.stay_prob)
        label = next_options[static_cast<std::size_t>(gen.uniform_int(static_cast<int>(next_options.size())))];
    }
    out.push_back(std::move(traj));
  }
  return out;
}

// Fills in the base predictor's labels and the feature vectors.
//
// Labels: correct with probability 1 - predictor_error; on an error, with
// probability violation_bias the wrong label is drawn (when any exists) so
// that the *predicted* transition pred_{t-1} -> pred_t breaks the rules,
// otherwise uniformly among wrong labels. Features always come from the true
// class: prototype + feature_noise * N(0, I).
inline dataset simulate_predictor(const std::vector<trajectory>& truth, const synth_config& cfg) {
  cfg.validate();
  if (truth.empty()) throw data_error("simulate_predictor: no trajectories");
  const int k = cfg.rules.alphabet().size();
  const auto protos = prototype_vectors(k, cfg.feature_dim, cfg.seed);
  rng gen(mix_seed(cfg.seed, detail::k_stream_predictor));

  dataset out;
  out.alphabet = cfg.rules.alphabet().names();
  out.feature_dim = cfg.feature_dim;
  out.has_truth = true;
  out.trajectories = truth;

  std::vector<int> wrong, violating;
  for (auto& traj : out.trajectories) {
    int prev_pred = -1;
    for (auto& ins : traj.instances) {
      const int y = ins.true_label;
      if (y < 0 || y >= k)
        throw data_error("simulate_predictor: trajectory " + traj.seq_id +
                         " carries labels outside the rule alphabet");
      int pred = y;
      if (gen.uniform01() < cfg.predictor_error) {
        wrong.clear();
        violating.clear();
        for (int c = 0; c < k; ++c) {
          if (c == y) continue;
          wrong.push_back(c);
          if (prev_pred >= 0 && !cfg.rules.is_reachable(prev_pred, c)) violating.push_back(c);
        }
        const bool force_violation = gen.uniform01() < cfg.violation_bias && !violating.empty();
        const auto& pool = force_violation ? violating : wrong;
        pred = pool[static_cast<std::size_t>(gen.uniform_int(static_cast<int>(pool.size())))];
      }
      ins.pred_label = pred;
      prev_pred = pred;

      ins.features.resize(static_cast<std::size_t>(cfg.feature_dim));
      const auto& proto = protos[static_cast<std::size_t>(y)];
      for (int d = 0; d < cfg.feature_dim; ++d)
        ins.features[static_cast<std::size_t>(d)] = proto[static_cast<std::size_t>(d)] + cfg.feature_noise * gen.normal();
    }
  }
  return out;
}

// Full pipeline: truth + predictor simulation, split into train / test parts.
inline std::pair<dataset, dataset> generate_dataset(const synth_config& cfg) {
  const auto truth = generate_truth(cfg);
  dataset all = simulate_predictor(truth, cfg);
  dataset train = all, test = all;
  train.trajectories.assign(all.trajectories.begin(),
                            all.trajectories.begin() + cfg.n_train);
  test.trajectories.assign(all.trajectories.begin() + cfg.n_train, all.trajectories.end());
  return {std::move(train), std::move(test)};
}

} // namespace rrll
