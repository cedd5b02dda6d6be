#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "rrll/errors.hpp"
#include "rrll/mlp.hpp"
#include "rrll/rng.hpp"

namespace rrll {

// pi(i) = exp(q_i / eta) / sum_j exp(q_j / eta), computed with the max
// subtracted so large logits cannot overflow. Higher eta flattens the
// distribution; the argmax never moves.
inline void softmax_temperature(std::span<const double> logits, double eta,
                                std::vector<double>& out) {
  if (eta <= 0.0) throw domain_error("softmax temperature must be positive");
  if (logits.empty()) throw domain_error("softmax of empty logits");
  double mx = logits[0];
  for (double q : logits) mx = std::max(mx, q);
  out.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / eta);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
}

inline std::vector<double> softmax_temperature(std::span<const double> logits, double eta) {
  std::vector<double> out;
  softmax_temperature(logits, eta, out);
  return out;
}

// log pi(action) straight from the logits (log-sum-exp form, no trip through
// the probabilities).
inline double log_prob_from_logits(std::span<const double> logits, int action, double eta) {
  if (eta <= 0.0) throw domain_error("softmax temperature must be positive");
  double mx = logits[0];
  for (double q : logits) mx = std::max(mx, q);
  double sum = 0.0;
  for (double q : logits) sum += std::exp((q - mx) / eta);
  return (logits[static_cast<std::size_t>(action)] - mx) / eta - std::log(sum);
}

// d log pi(action) / d q_i = (1{i == action} - pi(i)) / eta.
inline std::vector<double> log_prob_logit_grad(std::span<const double> probs, int action,
                                               double eta) {
  std::vector<double> g(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    g[i] = ((static_cast<int>(i) == action ? 1.0 : 0.0) - probs[i]) / eta;
  return g;
}

// Policy head: run the net, then soften the logits. The cache keeps what the
// per-step backward pass needs.
inline std::vector<double> policy_forward(const mlp& net, std::span<const double> state,
                                          double eta, mlp_cache& cache) {
  for (double v : state)
    if (!std::isfinite(v)) throw domain_error("policy_forward: non-finite state entry");
  const auto& logits = forward(net, state, cache);
  return softmax_temperature(logits, eta);
}

// Behaviour policy: with probability epsilon a uniformly random label,
// otherwise a draw from pi. One branch draw, then one sample draw.
inline int sample_action(std::span<const double> probs, double epsilon, rng& gen) {
  if (epsilon < 0.0 || epsilon > 1.0) throw domain_error("epsilon must be in [0, 1]");
  if (gen.uniform01() < epsilon) return gen.uniform_int(static_cast<int>(probs.size()));
  return gen.categorical(probs);
}

// Evaluation-mode action: most probable label, lowest index on ties.
inline int argmax_action(std::span<const double> probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

// Accumulates d(coeff * log pi(action | state)) / d(policy parameters).
// Upstream logit gradient is coeff * (1{i==action} - pi(i)) / eta; the rest is
// the chain rule through the net.
inline void policy_backward_step(const mlp& net, const mlp_cache& cache,
                                 std::span<const double> probs, int action, double coeff,
                                 double eta, mlp_grads& acc) {
  std::vector<double> glogits(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    glogits[i] = coeff * (((static_cast<int>(i) == action) ? 1.0 : 0.0) - probs[i]) / eta;
  backward(net, cache, glogits, acc);
}

// Scalar value head used for the learned baseline.
inline double baseline_forward(const mlp& net, std::span<const double> state, mlp_cache& cache) {
  if (net.output_dim() != 1) throw domain_error("baseline net must have a scalar output");
  return forward(net, state, cache)[0];
}

// Accumulates d((value - target)^2) / d(baseline parameters).
inline void baseline_backward_step(const mlp& net, const mlp_cache& cache, double value,
                                   double target, mlp_grads& acc) {
  const double g[1] = {2.0 * (value - target)};
  backward(net, cache, std::span<const double>(g, 1), acc);
}

} // namespace rrll
