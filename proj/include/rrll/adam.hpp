#pragma once

#include <cmath>
#include <vector>

#include "rrll/errors.hpp"
#include "rrll/mlp.hpp"

namespace rrll {

// Adam with bias correction. Defaults are the tuned training values, not the
// textbook ones: beta2 is 0.99.
struct adam_state {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  long long step = 0;
  mlp_grads m; // first moment
  mlp_grads v; // second moment
};

inline adam_state make_adam(const mlp& net, double beta1 = 0.9, double beta2 = 0.99,
                            double eps = 1e-8) {
  adam_state s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.m = zeros_like(net);
  s.v = zeros_like(net);
  return s;
}

namespace detail {
inline void adam_apply(std::vector<double>& p, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v, const adam_state& s,
                       double lr, double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

inline void check_finite(const std::vector<double>& g) {
  for (double gi : g)
    if (!std::isfinite(gi)) throw numeric_error("non-finite gradient in optimizer step");
}
} // namespace detail

// One update of every parameter in `net`. A non-finite gradient anywhere
// aborts before any parameter or moment is touched.
inline void adam_step(mlp& net, const mlp_grads& grads, adam_state& state, double lr) {
  if (grads.weights.size() != net.weights.size())
    throw domain_error("adam_step: gradient shape mismatch");
  if (!std::isfinite(lr)) throw numeric_error("non-finite learning rate");
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    detail::check_finite(grads.weights[l]);
    detail::check_finite(grads.biases[l]);
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    detail::adam_apply(net.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l],
                       state, lr, bc1, bc2);
    detail::adam_apply(net.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l],
                       state, lr, bc1, bc2);
  }
}

// Exponential decay, 1% per epoch.
inline double scheduled_lr(double initial, int epoch) {
  return initial * std::pow(0.99, static_cast<double>(epoch));
}

} // namespace rrll
