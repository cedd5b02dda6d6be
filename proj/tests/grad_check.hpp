#pragma once

// Central finite-difference verification for hand-derived gradients. The
// loss is evaluated as a black box; no library backward code is involved in
// producing the numeric estimate.

#include <cmath>
#include <functional>
#include <vector>

#include "rrll/mlp.hpp"

namespace gradcheck {

struct result {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
  return std::fabs(analytic - numeric) / denom;
}

// Perturbs every weight and bias of `net` in place by ±h, evaluating
// `loss(net)` twice per parameter, and compares the centered difference
// against `analytic`.
inline result check_all_params(rrll::mlp& net, const rrll::mlp_grads& analytic,
                               const std::function<double(const rrll::mlp&)>& loss,
                               double h = 1e-5) {
  result r;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
      const double saved = net.weights[l][i];
      net.weights[l][i] = saved + h;
      const double up = loss(net);
      net.weights[l][i] = saved - h;
      const double down = loss(net);
      net.weights[l][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      r.max_rel_err = std::max(r.max_rel_err, rel_err(analytic.weights[l][i], numeric));
      ++r.checked;
    }
    for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
      const double saved = net.biases[l][i];
      net.biases[l][i] = saved + h;
      const double up = loss(net);
      net.biases[l][i] = saved - h;
      const double down = loss(net);
      net.biases[l][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      r.max_rel_err = std::max(r.max_rel_err, rel_err(analytic.biases[l][i], numeric));
      ++r.checked;
    }
  }
  return r;
}

} // namespace gradcheck
