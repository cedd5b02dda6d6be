#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rrll/errors.hpp"
#include "rrll/rng.hpp"

namespace rrll {

// Fully connected net with ReLU hidden layers and a linear output layer.
// Weights are row-major (dims[l+1] x dims[l]); everything is binary64.
struct mlp {
  std::vector<int> dims; // [input, hidden..., output]
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int layer_count() const { return static_cast<int>(dims.size()) - 1; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }
};

// Gradient (or optimizer-moment) container shaped like an mlp's parameters.
struct mlp_grads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
  }
};

inline mlp_grads zeros_like(const mlp& net) {
  mlp_grads g;
  g.weights.reserve(net.weights.size());
  g.biases.reserve(net.biases.size());
  for (const auto& w : net.weights) g.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

// Uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)); biases start at zero.
// Draw order is fixed (layer by layer, row major), so a seed pins every bit.
inline mlp init_mlp(std::vector<int> dims, rng& gen) {
  if (dims.size() < 2) throw domain_error("init_mlp: need at least input and output dims");
  for (int d : dims)
    if (d < 1) throw domain_error("init_mlp: all layer widths must be >= 1");
  mlp net;
  net.dims = std::move(dims);
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const int fan_in = net.dims[l];
    const int fan_out = net.dims[l + 1];
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
    for (auto& v : w) v = (2.0 * gen.uniform01() - 1.0) * r;
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
  }
  return net;
}

// Per-layer activations saved by the forward pass; backward consumes them.
// Reusable across calls: buffers are resized once and overwritten.
struct mlp_cache {
  std::vector<std::vector<double>> inputs; // inputs[l]: what layer l consumed
  std::vector<double> output;              // linear output of the last layer
};

inline const std::vector<double>& forward(const mlp& net, std::span<const double> x,
                                          mlp_cache& cache) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw domain_error("forward: input size " + std::to_string(x.size()) + " != " +
                       std::to_string(net.input_dim()));
  const int layers = net.layer_count();
  cache.inputs.resize(static_cast<std::size_t>(layers));
  cache.inputs[0].assign(x.begin(), x.end());
  for (int l = 0; l < layers; ++l) {
    const int in_dim = net.dims[static_cast<std::size_t>(l)];
    const int out_dim = net.dims[static_cast<std::size_t>(l) + 1];
    const auto& in = cache.inputs[static_cast<std::size_t>(l)];
    std::vector<double>& out = (l + 1 < layers) ? cache.inputs[static_cast<std::size_t>(l) + 1]
                                                : cache.output;
    out.assign(static_cast<std::size_t>(out_dim), 0.0);
    const double* w = net.weights[static_cast<std::size_t>(l)].data();
    for (int row = 0; row < out_dim; ++row) {
      double acc = net.biases[static_cast<std::size_t>(l)][static_cast<std::size_t>(row)];
      const double* wrow = w + static_cast<std::size_t>(row) * static_cast<std::size_t>(in_dim);
      for (int col = 0; col < in_dim; ++col) acc += wrow[col] * in[static_cast<std::size_t>(col)];
      // Hidden layers rectify; the output layer stays linear.
      out[static_cast<std::size_t>(row)] = (l + 1 < layers && acc < 0.0) ? 0.0 : acc;
    }
  }
  return cache.output;
}

inline std::vector<double> forward(const mlp& net, std::span<const double> x) {
  mlp_cache cache;
  forward(net, x, cache);
  return cache.output;
}

// Accumulates d(loss)/d(parameters) into `acc` given d(loss)/d(output).
// Hidden activations in the cache are post-ReLU, which is all the ReLU
// derivative needs: the unit was active iff its output is positive.
inline void backward(const mlp& net, const mlp_cache& cache, std::span<const double> grad_output,
                     mlp_grads& acc) {
  const int layers = net.layer_count();
  if (static_cast<int>(grad_output.size()) != net.output_dim())
    throw domain_error("backward: gradient size mismatch");
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  std::vector<double> prev_delta;
  for (int l = layers - 1; l >= 0; --l) {
    const int in_dim = net.dims[static_cast<std::size_t>(l)];
    const int out_dim = net.dims[static_cast<std::size_t>(l) + 1];
    const auto& in = cache.inputs[static_cast<std::size_t>(l)];
    double* gw = acc.weights[static_cast<std::size_t>(l)].data();
    double* gb = acc.biases[static_cast<std::size_t>(l)].data();
    const double* w = net.weights[static_cast<std::size_t>(l)].data();
    if (l > 0) prev_delta.assign(static_cast<std::size_t>(in_dim), 0.0);
    for (int row = 0; row < out_dim; ++row) {
      const double d = delta[static_cast<std::size_t>(row)];
      gb[row] += d;
      double* gwrow = gw + static_cast<std::size_t>(row) * static_cast<std::size_t>(in_dim);
      const double* wrow = w + static_cast<std::size_t>(row) * static_cast<std::size_t>(in_dim);
      if (d != 0.0) {
        for (int col = 0; col < in_dim; ++col) {
          gwrow[col] += d * in[static_cast<std::size_t>(col)];
          if (l > 0) prev_delta[static_cast<std::size_t>(col)] += d * wrow[col];
        }
      }
    }
    if (l > 0) {
      // Gate by the ReLU mask of the layer below's output.
      for (int col = 0; col < in_dim; ++col)
        if (in[static_cast<std::size_t>(col)] <= 0.0) prev_delta[static_cast<std::size_t>(col)] = 0.0;
      delta.swap(prev_delta);
    }
  }
}

} // namespace rrll
