#pragma once

// Brute-force clustering-agreement oracles: ARI by O(n^2) pair counting and
// NMI from directly tabulated entropies. Independent of the library's
// contingency-table implementations.

#include <cmath>
#include <map>
#include <span>
#include <utility>

namespace oracle {

// Classifies every unordered element pair by whether the two labelings agree
// on "same cluster": a = same/same, b = same/diff, c = diff/same, d = diff/diff.
inline double pair_counting_ari(std::span<const int> x, std::span<const int> y) {
  double a = 0, b = 0, c = 0, d = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_x = x[i] == x[j];
      const bool same_y = y[i] == y[j];
      if (same_x && same_y) ++a;
      else if (same_x) ++b;
      else if (same_y) ++c;
      else ++d;
    }
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom == 0.0) return 0.0;
  return 2.0 * (a * d - b * c) / denom;
}

inline double direct_nmi(std::span<const int> x, std::span<const int> y) {
  const double n = static_cast<double>(x.size());
  std::map<int, double> px, py;
  std::map<std::pair<int, int>, double> pxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1.0;
    py[y[i]] += 1.0;
    pxy[{x[i], y[i]}] += 1.0;
  }
  double hx = 0.0, hy = 0.0, mi = 0.0;
  for (const auto& [k, cnt] : px) {
    const double p = cnt / n;
    hx -= p * std::log(p);
  }
  for (const auto& [k, cnt] : py) {
    const double p = cnt / n;
    hy -= p * std::log(p);
  }
  for (const auto& [k, cnt] : pxy) {
    const double p = cnt / n;
    const double marg = (px[k.first] / n) * (py[k.second] / n);
    mi += p * std::log(p / marg);
  }
  if (hx <= 0.0 || hy <= 0.0) return 0.0; // degenerate single-cluster labelings
  return mi / std::sqrt(hx * hy);
}

} // namespace oracle
