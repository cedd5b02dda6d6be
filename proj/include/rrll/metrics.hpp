#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rrll/env.hpp"
#include "rrll/errors.hpp"
#include "rrll/labels.hpp"
#include "rrll/text.hpp"

namespace rrll {

struct confusion_matrix {
  int k = 0;
  std::vector<long long> counts; // row = true label, column = assigned label

  long long at(int true_label, int assigned) const {
    return counts[static_cast<std::size_t>(true_label) * static_cast<std::size_t>(k) +
                  static_cast<std::size_t>(assigned)];
  }

  long long total() const {
    long long n = 0;
    for (long long c : counts) n += c;
    return n;
  }
};

inline confusion_matrix make_confusion(std::span<const int> truth, std::span<const int> assigned,
                                       int k) {
  if (truth.size() != assigned.size())
    throw domain_error("confusion matrix: label sequences differ in length");
  confusion_matrix cm;
  cm.k = k;
  cm.counts.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || assigned[i] < 0 || assigned[i] >= k)
      throw domain_error("confusion matrix: label outside [0, k)");
    ++cm.counts[static_cast<std::size_t>(truth[i]) * static_cast<std::size_t>(k) +
                static_cast<std::size_t>(assigned[i])];
  }
  return cm;
}

struct class_metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

struct classification_report {
  std::vector<class_metrics> per_class;
  double accuracy = 0.0;
  double kappa = 0.0;
};

// Chance-corrected agreement with marginal-product expected agreement. The
// degenerate all-one-cell case is pinned: 1 when observed agreement is
// perfect, else 0.
inline double cohen_kappa(const confusion_matrix& cm) {
  const double n = static_cast<double>(cm.total());
  if (n == 0.0) return 0.0;
  double po = 0.0, pe = 0.0;
  for (int c = 0; c < cm.k; ++c) {
    po += static_cast<double>(cm.at(c, c));
    double row = 0.0, col = 0.0;
    for (int j = 0; j < cm.k; ++j) {
      row += static_cast<double>(cm.at(c, j));
      col += static_cast<double>(cm.at(j, c));
    }
    pe += (row / n) * (col / n);
  }
  po /= n;
  if (std::abs(1.0 - pe) < 1e-15) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

// Per-class precision/recall/F1 plus accuracy and kappa. Classes absent from
// both sequences report zeros by convention (never a division by zero).
inline classification_report classify_report(std::span<const int> truth,
                                             std::span<const int> assigned, int k) {
  const confusion_matrix cm = make_confusion(truth, assigned, k);
  classification_report rep;
  rep.per_class.resize(static_cast<std::size_t>(k));
  long long diag = 0;
  for (int c = 0; c < k; ++c) {
    long long tp = cm.at(c, c), fp = 0, fn = 0;
    for (int j = 0; j < k; ++j) {
      if (j == c) continue;
      fp += cm.at(j, c);
      fn += cm.at(c, j);
    }
    diag += tp;
    class_metrics& m = rep.per_class[static_cast<std::size_t>(c)];
    m.support = tp + fn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                          : 0.0;
  }
  const long long n = cm.total();
  rep.accuracy = n > 0 ? static_cast<double>(diag) / static_cast<double>(n) : 0.0;
  rep.kappa = cohen_kappa(cm);
  return rep;
}

namespace detail {

// Canonical partition form: labels renamed to first-appearance order. Two
// labelings describe the same partition iff their canonical forms match, which
// is what makes the cluster scores permutation invariant in the degenerate
// branches.
inline std::vector<int> canonical_partition(std::span<const int> labels) {
  std::vector<int> out(labels.size());
  std::map<int, int> remap;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

inline std::map<int, long long> label_counts(std::span<const int> labels) {
  std::map<int, long long> counts;
  for (int l : labels) ++counts[l];
  return counts;
}

inline double entropy(const std::map<int, long long>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / n;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

} // namespace detail

// Normalized mutual information I(T;A) / sqrt(H(T) H(A)), natural logs.
// Identical partitions score exactly 1; if either side is a single cluster
// (zero entropy) and the partitions differ, the score is 0 by convention.
inline double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw domain_error("nmi: label sequences differ in length");
  if (a.empty()) throw domain_error("nmi: empty labelings");
  if (detail::canonical_partition(a) == detail::canonical_partition(b)) return 1.0;
  const double n = static_cast<double>(a.size());
  const auto ca = detail::label_counts(a);
  const auto cb = detail::label_counts(b);
  const double ha = detail::entropy(ca, n);
  const double hb = detail::entropy(cb, n);
  if (ha == 0.0 || hb == 0.0) return 0.0;
  std::map<std::pair<int, int>, long long> joint;
  for (std::size_t i = 0; i < a.size(); ++i) ++joint[{a[i], b[i]}];
  double mi = 0.0;
  for (const auto& [pair, c] : joint) {
    const double pij = static_cast<double>(c) / n;
    const double pi = static_cast<double>(ca.at(pair.first)) / n;
    const double pj = static_cast<double>(cb.at(pair.second)) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  return mi / std::sqrt(ha * hb);
}

// Adjusted Rand index via the contingency table. Identical partitions score
// exactly 1; a zero adjustment denominator (only possible when both sides are
// degenerate) scores 0 for differing partitions by convention.
inline double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw domain_error("ari: label sequences differ in length");
  if (a.empty()) throw domain_error("ari: empty labelings");
  if (detail::canonical_partition(a) == detail::canonical_partition(b)) return 1.0;
  const auto comb2 = [](long long x) {
    return static_cast<double>(x) * static_cast<double>(x - 1) / 2.0;
  };
  std::map<std::pair<int, int>, long long> joint;
  for (std::size_t i = 0; i < a.size(); ++i) ++joint[{a[i], b[i]}];
  double sum_ij = 0.0;
  for (const auto& [pair, c] : joint) sum_ij += comb2(c);
  double sum_a = 0.0, sum_b = 0.0;
  for (const auto& [label, c] : detail::label_counts(a)) sum_a += comb2(c);
  for (const auto& [label, c] : detail::label_counts(b)) sum_b += comb2(c);
  const double pairs = comb2(static_cast<long long>(a.size()));
  const double expected = pairs > 0.0 ? sum_a * sum_b / pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 0.0;
  return (sum_ij - expected) / denom;
}

// Fraction of rule-breaking consecutive pairs across label sequences. Pairs
// never span sequence boundaries; with no pairs at all the rate is 0.
struct violation_stats {
  long long pairs = 0;
  long long violations = 0;
  double rate = 0.0;
};

inline violation_stats violation_rate(const std::vector<std::vector<int>>& sequences,
                                      const rule_set& rules) {
  violation_stats out;
  for (const auto& seq : sequences) {
    for (std::size_t t = 1; t < seq.size(); ++t) {
      ++out.pairs;
      if (!rules.is_reachable(seq[t - 1], seq[t])) ++out.violations;
    }
  }
  out.rate = out.pairs > 0 ? static_cast<double>(out.violations) / static_cast<double>(out.pairs)
                           : 0.0;
  return out;
}

// Step counts per reward category. Verifies that every stored reward matches
// its category under the given variant; a mismatch means the trace is
// corrupt and is reported as an internal error. For the graded variant the
// counts reconstruct the total return exactly.
struct category_counts {
  std::array<long long, k_category_count> counts{};

  long long total() const {
    long long n = 0;
    for (long long c : counts) n += c;
    return n;
  }

  long long of(reward_category c) const { return counts[static_cast<std::size_t>(c)]; }
};

inline category_counts reward_category_counts(std::span<const trace_row> rows,
                                              reward_variant variant) {
  category_counts out;
  for (const auto& r : rows) {
    bool ok = true;
    if (variant == reward_variant::full) {
      ok = r.reward == category_reward_full(r.category);
    } else {
      switch (r.category) {
        case reward_category::maintain_correct: ok = r.reward == 0; break;
        case reward_category::reassign_correct: ok = r.reward == 1; break;
        // keep_wrong spans both legality corners in the simplified scheme.
        case reward_category::keep_wrong: ok = r.reward == -1 || r.reward == -2; break;
        case reward_category::reassign_wrong_possible_pred_wrong:
        case reward_category::reassign_wrong_possible_pred_right: ok = r.reward == -1; break;
        case reward_category::reassign_wrong_impossible:
        case reward_category::uncovered: ok = r.reward == -2; break;
      }
    }
    if (!ok)
      throw error("trace corrupt: step (" + r.seq_id + ", t=" + std::to_string(r.t) +
                  ") has reward " + std::to_string(r.reward) + " under category " +
                  category_name(r.category));
    ++out.counts[static_cast<std::size_t>(r.category)];
  }
  return out;
}

inline category_counts reward_category_counts(std::span<const step_record> records,
                                              reward_variant variant,
                                              const std::string& seq_id = "episode") {
  const auto rows = make_trace(seq_id, records);
  return reward_category_counts(std::span<const trace_row>(rows.data(), rows.size()), variant);
}

} // namespace rrll
