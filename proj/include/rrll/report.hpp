#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "rrll/env.hpp"
#include "rrll/labels.hpp"
#include "rrll/metrics.hpp"
#include "rrll/text.hpp"
#include "rrll/version.hpp"

namespace rrll {

// Stamped on top of every report file. Identical inputs produce identical
// bytes, so reports can be diffed across reruns.
struct report_meta {
  std::string config_hash;
  std::uint64_t seed = 0;
};

inline std::string metadata_block(const report_meta& meta) {
  std::string out;
  out += std::string("# ") + k_project_name + " " + k_version + "\n";
  out += "# config_hash " + meta.config_hash + "\n";
  out += "# seed " + std::to_string(meta.seed) + "\n";
  return out;
}

// Everything the evaluation reports need, for the base predictor's labels and
// the corrected labels side by side.
struct eval_summary {
  classification_report predictor;
  classification_report corrected;
  double nmi_predictor = 0.0, nmi_corrected = 0.0;
  double ari_predictor = 0.0, ari_corrected = 0.0;
  violation_stats viol_predictor, viol_corrected;
  category_counts categories; // of the corrected labels' episode steps
  reward_variant variant = reward_variant::full;
  long long n_instances = 0;
  long long n_trajectories = 0;
  double mean_return = 0.0; // corrected episodes, per trajectory
};

// Per-class table: one row per (labels source, class).
inline std::string serialize_class_report(const report_meta& meta, const label_alphabet& alphabet,
                                          const eval_summary& s) {
  std::string out = metadata_block(meta);
  out += "source\tclass\tprecision\trecall\tf1\tsupport\n";
  const auto emit = [&](const char* source, const classification_report& rep) {
    for (int c = 0; c < alphabet.size(); ++c) {
      const auto& m = rep.per_class[static_cast<std::size_t>(c)];
      out += source;
      out += '\t';
      out += alphabet.name(c);
      out += '\t';
      out += fmt_double(m.precision);
      out += '\t';
      out += fmt_double(m.recall);
      out += '\t';
      out += fmt_double(m.f1);
      out += '\t';
      out += std::to_string(m.support);
      out += '\n';
    }
  };
  emit("predictor", s.predictor);
  emit("corrected", s.corrected);
  return out;
}

inline std::string serialize_category_report(const report_meta& meta, const eval_summary& s) {
  std::string out = metadata_block(meta);
  out += "category\tcount\tfraction\n";
  const double total = static_cast<double>(s.categories.total());
  for (int i = 0; i < k_category_count; ++i) {
    const auto c = static_cast<reward_category>(i);
    out += category_name(c);
    out += '\t';
    out += std::to_string(s.categories.of(c));
    out += '\t';
    out += fmt_double(total > 0.0 ? static_cast<double>(s.categories.of(c)) / total : 0.0);
    out += '\n';
  }
  return out;
}

inline std::string serialize_summary_report(const report_meta& meta, const eval_summary& s) {
  std::string out = metadata_block(meta);
  out += "key\tvalue\n";
  const auto kv = [&](const char* key, const std::string& value) {
    out += key;
    out += '\t';
    out += value;
    out += '\n';
  };
  kv("reward_variant", variant_name(s.variant));
  kv("n_trajectories", std::to_string(s.n_trajectories));
  kv("n_instances", std::to_string(s.n_instances));
  kv("accuracy_predictor", fmt_double(s.predictor.accuracy));
  kv("accuracy_corrected", fmt_double(s.corrected.accuracy));
  kv("kappa_predictor", fmt_double(s.predictor.kappa));
  kv("kappa_corrected", fmt_double(s.corrected.kappa));
  kv("nmi_predictor", fmt_double(s.nmi_predictor));
  kv("nmi_corrected", fmt_double(s.nmi_corrected));
  kv("ari_predictor", fmt_double(s.ari_predictor));
  kv("ari_corrected", fmt_double(s.ari_corrected));
  kv("violation_pairs", std::to_string(s.viol_predictor.pairs));
  kv("violations_predictor", std::to_string(s.viol_predictor.violations));
  kv("violations_corrected", std::to_string(s.viol_corrected.violations));
  kv("violation_rate_predictor", fmt_double(s.viol_predictor.rate));
  kv("violation_rate_corrected", fmt_double(s.viol_corrected.rate));
  kv("mean_return_corrected", fmt_double(s.mean_return));
  return out;
}

// Plain-text companion for humans; the .tsv files are the machine interface.
inline std::string serialize_text_summary(const report_meta& meta, const label_alphabet& alphabet,
                                          const eval_summary& s) {
  std::string out;
  out += std::string(k_project_name) + " " + k_version + " evaluation (config " +
         meta.config_hash + ", seed " + std::to_string(meta.seed) + ")\n\n";
  out += "trajectories: " + std::to_string(s.n_trajectories) +
         ", instances: " + std::to_string(s.n_instances) + ", reward variant: " +
         variant_name(s.variant) + "\n\n";
  out += "                      predictor    corrected\n";
  const auto line = [&](const char* name, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-20s %10.4f %12.4f\n", name, a, b);
    out += buf;
  };
  line("accuracy", s.predictor.accuracy, s.corrected.accuracy);
  line("kappa", s.predictor.kappa, s.corrected.kappa);
  line("nmi", s.nmi_predictor, s.nmi_corrected);
  line("ari", s.ari_predictor, s.ari_corrected);
  line("violation_rate", s.viol_predictor.rate, s.viol_corrected.rate);
  out += "\nmean corrected return per trajectory: " + fmt_double(s.mean_return) + "\n";
  out += "\nper-class F1 (corrected):\n";
  for (int c = 0; c < alphabet.size(); ++c) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-10s %8.4f\n", alphabet.name(c).c_str(),
                  s.corrected.per_class[static_cast<std::size_t>(c)].f1);
    out += buf;
  }
  return out;
}

} // namespace rrll
