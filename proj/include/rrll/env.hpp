#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrll/dataset.hpp"
#include "rrll/errors.hpp"
#include "rrll/labels.hpp"
#include "rrll/text.hpp"

namespace rrll {

enum class reward_variant { full, simplified };

inline const char* variant_name(reward_variant v) {
  return v == reward_variant::full ? "full" : "simplified";
}

inline reward_variant variant_from_name(std::string_view name) {
  if (name == "full") return reward_variant::full;
  if (name == "simplified") return reward_variant::simplified;
  throw config_error("unknown reward variant: '" + std::string(name) + "'");
}

// Which corner of the (true, predicted, action, reachability) space a step
// landed in. The split is structural, so it applies to both reward variants.
enum class reward_category {
  maintain_correct,                  // kept a correct prediction
  reassign_correct,                  // fixed a wrong prediction
  keep_wrong,                        // kept a wrong prediction
  reassign_wrong_possible_pred_wrong,  // broke a wrong prediction, transition allowed
  reassign_wrong_possible_pred_right,  // broke a correct prediction, transition allowed
  reassign_wrong_impossible,         // broke a wrong prediction via a forbidden transition
  uncovered,                         // broke a correct prediction via a forbidden transition
};

inline constexpr int k_category_count = 7;

inline const char* category_name(reward_category c) {
  switch (c) {
    case reward_category::maintain_correct: return "maintain_correct";
    case reward_category::reassign_correct: return "reassign_correct";
    case reward_category::keep_wrong: return "keep_wrong";
    case reward_category::reassign_wrong_possible_pred_wrong: return "reassign_wrong_possible_pred_wrong";
    case reward_category::reassign_wrong_possible_pred_right: return "reassign_wrong_possible_pred_right";
    case reward_category::reassign_wrong_impossible: return "reassign_wrong_impossible";
    case reward_category::uncovered: return "uncovered";
  }
  throw domain_error("bad reward category");
}

inline reward_category category_from_name(std::string_view name) {
  for (int i = 0; i < k_category_count; ++i) {
    const auto c = static_cast<reward_category>(i);
    if (name == category_name(c)) return c;
  }
  throw data_error("unknown reward category: '" + std::string(name) + "'");
}

inline reward_category categorize(int true_label, int pred_label, int action, bool reachable) {
  if (action == true_label)
    return action == pred_label ? reward_category::maintain_correct
                                : reward_category::reassign_correct;
  if (action == pred_label) return reward_category::keep_wrong;
  if (reachable)
    return true_label == pred_label ? reward_category::reassign_wrong_possible_pred_right
                                    : reward_category::reassign_wrong_possible_pred_wrong;
  // Forbidden transition away from the prediction. The corner where the
  // prediction was even correct has no natural row of its own; it shares the
  // worst value and is tracked separately so it can be audited.
  return true_label == pred_label ? reward_category::uncovered
                                  : reward_category::reassign_wrong_impossible;
}

inline int category_reward_full(reward_category c) {
  switch (c) {
    case reward_category::maintain_correct: return 0;
    case reward_category::reassign_correct: return 1;
    case reward_category::keep_wrong: return -1;
    case reward_category::reassign_wrong_possible_pred_wrong: return -2;
    case reward_category::reassign_wrong_possible_pred_right: return -3;
    case reward_category::reassign_wrong_impossible: return -4;
    case reward_category::uncovered: return -4;
  }
  throw domain_error("bad reward category");
}

// Graded reward: +1 for a fix, 0 for keeping a correct label, then
// increasingly negative for keeping errors, breaking labels over allowed
// transitions, and worst of all forbidden transitions.
inline int reward_full(int true_label, int pred_label, int action, int prev_action,
                       const rule_set& rules) {
  return category_reward_full(
      categorize(true_label, pred_label, action, rules.is_reachable(prev_action, action)));
}

// Coarser variant: only correctness and rule legality matter.
inline int reward_simplified(int true_label, int pred_label, int action, int prev_action,
                             const rule_set& rules) {
  if (action == true_label) return action == pred_label ? 0 : 1;
  return rules.is_reachable(prev_action, action) ? -1 : -2;
}

struct reward_spec {
  reward_variant variant = reward_variant::full;
  rule_set rules;

  // Undiscounted returns throughout.
  static constexpr double discount = 1.0;

  int reward(int true_label, int pred_label, int action, int prev_action) const {
    return variant == reward_variant::full
               ? reward_full(true_label, pred_label, action, prev_action, rules)
               : reward_simplified(true_label, pred_label, action, prev_action, rules);
  }
};

// State layout: [predicted label one-hot | features | previous action one-hot],
// dimension 2K + M. Exactly one 1 per one-hot block.
inline int state_dim(int k, int m) { return 2 * k + m; }

inline void build_state(const instance& ins, int prev_action, int k, std::vector<double>& out) {
  const int m = static_cast<int>(ins.features.size());
  if (ins.pred_label < 0 || ins.pred_label >= k)
    throw domain_error("build_state: predicted label out of range");
  if (prev_action < 0 || prev_action >= k)
    throw domain_error("build_state: previous action out of range");
  out.assign(static_cast<std::size_t>(state_dim(k, m)), 0.0);
  out[static_cast<std::size_t>(ins.pred_label)] = 1.0;
  for (int d = 0; d < m; ++d) out[static_cast<std::size_t>(k + d)] = ins.features[static_cast<std::size_t>(d)];
  out[static_cast<std::size_t>(k + m + prev_action)] = 1.0;
}

inline std::vector<double> build_state(const instance& ins, int prev_action, int k) {
  std::vector<double> out;
  build_state(ins, prev_action, k, out);
  return out;
}

// Inverse views used by tests and diagnostics.
inline int pred_from_state(std::span<const double> state, int k) {
  for (int i = 0; i < k; ++i)
    if (state[static_cast<std::size_t>(i)] == 1.0) return i;
  throw domain_error("state has no predicted-label one-hot");
}

inline int prev_action_from_state(std::span<const double> state, int k) {
  const int m = static_cast<int>(state.size()) - 2 * k;
  for (int i = 0; i < k; ++i)
    if (state[static_cast<std::size_t>(k + m + i)] == 1.0) return i;
  throw domain_error("state has no previous-action one-hot");
}

inline std::vector<double> features_from_state(std::span<const double> state, int k) {
  const int m = static_cast<int>(state.size()) - 2 * k;
  return std::vector<double>(state.begin() + k, state.begin() + k + m);
}

// One executed step of an episode.
struct step_record {
  std::vector<double> state;
  int action = 0;
  int reward = 0;
  reward_category category = reward_category::maintain_correct;
};

// Action selector: sees the packed state plus the raw instance and step index
// (reference selectors such as "always the true label" need the latter).
using action_selector = std::function<int(std::span<const double> state, const instance& ins, int t)>;

// Runs one trajectory as an episode. The previous action starts as the
// predictor's first label; afterwards it is the executed action. Requires
// ground truth on every instance.
inline std::vector<step_record> run_episode(const trajectory& traj, const action_selector& select,
                                            const reward_spec& spec) {
  if (traj.instances.empty()) throw domain_error("run_episode: empty trajectory");
  const int k = spec.rules.alphabet().size();
  std::vector<step_record> records;
  records.reserve(traj.instances.size());
  int prev_action = traj.instances.front().pred_label;
  for (std::size_t t = 0; t < traj.instances.size(); ++t) {
    const instance& ins = traj.instances[t];
    if (!ins.has_truth())
      throw data_error("run_episode: trajectory " + traj.seq_id + " lacks true labels");
    step_record rec;
    build_state(ins, prev_action, k, rec.state);
    rec.action = select(rec.state, ins, static_cast<int>(t));
    if (rec.action < 0 || rec.action >= k)
      throw domain_error("run_episode: selector returned label " + std::to_string(rec.action) +
                         " outside alphabet of size " + std::to_string(k));
    rec.reward = spec.reward(ins.true_label, ins.pred_label, rec.action, prev_action);
    rec.category = categorize(ins.true_label, ins.pred_label, rec.action,
                              spec.rules.is_reachable(prev_action, rec.action));
    prev_action = rec.action;
    records.push_back(std::move(rec));
  }
  return records;
}

inline long long episode_return(std::span<const step_record> records) {
  long long total = 0;
  for (const auto& r : records) total += r.reward;
  return total;
}

// Trace file: tab-separated seq_id, t, action, reward, category; one header
// line. This is the hand-off format from episode execution to the metrics
// layer.
struct trace_row {
  std::string seq_id;
  int t = 0;
  int action = 0;
  int reward = 0;
  reward_category category = reward_category::maintain_correct;
};

inline std::string serialize_trace(std::span<const trace_row> rows) {
  std::string out = "seq_id\tt\taction\treward\tcategory\n";
  for (const auto& r : rows) {
    out += r.seq_id;
    out += '\t';
    out += std::to_string(r.t);
    out += '\t';
    out += std::to_string(r.action);
    out += '\t';
    out += std::to_string(r.reward);
    out += '\t';
    out += category_name(r.category);
    out += '\n';
  }
  return out;
}

inline std::vector<trace_row> parse_trace(std::string_view text, const std::string& origin) {
  std::vector<trace_row> rows;
  const auto lines = split(text, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) { // skip header
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != 5)
      throw data_error(origin + " line " + std::to_string(i + 1) + ": expected 5 columns");
    trace_row r;
    r.seq_id = cols[0];
    r.t = static_cast<int>(parse_int(cols[1], "trace t"));
    r.action = static_cast<int>(parse_int(cols[2], "trace action"));
    r.reward = static_cast<int>(parse_int(cols[3], "trace reward"));
    r.category = category_from_name(cols[4]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<trace_row> make_trace(const std::string& seq_id,
                                         std::span<const step_record> records) {
  std::vector<trace_row> rows;
  rows.reserve(records.size());
  for (std::size_t t = 0; t < records.size(); ++t)
    rows.push_back(trace_row{seq_id, static_cast<int>(t), records[t].action, records[t].reward,
                             records[t].category});
  return rows;
}

} // namespace rrll
