#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rrll/errors.hpp"
#include "rrll/text.hpp"

namespace rrll {

// Ordered set of class names. Index order is the label encoding everywhere:
// one-hot positions, dataset integers, network outputs.
class label_alphabet {
public:
  explicit label_alphabet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() < 2) throw domain_error("label alphabet needs at least 2 labels");
    for (const auto& n : names_) {
      if (n.empty()) throw domain_error("label names must be non-empty");
    }
    std::set<std::string> uniq(names_.begin(), names_.end());
    if (uniq.size() != names_.size()) throw domain_error("label names must be unique");
  }

  int size() const { return static_cast<int>(names_.size()); }

  const std::string& name(int i) const {
    check_index(i);
    return names_[static_cast<std::size_t>(i)];
  }

  // -1 when the name is unknown.
  int index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<int>(i);
    return -1;
  }

  const std::vector<std::string>& names() const { return names_; }

  void check_index(int i) const {
    if (i < 0 || i >= size())
      throw domain_error("label index " + std::to_string(i) + " out of range [0, " +
                         std::to_string(size()) + ")");
  }

  friend bool operator==(const label_alphabet& a, const label_alphabet& b) {
    return a.names_ == b.names_;
  }

private:
  std::vector<std::string> names_;
};

// Transition constraints over an alphabet, stored as the set of one-step
// impossible ordered pairs. Everything not listed is reachable; self
// transitions are always reachable (constructor rejects self pairs).
// Immutable after construction, cheap to copy/share.
class rule_set {
public:
  rule_set(label_alphabet alphabet, const std::vector<std::pair<int, int>>& impossible_pairs)
      : alphabet_(std::move(alphabet)),
        blocked_(static_cast<std::size_t>(alphabet_.size()) * static_cast<std::size_t>(alphabet_.size()), 0) {
    for (const auto& [from, to] : impossible_pairs) {
      alphabet_.check_index(from);
      alphabet_.check_index(to);
      if (from == to)
        throw domain_error("self transition " + alphabet_.name(from) + " -> " + alphabet_.name(to) +
                           " cannot be impossible");
      blocked_[flat(from, to)] = 1; // duplicates collapse
    }
  }

  const label_alphabet& alphabet() const { return alphabet_; }

  bool is_reachable(int from, int to) const {
    alphabet_.check_index(from);
    alphabet_.check_index(to);
    return blocked_[flat(from, to)] == 0;
  }

  std::vector<int> reachable(int from) const {
    alphabet_.check_index(from);
    std::vector<int> out;
    for (int to = 0; to < alphabet_.size(); ++to)
      if (blocked_[flat(from, to)] == 0) out.push_back(to);
    return out;
  }

  std::size_t impossible_count() const {
    std::size_t n = 0;
    for (char b : blocked_) n += static_cast<std::size_t>(b);
    return n;
  }

  std::size_t reachable_count() const {
    const std::size_t k = static_cast<std::size_t>(alphabet_.size());
    return k * k - impossible_count();
  }

  // Sorted by (from, to) index.
  std::vector<std::pair<int, int>> impossible_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int from = 0; from < alphabet_.size(); ++from)
      for (int to = 0; to < alphabet_.size(); ++to)
        if (blocked_[flat(from, to)]) out.emplace_back(from, to);
    return out;
  }

  friend bool operator==(const rule_set& a, const rule_set& b) {
    return a.alphabet_ == b.alphabet_ && a.blocked_ == b.blocked_;
  }

private:
  std::size_t flat(int from, int to) const {
    return static_cast<std::size_t>(from) * static_cast<std::size_t>(alphabet_.size()) +
           static_cast<std::size_t>(to);
  }

  label_alphabet alphabet_;
  std::vector<char> blocked_;
};

enum class builtin_rule_set { sleep, seizure };

// Clinical one-step impossibilities between sleep stages: no jump from wake or
// drowsiness straight into deep/REM sleep, no direct deep-to-light or
// REM-to-light reversals, and N2 never wakes directly.
inline rule_set builtin_rules(builtin_rule_set which) {
  switch (which) {
    case builtin_rule_set::sleep: {
      label_alphabet alph({"Wake", "N1", "N2", "N3", "REM"});
      return rule_set(alph, {
                                {0, 3}, // Wake -> N3
                                {0, 4}, // Wake -> REM
                                {1, 3}, // N1 -> N3
                                {1, 4}, // N1 -> REM
                                {2, 0}, // N2 -> Wake
                                {3, 1}, // N3 -> N1
                                {4, 1}, // REM -> N1
                                {4, 3}, // REM -> N3
                            });
    }
    case builtin_rule_set::seizure: {
      // Ictal is absorbing; seizures do not skip the preictal stage and never
      // step back to an earlier stage.
      label_alphabet alph({"Normal", "Preictal", "Ictal"});
      return rule_set(alph, {
                                {0, 2}, // Normal -> Ictal
                                {1, 0}, // Preictal -> Normal
                                {2, 0}, // Ictal -> Normal
                                {2, 1}, // Ictal -> Preictal
                            });
    }
  }
  throw domain_error("unknown builtin rule set");
}

inline rule_set builtin_rules(std::string_view name) {
  if (name == "sleep") return builtin_rules(builtin_rule_set::sleep);
  if (name == "seizure") return builtin_rules(builtin_rule_set::seizure);
  throw domain_error("unknown builtin rule set: '" + std::string(name) + "'");
}

// Text form:
//   labels: Wake, N1, N2, N3, REM
//   Wake !> N3, REM
//   N2 !> Wake
// '#' starts a comment (full-line or trailing); blank lines are ignored.
// The first significant line must be the labels header. A source may appear
// on several lines; duplicate targets collapse.
inline rule_set parse_rules(std::string_view text) {
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> pairs;
  bool have_labels = false;
  const label_alphabet* alph = nullptr;
  std::vector<std::string> raw_lines = split(text, '\n');

  // Single pass: the labels line must come first, so the alphabet exists by
  // the time any rule line shows up.
  std::optional<label_alphabet> parsed_alph;
  int line_no = 0;
  for (const auto& raw : raw_lines) {
    ++line_no;
    std::string_view line{raw};
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto err = [&](const std::string& msg) -> data_error {
      return data_error("rules line " + std::to_string(line_no) + ": " + msg);
    };

    if (!have_labels) {
      constexpr std::string_view prefix = "labels:";
      if (line.substr(0, prefix.size()) != prefix)
        throw err("expected 'labels:' header before any rule");
      for (const auto& part : split(line.substr(prefix.size()), ',')) {
        const auto name = trim(part);
        if (name.empty()) throw err("empty label name");
        names.emplace_back(name);
      }
      try {
        parsed_alph.emplace(names);
      } catch (const domain_error& e) {
        throw err(e.what());
      }
      alph = &*parsed_alph;
      have_labels = true;
      continue;
    }

    const auto arrow = line.find("!>");
    if (arrow == std::string_view::npos) throw err("expected 'FROM !> TO, ...' rule");
    const auto from_name = trim(line.substr(0, arrow));
    const int from = alph->index_of(from_name);
    if (from < 0) throw err("unknown label '" + std::string(from_name) + "'");
    bool any = false;
    for (const auto& part : split(line.substr(arrow + 2), ',')) {
      const auto to_name = trim(part);
      if (to_name.empty()) throw err("empty target label");
      const int to = alph->index_of(to_name);
      if (to < 0) throw err("unknown label '" + std::string(to_name) + "'");
      if (to == from) throw err("self transition '" + std::string(from_name) + "' cannot be impossible");
      pairs.emplace_back(from, to);
      any = true;
    }
    if (!any) throw err("rule lists no target labels");
  }
  if (!have_labels) throw data_error("rules text has no 'labels:' header");
  return rule_set(*parsed_alph, pairs);
}

// Canonical text form: header plus one line per source with impossible
// targets, both sorted by label index. parse(serialize(r)) == r and the text
// is a serialization fixpoint.
inline std::string serialize_rules(const rule_set& rules) {
  const auto& alph = rules.alphabet();
  std::string out = "labels: ";
  for (int i = 0; i < alph.size(); ++i) {
    if (i) out += ", ";
    out += alph.name(i);
  }
  out += '\n';
  for (int from = 0; from < alph.size(); ++from) {
    std::vector<int> blocked;
    for (int to = 0; to < alph.size(); ++to)
      if (!rules.is_reachable(from, to)) blocked.push_back(to);
    if (blocked.empty()) continue;
    out += alph.name(from) + " !> ";
    for (std::size_t i = 0; i < blocked.size(); ++i) {
      if (i) out += ", ";
      out += alph.name(blocked[i]);
    }
    out += '\n';
  }
  return out;
}

} // namespace rrll
