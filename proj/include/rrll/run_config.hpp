#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rrll/env.hpp"
#include "rrll/errors.hpp"
#include "rrll/labels.hpp"
#include "rrll/synth.hpp"
#include "rrll/text.hpp"
#include "rrll/trainer.hpp"

namespace rrll {

// Environment variable consulted for the output root when neither --out nor
// the config file names one.
inline constexpr const char* k_out_root_env = "RRLL_OUT_ROOT";

// Flat key = value configuration. Precedence: command-line override, then
// config file, then built-in default. The resolved map always contains every
// known key, is echoed into the output directory, and its echo text is hashed
// into the reports.
class run_config {
public:
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"rules", "sleep"},        // builtin name or path to a rules file
        {"variant", "full"},       // reward variant: full | simplified
        {"feature_dim", "32"},     // synthetic data: M
        {"traj_len", "100"},       // synthetic data: steps per trajectory
        {"n_train", "200"},
        {"n_test", "50"},
        {"stay_prob", "0.85"},
        {"predictor_error", "0.2"},
        {"violation_bias", "0.8"},
        {"feature_noise", "0.1"},
        {"seed", "1"},
        {"lr", "0.0003"},
        {"alpha", "1"},            // switch-penalty weight
        {"eta", "1"},              // softmax temperature
        {"epsilon", "0.1"},        // exploration rate
        {"epochs", "50"},
        {"max_segment", "0"},      // 0 = off, else split trajectories to this length
        {"batch", "trajectory"},   // update granularity: trajectory | epoch
        {"lr_grid", "3e-05,0.0003,0.003"},
        {"alpha_grid", "10,1,0.1"},
        {"eta_grid", "10,1,0.1"},
        {"epsilon_grid", "0.5,0.1,0.01"},
        {"sweep_seeds", "10"},
        {"jobs", "1"},
        {"train_data", ""},
        {"test_data", ""},
        {"input_data", ""},
        {"checkpoint", ""},
        {"out", ""},
    };
    return d;
  }

  // Builds the resolved map. `sets` are KEY=VALUE strings from --set;
  // `flags` are the dedicated flags (--seed and friends), applied last.
  static run_config resolve(const std::string& config_path, const std::vector<std::string>& sets,
                            const std::map<std::string, std::string>& flags) {
    run_config cfg;
    cfg.values_ = defaults();
    if (!config_path.empty()) cfg.apply_file(config_path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw config_error("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(std::string(trim(kv.substr(0, eq))), std::string(trim(kv.substr(eq + 1))));
    }
    for (const auto& [key, value] : flags) cfg.set(key, value);
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw config_error("unknown config key: '" + key + "'");
    it->second = value;
  }

  const std::string& gets(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw config_error("unknown config key: '" + key + "'");
    return it->second;
  }

  double getd(const std::string& key) const { return parse_double(gets(key), key); }

  long long geti(const std::string& key) const { return parse_int(gets(key), key); }

  std::uint64_t getu(const std::string& key) const {
    const long long v = geti(key);
    if (v < 0) throw config_error(key + " must be >= 0");
    return static_cast<std::uint64_t>(v);
  }

  std::vector<double> get_grid(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(gets(key), ',')) {
      const auto v = trim(part);
      if (v.empty()) throw config_error(key + " has an empty entry");
      out.push_back(parse_double(v, key));
    }
    return out;
  }

  // A named path key that must be present for the current command.
  std::string require_path(const std::string& key) const {
    const std::string& v = gets(key);
    if (v.empty()) throw config_error("missing required config key '" + key + "'");
    return v;
  }

  // Output directory: --out / config, else $RRLL_OUT_ROOT/<command>, else
  // ./rrll-out/<command>.
  std::filesystem::path out_dir(const std::string& command) const {
    const std::string& v = gets("out");
    if (!v.empty()) return v;
    if (const char* root = std::getenv(k_out_root_env); root != nullptr && root[0] != '\0')
      return std::filesystem::path(root) / command;
    return std::filesystem::path("rrll-out") / command;
  }

  rule_set load_rules() const {
    const std::string& name = gets("rules");
    if (name == "sleep" || name == "seizure") return builtin_rules(name);
    return parse_rules(read_file(name));
  }

  reward_variant variant() const { return variant_from_name(gets("variant")); }

  synth_config to_synth() const {
    synth_config s{load_rules()};
    s.feature_dim = static_cast<int>(geti("feature_dim"));
    s.traj_len = static_cast<int>(geti("traj_len"));
    s.n_train = static_cast<int>(geti("n_train"));
    s.n_test = static_cast<int>(geti("n_test"));
    s.stay_prob = getd("stay_prob");
    s.predictor_error = getd("predictor_error");
    s.violation_bias = getd("violation_bias");
    s.feature_noise = getd("feature_noise");
    s.seed = getu("seed");
    s.validate();
    return s;
  }

  train_config to_train() const {
    train_config t;
    t.learning_rate = getd("lr");
    t.switch_penalty = getd("alpha");
    t.temperature = getd("eta");
    t.explore_eps = getd("epsilon");
    t.epochs = static_cast<int>(geti("epochs"));
    t.seed = getu("seed");
    t.variant = variant();
    t.max_segment_len = static_cast<int>(geti("max_segment"));
    const std::string& mode = gets("batch");
    if (mode == "trajectory") t.batching = train_config::batch_mode::per_trajectory;
    else if (mode == "epoch") t.batching = train_config::batch_mode::per_epoch;
    else throw config_error("batch must be 'trajectory' or 'epoch', got '" + mode + "'");
    t.validate();
    return t;
  }

  // Sorted key = value lines; written next to every command's outputs.
  std::string echo_text() const {
    std::string out;
    for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
    return out;
  }

  std::string config_hash() const { return hex64(fnv1a64(echo_text())); }

private:
  void apply_file(const std::string& path) {
    const std::string text = read_file(path);
    int line_no = 0;
    for (const auto& raw : split(text, '\n')) {
      ++line_no;
      std::string_view line{raw};
      if (const auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw config_error(path + " line " + std::to_string(line_no) +
                           ": expected 'key = value'");
      const std::string key{trim(line.substr(0, eq))};
      const std::string value{trim(line.substr(eq + 1))};
      try {
        set(key, value);
      } catch (const config_error& e) {
        throw config_error(path + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  std::map<std::string, std::string> values_;
};

} // namespace rrll
