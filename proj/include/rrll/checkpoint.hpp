#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "rrll/adam.hpp"
#include "rrll/env.hpp"
#include "rrll/errors.hpp"
#include "rrll/labels.hpp"
#include "rrll/mlp.hpp"
#include "rrll/text.hpp"

namespace rrll {

inline constexpr int k_checkpoint_version = 1;

// Everything needed to resume training or run inference: both nets, both
// optimizer states, and the data/model contract (alphabet, feature dimension,
// temperature, reward variant, rules). Round-trips exactly: numbers are
// written in shortest-round-trip decimal form.
struct checkpoint {
  std::vector<std::string> alphabet;
  int feature_dim = 0;
  double temperature = 1.0;
  reward_variant variant = reward_variant::full;
  std::string rules_text;
  mlp policy;
  mlp baseline;
  adam_state policy_opt;
  adam_state baseline_opt;
};

namespace detail {

inline nlohmann::json mlp_to_json(const mlp& net) {
  nlohmann::json j;
  j["dims"] = net.dims;
  j["weights"] = net.weights;
  j["biases"] = net.biases;
  return j;
}

inline mlp mlp_from_json(const nlohmann::json& j) {
  mlp net;
  net.dims = j.at("dims").get<std::vector<int>>();
  net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  if (net.dims.size() < 2 || net.weights.size() != net.dims.size() - 1 ||
      net.biases.size() != net.weights.size())
    throw data_error("checkpoint: inconsistent network shape");
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const auto rows = static_cast<std::size_t>(net.dims[l + 1]);
    const auto cols = static_cast<std::size_t>(net.dims[l]);
    if (net.weights[l].size() != rows * cols || net.biases[l].size() != rows)
      throw data_error("checkpoint: layer " + std::to_string(l) + " has wrong parameter count");
  }
  return net;
}

inline nlohmann::json adam_to_json(const adam_state& s) {
  nlohmann::json j;
  j["beta1"] = s.beta1;
  j["beta2"] = s.beta2;
  j["eps"] = s.eps;
  j["step"] = s.step;
  j["m_weights"] = s.m.weights;
  j["m_biases"] = s.m.biases;
  j["v_weights"] = s.v.weights;
  j["v_biases"] = s.v.biases;
  return j;
}

inline adam_state adam_from_json(const nlohmann::json& j) {
  adam_state s;
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
  s.step = j.at("step").get<long long>();
  s.m.weights = j.at("m_weights").get<std::vector<std::vector<double>>>();
  s.m.biases = j.at("m_biases").get<std::vector<std::vector<double>>>();
  s.v.weights = j.at("v_weights").get<std::vector<std::vector<double>>>();
  s.v.biases = j.at("v_biases").get<std::vector<std::vector<double>>>();
  return s;
}

} // namespace detail

inline std::string serialize_checkpoint(const checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = "rrll-checkpoint";
  j["version"] = k_checkpoint_version;
  j["alphabet"] = ckpt.alphabet;
  j["feature_dim"] = ckpt.feature_dim;
  j["temperature"] = ckpt.temperature;
  j["variant"] = variant_name(ckpt.variant);
  j["rules"] = ckpt.rules_text;
  j["policy"] = detail::mlp_to_json(ckpt.policy);
  j["baseline"] = detail::mlp_to_json(ckpt.baseline);
  j["policy_opt"] = detail::adam_to_json(ckpt.policy_opt);
  j["baseline_opt"] = detail::adam_to_json(ckpt.baseline_opt);
  return j.dump(2) + "\n";
}

inline void save_checkpoint(const checkpoint& ckpt, const std::filesystem::path& path) {
  atomic_write_file(path, serialize_checkpoint(ckpt));
}

inline checkpoint parse_checkpoint(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(origin + ": bad JSON: " + e.what());
  }
  try {
    if (j.value("format", std::string()) != "rrll-checkpoint")
      throw data_error(origin + ": not a checkpoint file");
    if (j.at("version").get<int>() != k_checkpoint_version)
      throw data_error(origin + ": unsupported checkpoint version " +
                       std::to_string(j.at("version").get<int>()));
    checkpoint ckpt;
    ckpt.alphabet = j.at("alphabet").get<std::vector<std::string>>();
    ckpt.feature_dim = j.at("feature_dim").get<int>();
    ckpt.temperature = j.at("temperature").get<double>();
    ckpt.variant = variant_from_name(j.at("variant").get<std::string>());
    ckpt.rules_text = j.at("rules").get<std::string>();
    ckpt.policy = detail::mlp_from_json(j.at("policy"));
    ckpt.baseline = detail::mlp_from_json(j.at("baseline"));
    ckpt.policy_opt = detail::adam_from_json(j.at("policy_opt"));
    ckpt.baseline_opt = detail::adam_from_json(j.at("baseline_opt"));
    label_alphabet check(ckpt.alphabet);
    return ckpt;
  } catch (const error&) {
    throw;
  } catch (const std::exception& e) {
    throw data_error(origin + ": malformed checkpoint: " + e.what());
  }
}

inline checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path), path.string());
}

} // namespace rrll
