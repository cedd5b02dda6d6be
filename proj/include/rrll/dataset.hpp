#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "rrll/errors.hpp"
#include "rrll/labels.hpp"
#include "rrll/text.hpp"

namespace rrll {

// One timestep: feature vector, the frozen base predictor's label, and (when
// known) the ground-truth label. true_label == -1 means "not provided".
struct instance {
  std::vector<double> features;
  int pred_label = 0;
  int true_label = -1;

  bool has_truth() const { return true_label >= 0; }
};

struct trajectory {
  std::string seq_id;
  std::vector<instance> instances;

  std::size_t size() const { return instances.size(); }
};

// A set of trajectories plus the label alphabet and feature dimension they
// share. `has_truth` is all-or-nothing across records (mixed files are
// rejected on load).
struct dataset {
  std::vector<std::string> alphabet;
  int feature_dim = 0;
  bool has_truth = true;
  std::vector<trajectory> trajectories;

  label_alphabet make_alphabet() const { return label_alphabet(alphabet); }

  std::size_t instance_count() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.size();
    return n;
  }
};

// On disk: line-delimited JSON. The first line is a header object carrying
// the alphabet and feature dimension M; every following line is one record
// {seq_id, t, features, pred, true}. Records of one seq_id are contiguous and
// ordered by t starting at 0; "true" is omitted when unknown. Feature values
// survive a save/load round trip bit-exactly.
inline std::string serialize_dataset(const dataset& data) {
  nlohmann::json header;
  header["alphabet"] = data.alphabet;
  header["M"] = data.feature_dim;
  std::string out = header.dump();
  out += '\n';
  for (const auto& traj : data.trajectories) {
    for (std::size_t t = 0; t < traj.instances.size(); ++t) {
      const instance& ins = traj.instances[t];
      nlohmann::json rec;
      rec["seq_id"] = traj.seq_id;
      rec["t"] = t;
      rec["features"] = ins.features;
      rec["pred"] = ins.pred_label;
      if (ins.has_truth()) rec["true"] = ins.true_label;
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

inline void save_dataset(const dataset& data, const std::filesystem::path& path) {
  atomic_write_file(path, serialize_dataset(data));
}

inline dataset parse_dataset(std::string_view text, const std::string& origin) {
  dataset out;
  const auto fail = [&](int line_no, const std::string& msg) -> data_error {
    return data_error(origin + " line " + std::to_string(line_no) + ": " + msg);
  };

  const std::vector<std::string> lines = split(text, '\n');
  bool have_header = false;
  int k = 0;
  std::set<std::string> finished_ids;
  std::size_t saw_truth = 0, saw_records = 0;
  int line_no = 0;
  for (const auto& raw : lines) {
    ++line_no;
    if (trim(raw).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw fail(line_no, std::string("bad JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.contains("alphabet") || !j.contains("M"))
        throw fail(line_no, "header must carry 'alphabet' and 'M'");
      try {
        out.alphabet = j.at("alphabet").get<std::vector<std::string>>();
        out.feature_dim = j.at("M").get<int>();
        label_alphabet check(out.alphabet); // validates size/uniqueness
        k = check.size();
      } catch (const error&) {
        throw;
      } catch (const std::exception& e) {
        throw fail(line_no, std::string("bad header: ") + e.what());
      }
      if (out.feature_dim < 1) throw fail(line_no, "M must be >= 1");
      have_header = true;
      continue;
    }
    std::string seq_id;
    long long t = -1;
    instance ins;
    try {
      seq_id = j.at("seq_id").get<std::string>();
      t = j.at("t").get<long long>();
      ins.features = j.at("features").get<std::vector<double>>();
      ins.pred_label = j.at("pred").get<int>();
      if (j.contains("true")) ins.true_label = j.at("true").get<int>();
    } catch (const std::exception& e) {
      throw fail(line_no, std::string("bad record: ") + e.what());
    }
    const std::string where = "record (seq_id=" + seq_id + ", t=" + std::to_string(t) + ")";
    if (static_cast<int>(ins.features.size()) != out.feature_dim)
      throw fail(line_no, where + ": expected " + std::to_string(out.feature_dim) +
                              " features, got " + std::to_string(ins.features.size()));
    if (ins.pred_label < 0 || ins.pred_label >= k)
      throw fail(line_no, where + ": pred label " + std::to_string(ins.pred_label) +
                              " outside alphabet of size " + std::to_string(k));
    if (j.contains("true") && (ins.true_label < 0 || ins.true_label >= k))
      throw fail(line_no, where + ": true label " + std::to_string(ins.true_label) +
                              " outside alphabet of size " + std::to_string(k));

    if (out.trajectories.empty() || out.trajectories.back().seq_id != seq_id) {
      if (finished_ids.count(seq_id))
        throw fail(line_no, where + ": records of one seq_id must be contiguous");
      if (!out.trajectories.empty()) finished_ids.insert(out.trajectories.back().seq_id);
      out.trajectories.push_back(trajectory{seq_id, {}});
    }
    trajectory& traj = out.trajectories.back();
    if (t != static_cast<long long>(traj.instances.size()))
      throw fail(line_no, where + ": expected t=" + std::to_string(traj.instances.size()));
    ++saw_records;
    if (ins.has_truth()) ++saw_truth;
    traj.instances.push_back(std::move(ins));
  }
  if (!have_header) throw data_error(origin + ": missing header line");
  if (saw_truth != 0 && saw_truth != saw_records)
    throw data_error(origin + ": 'true' labels present on some records but not all");
  out.has_truth = saw_records > 0 && saw_truth == saw_records;
  return out;
}

inline dataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.string());
}

// Splits every trajectory into chunks of at most max_len steps, preserving
// order; concatenating the output reproduces the input instance-for-instance.
// Split chunks get "#<chunk>" appended to the seq_id.
inline std::vector<trajectory> segment(const std::vector<trajectory>& trajs, int max_len) {
  if (max_len < 2) throw domain_error("segment: max_len must be >= 2");
  std::vector<trajectory> out;
  for (const auto& traj : trajs) {
    if (traj.instances.size() <= static_cast<std::size_t>(max_len)) {
      out.push_back(traj);
      continue;
    }
    std::size_t chunk = 0;
    for (std::size_t start = 0; start < traj.instances.size(); start += static_cast<std::size_t>(max_len)) {
      const std::size_t stop = std::min(traj.instances.size(), start + static_cast<std::size_t>(max_len));
      trajectory part;
      part.seq_id = traj.seq_id + "#" + std::to_string(chunk++);
      part.instances.assign(traj.instances.begin() + static_cast<std::ptrdiff_t>(start),
                            traj.instances.begin() + static_cast<std::ptrdiff_t>(stop));
      out.push_back(std::move(part));
    }
  }
  return out;
}

} // namespace rrll
