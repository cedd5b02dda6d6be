#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rrll/checkpoint.hpp"
#include "rrll/dataset.hpp"
#include "rrll/env.hpp"
#include "rrll/errors.hpp"
#include "rrll/infer.hpp"
#include "rrll/metrics.hpp"
#include "rrll/report.hpp"
#include "rrll/run_config.hpp"
#include "rrll/synth.hpp"
#include "rrll/text.hpp"
#include "rrll/trainer.hpp"
#include "rrll/version.hpp"

namespace rrll {

// Process exit codes. Anything else unexpected maps to 1.
inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_config = 2;
inline constexpr int k_exit_data = 3;
inline constexpr int k_exit_numeric = 4;

namespace detail {

inline void write_outputs_note(const std::filesystem::path& dir,
                               const std::vector<std::string>& files) {
  for (const auto& f : files) std::printf("wrote %s\n", (dir / f).string().c_str());
}

inline void write_echo(const run_config& cfg, const std::filesystem::path& dir) {
  atomic_write_file(dir / "config.echo", cfg.echo_text());
}

// Measured properties of one generated split, recorded in the manifest so a
// dataset is auditable without re-reading the JSONL.
inline nlohmann::json split_stats(const dataset& d, const rule_set& rules) {
  long long correct = 0, n = 0;
  std::vector<std::vector<int>> pred_seqs, true_seqs;
  for (const auto& traj : d.trajectories) {
    auto& p = pred_seqs.emplace_back();
    auto& y = true_seqs.emplace_back();
    for (const auto& ins : traj.instances) {
      p.push_back(ins.pred_label);
      y.push_back(ins.true_label);
      if (ins.pred_label == ins.true_label) ++correct;
      ++n;
    }
  }
  const violation_stats vp = violation_rate(pred_seqs, rules);
  const violation_stats vt = violation_rate(true_seqs, rules);
  return nlohmann::json{{"trajectories", d.trajectories.size()},
                        {"instances", n},
                        {"predictor_accuracy", n > 0 ? static_cast<double>(correct) / n : 0.0},
                        {"violation_rate_pred", vp.rate},
                        {"violation_rate_true", vt.rate}};
}

inline void check_checkpoint_matches(const checkpoint& ck, const dataset& data) {
  if (data.alphabet != ck.alphabet)
    throw config_error("checkpoint alphabet does not match the dataset alphabet");
  if (data.feature_dim != ck.feature_dim)
    throw config_error("checkpoint feature_dim " + std::to_string(ck.feature_dim) +
                       " does not match dataset feature_dim " + std::to_string(data.feature_dim));
}

} // namespace detail

// generate: synthesize a train/test dataset pair plus a manifest with the
// measured predictor accuracy and violation rates.
inline void cmd_generate(const run_config& cfg) {
  const synth_config s = cfg.to_synth();
  const auto [train_split, test_split] = generate_dataset(s);
  const std::filesystem::path dir = cfg.out_dir("generate");

  save_dataset(train_split, dir / "train.jsonl");
  save_dataset(test_split, dir / "test.jsonl");

  nlohmann::json manifest{{"format", "rrll-generate-manifest"},
                          {"alphabet", train_split.alphabet},
                          {"feature_dim", s.feature_dim},
                          {"traj_len", s.traj_len},
                          {"seed", s.seed},
                          {"config_hash", cfg.config_hash()},
                          {"train", detail::split_stats(train_split, s.rules)},
                          {"test", detail::split_stats(test_split, s.rules)}};
  atomic_write_file(dir / "generate_manifest.json", manifest.dump(2) + "\n");
  detail::write_echo(cfg, dir);
  detail::write_outputs_note(dir, {"train.jsonl", "test.jsonl", "generate_manifest.json"});
}

// train: fit policy + baseline on a labeled dataset; emit per-epoch stats and
// a checkpoint that pins everything evaluation needs.
inline void cmd_train(const run_config& cfg) {
  const dataset data = load_dataset(cfg.require_path("train_data"));
  const rule_set rules = cfg.load_rules();
  const train_config tcfg = cfg.to_train();
  const train_result result = train(data, rules, tcfg);
  const std::filesystem::path dir = cfg.out_dir("train");

  atomic_write_file(dir / "stats.tsv", serialize_stats(result.stats));

  checkpoint ck;
  ck.alphabet = data.alphabet;
  ck.feature_dim = data.feature_dim;
  ck.temperature = tcfg.temperature;
  ck.variant = tcfg.variant;
  ck.rules_text = serialize_rules(rules);
  ck.policy = result.policy;
  ck.baseline = result.baseline;
  ck.policy_opt = result.policy_opt;
  ck.baseline_opt = result.baseline_opt;
  save_checkpoint(ck, dir / "checkpoint.json");
  detail::write_echo(cfg, dir);

  const epoch_stats& last = result.stats.back();
  std::printf("epoch %d: mean_return %s  accuracy %s  violation_rate %s\n", last.epoch,
              fmt_double(last.mean_return).c_str(), fmt_double(last.accuracy).c_str(),
              fmt_double(last.violation_rate).c_str());
  detail::write_outputs_note(dir, {"stats.tsv", "checkpoint.json"});
}

// sweep: train every (lr, alpha, eta, epsilon, seed) grid cell; one stats file
// per cell plus a manifest line per cell, both in grid order.
inline void cmd_sweep(const run_config& cfg) {
  const dataset data = load_dataset(cfg.require_path("train_data"));
  const rule_set rules = cfg.load_rules();
  const train_config base = cfg.to_train();
  const std::uint64_t base_seed = cfg.getu("seed");
  const int n_seeds = static_cast<int>(cfg.geti("sweep_seeds"));
  const int jobs = static_cast<int>(cfg.geti("jobs"));
  const std::vector<sweep_cell> cells =
      sweep_grid(cfg.get_grid("lr_grid"), cfg.get_grid("alpha_grid"), cfg.get_grid("eta_grid"),
                 cfg.get_grid("epsilon_grid"), n_seeds, base_seed);

  const std::vector<sweep_run> runs = sweep(data, rules, base, cells, jobs);

  const std::filesystem::path dir = cfg.out_dir("sweep");
  std::string manifest;
  for (const auto& run : runs) {
    char name[64];
    std::snprintf(name, sizeof name, "cell-%03d-s%02d.tsv", run.cell.config_index,
                  static_cast<int>(run.cell.seed - base_seed));
    atomic_write_file(dir / "cells" / name, serialize_stats(run.stats));

    const epoch_stats& last = run.stats.back();
    nlohmann::json line{{"file", std::string("cells/") + name},
                        {"config_index", run.cell.config_index},
                        {"lr", run.cell.learning_rate},
                        {"alpha", run.cell.switch_penalty},
                        {"eta", run.cell.temperature},
                        {"epsilon", run.cell.explore_eps},
                        {"seed", run.cell.seed},
                        {"final_mean_return", last.mean_return},
                        {"final_accuracy", last.accuracy},
                        {"final_violation_rate", last.violation_rate}};
    manifest += line.dump();
    manifest += '\n';
  }
  atomic_write_file(dir / "sweep_manifest.jsonl", manifest);
  detail::write_echo(cfg, dir);
  std::printf("swept %zu cells (%d configs x %d seeds)\n", runs.size(),
              runs.empty() ? 0 : runs.back().cell.config_index + 1, n_seeds);
  detail::write_outputs_note(dir, {"sweep_manifest.jsonl"});
}

// eval: run the checkpointed policy greedily over a labeled dataset and report
// predictor-vs-corrected quality side by side. The checkpoint is authoritative
// for rules, reward variant, and temperature.
inline void cmd_eval(const run_config& cfg) {
  const checkpoint ck = load_checkpoint(cfg.require_path("checkpoint"));
  const dataset data = load_dataset(cfg.require_path("test_data"));
  if (!data.has_truth) throw data_error("evaluation data must carry true labels");
  detail::check_checkpoint_matches(ck, data);

  const rule_set rules = parse_rules(ck.rules_text);
  const label_alphabet alphabet = data.make_alphabet();
  const int k = alphabet.size();
  const reward_spec spec{ck.variant, rules};

  std::vector<int> truth, pred, corrected;
  std::vector<std::vector<int>> pred_seqs, act_seqs;
  std::vector<step_record> all_records;
  std::vector<trace_row> trace;
  double total_return = 0.0;
  for (const trajectory& traj : data.trajectories) {
    const std::vector<step_record> records = run_argmax_episode(traj, ck.policy, ck.temperature, spec);
    total_return += static_cast<double>(episode_return(records));
    auto& ps = pred_seqs.emplace_back();
    auto& as = act_seqs.emplace_back();
    for (std::size_t t = 0; t < records.size(); ++t) {
      truth.push_back(traj.instances[t].true_label);
      pred.push_back(traj.instances[t].pred_label);
      corrected.push_back(records[t].action);
      ps.push_back(traj.instances[t].pred_label);
      as.push_back(records[t].action);
    }
    const auto rows = make_trace(traj.seq_id, records);
    trace.insert(trace.end(), rows.begin(), rows.end());
    all_records.insert(all_records.end(), records.begin(), records.end());
  }

  eval_summary s;
  s.predictor = classify_report(truth, pred, k);
  s.corrected = classify_report(truth, corrected, k);
  s.nmi_predictor = nmi(truth, pred);
  s.nmi_corrected = nmi(truth, corrected);
  s.ari_predictor = ari(truth, pred);
  s.ari_corrected = ari(truth, corrected);
  s.viol_predictor = violation_rate(pred_seqs, rules);
  s.viol_corrected = violation_rate(act_seqs, rules);
  s.categories = reward_category_counts(all_records, ck.variant);
  s.variant = ck.variant;
  s.n_instances = static_cast<long long>(truth.size());
  s.n_trajectories = static_cast<long long>(data.trajectories.size());
  s.mean_return = data.trajectories.empty()
                      ? 0.0
                      : total_return / static_cast<double>(data.trajectories.size());

  const report_meta meta{cfg.config_hash(), cfg.getu("seed")};
  const std::filesystem::path dir = cfg.out_dir("eval");
  atomic_write_file(dir / "report_classes.tsv", serialize_class_report(meta, alphabet, s));
  atomic_write_file(dir / "report_categories.tsv", serialize_category_report(meta, s));
  atomic_write_file(dir / "report_summary.tsv", serialize_summary_report(meta, s));
  atomic_write_file(dir / "summary.txt", serialize_text_summary(meta, alphabet, s));
  atomic_write_file(dir / "trace.tsv", serialize_trace(trace));
  detail::write_echo(cfg, dir);

  std::fputs(serialize_text_summary(meta, alphabet, s).c_str(), stdout);
  detail::write_outputs_note(dir, {"report_classes.tsv", "report_categories.tsv",
                                   "report_summary.tsv", "summary.txt", "trace.tsv"});
}

// correct: reassign labels in a dataset (truth optional) and write it back in
// the same JSONL schema, predictions replaced by the policy's choices.
inline void cmd_correct(const run_config& cfg) {
  const checkpoint ck = load_checkpoint(cfg.require_path("checkpoint"));
  const dataset data = load_dataset(cfg.require_path("input_data"));
  detail::check_checkpoint_matches(ck, data);

  const rule_set rules = parse_rules(ck.rules_text);
  const int k = static_cast<int>(ck.alphabet.size());

  dataset out = data;
  long long changed = 0, correct_in = 0, correct_out = 0, n = 0;
  std::vector<std::vector<int>> in_seqs, out_seqs;
  for (trajectory& traj : out.trajectories) {
    const std::vector<int> actions = correct_labels(traj, ck.policy, ck.temperature, k);
    auto& is = in_seqs.emplace_back();
    auto& os = out_seqs.emplace_back();
    for (std::size_t t = 0; t < actions.size(); ++t) {
      instance& ins = traj.instances[t];
      is.push_back(ins.pred_label);
      os.push_back(actions[t]);
      if (ins.pred_label != actions[t]) ++changed;
      if (data.has_truth) {
        if (ins.pred_label == ins.true_label) ++correct_in;
        if (actions[t] == ins.true_label) ++correct_out;
      }
      ins.pred_label = actions[t];
      ++n;
    }
  }
  const violation_stats vin = violation_rate(in_seqs, rules);
  const violation_stats vout = violation_rate(out_seqs, rules);

  const report_meta meta{cfg.config_hash(), cfg.getu("seed")};
  std::string summary = metadata_block(meta);
  summary += "key\tvalue\n";
  const auto kv = [&](const char* key, const std::string& value) {
    summary += key;
    summary += '\t';
    summary += value;
    summary += '\n';
  };
  kv("n_trajectories", std::to_string(out.trajectories.size()));
  kv("n_instances", std::to_string(n));
  kv("changed", std::to_string(changed));
  kv("changed_fraction", fmt_double(n > 0 ? static_cast<double>(changed) / n : 0.0));
  kv("violation_pairs", std::to_string(vin.pairs));
  kv("violations_input", std::to_string(vin.violations));
  kv("violations_corrected", std::to_string(vout.violations));
  kv("violation_rate_input", fmt_double(vin.rate));
  kv("violation_rate_corrected", fmt_double(vout.rate));
  if (data.has_truth) {
    kv("accuracy_input", fmt_double(n > 0 ? static_cast<double>(correct_in) / n : 0.0));
    kv("accuracy_corrected", fmt_double(n > 0 ? static_cast<double>(correct_out) / n : 0.0));
  }

  const std::filesystem::path dir = cfg.out_dir("correct");
  save_dataset(out, dir / "corrected.jsonl");
  atomic_write_file(dir / "correct_summary.tsv", summary);
  detail::write_echo(cfg, dir);
  detail::write_outputs_note(dir, {"corrected.jsonl", "correct_summary.tsv"});
}

namespace detail {

// Per-subcommand option storage. Dedicated flags are thin aliases for config
// keys; only flags actually passed override the file/defaults.
struct sub_args {
  std::string config;
  std::vector<std::string> sets;
  std::string out, seed, rules, data, ckpt, jobs;
  CLI::Option* out_o = nullptr;
  CLI::Option* seed_o = nullptr;
  CLI::Option* rules_o = nullptr;
  CLI::Option* data_o = nullptr;
  CLI::Option* ckpt_o = nullptr;
  CLI::Option* jobs_o = nullptr;
  const char* data_key = nullptr;

  run_config resolve() const {
    std::map<std::string, std::string> flags;
    if (out_o != nullptr && out_o->count() > 0) flags["out"] = out;
    if (seed_o != nullptr && seed_o->count() > 0) flags["seed"] = seed;
    if (rules_o != nullptr && rules_o->count() > 0) flags["rules"] = rules;
    if (data_o != nullptr && data_o->count() > 0) flags[data_key] = data;
    if (ckpt_o != nullptr && ckpt_o->count() > 0) flags["checkpoint"] = ckpt;
    if (jobs_o != nullptr && jobs_o->count() > 0) flags["jobs"] = jobs;
    return run_config::resolve(config, sets, flags);
  }
};

inline void add_common(CLI::App* cmd, sub_args& a) {
  cmd->add_option("--config", a.config, "key = value config file");
  cmd->add_option("--set", a.sets, "override one config key as KEY=VALUE (repeatable)");
  a.out_o = cmd->add_option("--out", a.out, "output directory");
  a.seed_o = cmd->add_option("--seed", a.seed, "random seed");
  a.rules_o = cmd->add_option("--rules", a.rules, "builtin rule set (sleep, seizure) or rules file");
}

} // namespace detail

// Argument parsing plus the exception -> exit-code contract. Never throws.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"rule-constrained label correction over a frozen sequence predictor"};
  app.set_version_flag("--version", std::string(k_project_name) + " " + k_version);
  app.require_subcommand(1);

  detail::sub_args gen, tr, sw, ev, co;

  CLI::App* gen_cmd = app.add_subcommand("generate", "synthesize a train/test dataset pair");
  detail::add_common(gen_cmd, gen);

  CLI::App* train_cmd = app.add_subcommand("train", "train the correction policy");
  detail::add_common(train_cmd, tr);
  tr.data_key = "train_data";
  tr.data_o = train_cmd->add_option("--data", tr.data, "training dataset (JSONL)");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train over the hyperparameter grid");
  detail::add_common(sweep_cmd, sw);
  sw.data_key = "train_data";
  sw.data_o = sweep_cmd->add_option("--data", sw.data, "training dataset (JSONL)");
  sw.jobs_o = sweep_cmd->add_option("--jobs", sw.jobs, "worker threads");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on labeled data");
  detail::add_common(eval_cmd, ev);
  ev.data_key = "test_data";
  ev.data_o = eval_cmd->add_option("--data", ev.data, "evaluation dataset (JSONL, labeled)");
  ev.ckpt_o = eval_cmd->add_option("--checkpoint", ev.ckpt, "checkpoint file");

  CLI::App* correct_cmd = app.add_subcommand("correct", "rewrite a dataset's labels");
  detail::add_common(correct_cmd, co);
  co.data_key = "input_data";
  co.data_o = correct_cmd->add_option("--data", co.data, "input dataset (JSONL, truth optional)");
  co.ckpt_o = correct_cmd->add_option("--checkpoint", co.ckpt, "checkpoint file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? k_exit_ok : k_exit_config;
  }

  try {
    if (gen_cmd->parsed()) cmd_generate(gen.resolve());
    else if (train_cmd->parsed()) cmd_train(tr.resolve());
    else if (sweep_cmd->parsed()) cmd_sweep(sw.resolve());
    else if (eval_cmd->parsed()) cmd_eval(ev.resolve());
    else if (correct_cmd->parsed()) cmd_correct(co.resolve());
    return k_exit_ok;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return k_exit_config;
  } catch (const data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return k_exit_data;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return k_exit_numeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

} // namespace rrll
