#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <string>
#include <vector>

#include "rrll/infer.hpp"
#include "rrll/labels.hpp"
#include "rrll/synth.hpp"
#include "rrll/trainer.hpp"

using namespace rrll;

namespace {

// Small seizure benchmark shared by the training tests.
dataset tiny_train_data(std::uint64_t seed = 3, double predictor_error = 0.25) {
  synth_config cfg{builtin_rules("seizure")};
  cfg.feature_dim = 4;
  cfg.traj_len = 12;
  cfg.n_train = 8;
  cfg.n_test = 0;
  cfg.predictor_error = predictor_error;
  cfg.feature_noise = 0.05;
  cfg.seed = seed;
  return generate_dataset(cfg).first;
}

} // namespace

TEST_CASE("returns to go are suffix sums") {
  rng gen(8);
  std::vector<int> rewards(17);
  for (auto& r : rewards) r = gen.uniform_int(6) - 4;
  const auto g = returns_to_go(rewards);
  REQUIRE(g.size() == rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    double brute = 0.0;
    for (std::size_t u = t; u < rewards.size(); ++u) brute += rewards[u];
    CHECK(g[t] == brute);
  }
  CHECK(returns_to_go(std::vector<int>{}).empty());
}

TEST_CASE("policy coefficients are advantage plus switch penalty") {
  const std::vector<int> actions = {1, 1, 2};
  const std::vector<double> returns = {3.0, 2.0, 1.0};
  const std::vector<double> values = {1.0, 1.0, 1.0};
  const auto c = policy_objective_coeffs(actions, returns, values, 0.5);
  CHECK(c == std::vector<double>{-2.0, -1.0, 0.5});

  // the first step never carries a switch term
  const auto c2 = policy_objective_coeffs(std::vector<int>{2, 2}, std::vector<double>{5.0, 1.0},
                                          std::vector<double>{0.0, 0.0}, 10.0);
  CHECK(c2 == std::vector<double>{-5.0, -1.0});

  // alpha 0 and a zero baseline reduce to textbook REINFORCE weights
  const auto c3 = policy_objective_coeffs(std::vector<int>{0, 1, 0}, returns,
                                          std::vector<double>{0.0, 0.0, 0.0}, 0.0);
  CHECK(c3 == std::vector<double>{-3.0, -2.0, -1.0});

  CHECK_THROWS_AS(policy_objective_coeffs(actions, returns, std::vector<double>{1.0}, 1.0),
                  domain_error);
}

TEST_CASE("train config validation rejects bad values") {
  train_config cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = train_config{};
  cfg.switch_penalty = -1.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = train_config{};
  cfg.temperature = 0.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = train_config{};
  cfg.explore_eps = 1.5;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = train_config{};
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = train_config{};
  cfg.max_segment_len = 1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.max_segment_len = 2;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("network shapes follow the alphabet and feature dimension") {
  CHECK(policy_dims(5, 32) == std::vector<int>{42, 42, 42, 5});
  CHECK(baseline_dims(5, 32) == std::vector<int>{42, 32, 32, 1});
  CHECK(policy_dims(3, 16) == std::vector<int>{22, 38, 38, 3});
}

TEST_CASE("stats tables round trip") {
  std::vector<epoch_stats> stats(2);
  stats[0] = epoch_stats{0, -31.25, 0.5, 0.125, 1.5, 220.0, -0.75, 3e-4};
  stats[1] = epoch_stats{1, -7.0, 0.875, 0.0, 0.25, 19.5, -0.25, 2.97e-4};
  const std::string text = serialize_stats(stats);
  const auto back = parse_stats(text, "stats");
  REQUIRE(back.size() == 2);
  CHECK(back[1].epoch == 1);
  CHECK(back[1].mean_return == -7.0);
  CHECK(back[1].lr == 2.97e-4);
  CHECK(serialize_stats(back) == text);

  CHECK_THROWS_AS(parse_stats("epoch\n1\t2\n", "stats"), data_error);
}

TEST_CASE("training is deterministic") {
  const dataset data = tiny_train_data();
  train_config cfg;
  cfg.epochs = 3;
  cfg.seed = 21;
  const rule_set rules = builtin_rules("seizure");

  const train_result a = train(data, rules, cfg);
  const train_result b = train(data, rules, cfg);
  REQUIRE(a.stats.size() == 3);
  CHECK(serialize_stats(a.stats) == serialize_stats(b.stats));
  CHECK(a.policy.weights == b.policy.weights);
  CHECK(a.baseline.weights == b.baseline.weights);
  CHECK(a.policy_opt.m.weights == b.policy_opt.m.weights);

  // a different seed changes the trajectory of every epoch
  cfg.seed = 22;
  const train_result c = train(data, rules, cfg);
  CHECK(serialize_stats(c.stats) != serialize_stats(a.stats));
}

TEST_CASE("training rejects mismatched inputs") {
  const dataset data = tiny_train_data();
  train_config cfg;
  cfg.epochs = 1;

  CHECK_THROWS_AS(train(data, builtin_rules("sleep"), cfg), config_error);

  dataset no_truth = data;
  for (auto& traj : no_truth.trajectories)
    for (auto& ins : traj.instances) ins.true_label = -1;
  no_truth.has_truth = false;
  CHECK_THROWS_AS(train(no_truth, builtin_rules("seizure"), cfg), data_error);

  dataset empty = data;
  empty.trajectories.clear();
  CHECK_THROWS_AS(train(empty, builtin_rules("seizure"), cfg), data_error);

  // warm-start nets must match the dataset's dimensions
  rng gen(1);
  mlp wrong_policy = init_mlp(policy_dims(3, 9), gen);
  mlp baseline = init_mlp(baseline_dims(3, 4), gen);
  CHECK_THROWS_AS(train_from(data, builtin_rules("seizure"), cfg, wrong_policy, baseline),
                  config_error);
}

TEST_CASE("maintain policy reproduces the predictor and survives training on it") {
  const mlp keep = make_maintain_policy(3, 4);
  mlp_cache cache;
  rng gen(14);
  for (int yhat = 0; yhat < 3; ++yhat)
    for (int prev = 0; prev < 3; ++prev) {
      instance ins;
      ins.features = {gen.normal(), gen.normal(), gen.normal(), gen.normal()};
      ins.pred_label = yhat;
      const auto probs = policy_forward(keep, build_state(ins, prev, 3), 1.0, cache);
      CHECK(argmax_action(probs) == yhat);
      CHECK(probs[static_cast<std::size_t>(yhat)] > 0.998);
    }

  // Perfect predictor: the warm-started policy has nothing to learn, so
  // returns stay within the exploration tax and greedy decoding stays exact.
  const dataset data = tiny_train_data(5, 0.0);
  train_config cfg;
  cfg.epochs = 3;
  cfg.seed = 2;
  rng init(mix_seed(cfg.seed, 11));
  mlp baseline = init_mlp(baseline_dims(3, 4), init);
  const train_result res =
      train_from(data, builtin_rules("seizure"), cfg, make_maintain_policy(3, 4), baseline);
  const double t = static_cast<double>(data.trajectories.front().size());
  for (const auto& s : res.stats) {
    CHECK(s.accuracy > 0.85);
    CHECK(s.mean_return >= -4.0 * cfg.explore_eps * t);
  }
  for (const auto& traj : data.trajectories) {
    const auto actions = correct_labels(traj, res.policy, cfg.temperature, 3);
    for (std::size_t i = 0; i < actions.size(); ++i)
      CHECK(actions[i] == traj.instances[i].true_label);
  }
}

TEST_CASE("numeric blowups name the failing unit of work") {
  const dataset data = tiny_train_data();
  train_config cfg;
  cfg.epochs = 1;
  cfg.learning_rate = 1e200; // finite, passes validation, explodes in flight
  try {
    train(data, builtin_rules("seizure"), cfg);
    FAIL("expected a numeric_error");
  } catch (const numeric_error& e) {
    CHECK(std::string(e.what()).find("trajectory") != std::string::npos);
  }
}

TEST_CASE("segmented training accepts long trajectories") {
  const dataset data = tiny_train_data();
  train_config cfg;
  cfg.epochs = 2;
  cfg.max_segment_len = 5;
  const train_result res = train(data, builtin_rules("seizure"), cfg);
  CHECK(res.stats.size() == 2);
  // 8 trajectories of 12 steps split 5/5/2: per-trajectory means shrink
  CHECK(res.stats[0].mean_return > -12.0 * 4.0);
}

TEST_CASE("sweep grid enumerates lr, alpha, eta, epsilon with seeds innermost") {
  const auto cells = sweep_grid({0.1, 0.2}, {1.0}, {1.0}, {0.5, 0.9}, 2, 5);
  REQUIRE(cells.size() == 8);
  const auto check_cell = [&](std::size_t i, int cfg_idx, double lr, double eps,
                              std::uint64_t seed) {
    CHECK(cells[i].config_index == cfg_idx);
    CHECK(cells[i].learning_rate == lr);
    CHECK(cells[i].switch_penalty == 1.0);
    CHECK(cells[i].temperature == 1.0);
    CHECK(cells[i].explore_eps == eps);
    CHECK(cells[i].seed == seed);
  };
  check_cell(0, 0, 0.1, 0.5, 5);
  check_cell(1, 0, 0.1, 0.5, 6);
  check_cell(2, 1, 0.1, 0.9, 5);
  check_cell(3, 1, 0.1, 0.9, 6);
  check_cell(4, 2, 0.2, 0.5, 5);
  check_cell(5, 2, 0.2, 0.5, 6);
  check_cell(6, 3, 0.2, 0.9, 5);
  check_cell(7, 3, 0.2, 0.9, 6);

  // the default 3x3x3x3 grid over 10 seeds enumerates 810 runs
  const auto full = sweep_grid({3e-5, 3e-4, 3e-3}, {10.0, 1.0, 0.1}, {10.0, 1.0, 0.1},
                               {0.5, 0.1, 0.01}, 10, 1);
  CHECK(full.size() == 810);
  CHECK(full.front().config_index == 0);
  CHECK(full.back().config_index == 80);
  CHECK(full.back().seed == 10);

  CHECK_THROWS_AS(sweep_grid({}, {1.0}, {1.0}, {0.1}, 1, 1), config_error);
  CHECK_THROWS_AS(sweep_grid({0.1}, {1.0}, {1.0}, {0.1}, 0, 1), config_error);
}

TEST_CASE("sweep results are order-stable across thread counts") {
  const dataset data = tiny_train_data();
  train_config base;
  base.epochs = 2;
  const auto cells = sweep_grid({3e-4, 1e-3}, {1.0}, {1.0}, {0.1, 0.3}, 1, 7);
  REQUIRE(cells.size() == 4);

  const auto serial = sweep(data, builtin_rules("seizure"), base, cells, 1);
  const auto threaded = sweep(data, builtin_rules("seizure"), base, cells, 4);
  REQUIRE(serial.size() == threaded.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].cell.config_index == threaded[i].cell.config_index);
    CHECK(serial[i].cell.seed == threaded[i].cell.seed);
    CHECK(serialize_stats(serial[i].stats) == serialize_stats(threaded[i].stats));
  }

  CHECK_THROWS_AS(sweep(data, builtin_rules("seizure"), base, cells, 0), config_error);

  // one exploding cell fails the whole sweep, threaded or not
  auto bad_cells = cells;
  bad_cells[2].learning_rate = 1e200;
  CHECK_THROWS_AS(sweep(data, builtin_rules("seizure"), base, bad_cells, 4), numeric_error);
}
