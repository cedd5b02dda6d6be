#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "rrll/env.hpp"
#include "rrll/labels.hpp"

#include "reward_oracle.hpp"

using namespace rrll;

TEST_CASE("graded rewards match the hand-coded table on every tuple") {
  const rule_set sleep = builtin_rules("sleep");
  for (int y = 0; y < 5; ++y)
    for (int yhat = 0; yhat < 5; ++yhat)
      for (int a = 0; a < 5; ++a)
        for (int prev = 0; prev < 5; ++prev) {
          INFO("y=" << y << " yhat=" << yhat << " a=" << a << " prev=" << prev);
          CHECK(reward_full(y, yhat, a, prev, sleep) == oracle::sleep_reward(y, yhat, a, prev));
          CHECK(reward_simplified(y, yhat, a, prev, sleep) ==
                oracle::simplified_reward(y, yhat, a, oracle::k_sleep_reach[prev][a]));
        }

  const rule_set seizure = builtin_rules("seizure");
  for (int y = 0; y < 3; ++y)
    for (int yhat = 0; yhat < 3; ++yhat)
      for (int a = 0; a < 3; ++a)
        for (int prev = 0; prev < 3; ++prev) {
          INFO("y=" << y << " yhat=" << yhat << " a=" << a << " prev=" << prev);
          CHECK(reward_full(y, yhat, a, prev, seizure) ==
                oracle::seizure_reward(y, yhat, a, prev));
          CHECK(reward_simplified(y, yhat, a, prev, seizure) ==
                oracle::simplified_reward(y, yhat, a, oracle::k_seizure_reach[prev][a]));
        }
}

TEST_CASE("reward corners behave as specified") {
  const rule_set rules = builtin_rules("sleep"); // 0 Wake, 1 N1, 2 N2, 3 N3, 4 REM
  // keeping a correct prediction costs nothing; fixing a wrong one pays
  CHECK(reward_full(2, 2, 2, 2, rules) == 0);
  CHECK(reward_full(2, 1, 2, 1, rules) == 1);
  // a correct action wins even over a forbidden transition (Wake -> N3)
  CHECK(reward_full(3, 1, 3, 0, rules) == 1);
  // keeping the predictor's mistake
  CHECK(reward_full(2, 1, 1, 1, rules) == -1);
  // breaking a wrong prediction over an allowed transition
  CHECK(reward_full(2, 1, 0, 1, rules) == -2);
  // breaking a correct prediction over an allowed transition
  CHECK(reward_full(2, 2, 1, 2, rules) == -3);
  // forbidden transition away from a wrong prediction (Wake -> REM)
  CHECK(reward_full(1, 2, 4, 0, rules) == -4);
  // forbidden transition away from a correct prediction shares the floor
  CHECK(reward_full(2, 2, 0, 2, rules) == -4);
  CHECK(categorize(2, 2, 0, rules.is_reachable(2, 0)) == reward_category::uncovered);
}

TEST_CASE("categories are consistent with the graded rewards") {
  const rule_set rules = builtin_rules("sleep");
  for (int y = 0; y < 5; ++y)
    for (int yhat = 0; yhat < 5; ++yhat)
      for (int a = 0; a < 5; ++a)
        for (int prev = 0; prev < 5; ++prev) {
          const bool reach = rules.is_reachable(prev, a);
          CHECK(category_reward_full(categorize(y, yhat, a, reach)) ==
                reward_full(y, yhat, a, prev, rules));
        }
  for (int i = 0; i < k_category_count; ++i) {
    const auto c = static_cast<reward_category>(i);
    CHECK(category_from_name(category_name(c)) == c);
  }
  CHECK_THROWS_AS(category_from_name("sideways"), data_error);
}

TEST_CASE("variant names round trip") {
  CHECK(variant_from_name(variant_name(reward_variant::full)) == reward_variant::full);
  CHECK(variant_from_name(variant_name(reward_variant::simplified)) ==
        reward_variant::simplified);
  CHECK_THROWS_AS(variant_from_name("graded"), config_error);
}

TEST_CASE("state layout is predicted one-hot, features, previous-action one-hot") {
  instance ins;
  ins.features = {0.5, -1.0};
  ins.pred_label = 2;
  ins.true_label = 0;
  const auto s = build_state(ins, 1, 3);
  CHECK(s == std::vector<double>{0, 0, 1, 0.5, -1.0, 0, 1, 0});
  CHECK(state_dim(3, 2) == 8);
  CHECK(pred_from_state(s, 3) == 2);
  CHECK(prev_action_from_state(s, 3) == 1);
  CHECK(features_from_state(s, 3) == ins.features);

  CHECK_THROWS_AS(build_state(ins, 3, 3), domain_error);
  ins.pred_label = -1;
  CHECK_THROWS_AS(build_state(ins, 1, 3), domain_error);
}

namespace {

trajectory scripted_trajectory() {
  // sleep labels; predictions carry one violation (N2 -> Wake at t=2)
  trajectory traj{"ep", {}};
  const int preds[4] = {2, 2, 0, 2};
  const int truths[4] = {2, 2, 2, 2};
  for (int t = 0; t < 4; ++t) {
    instance ins;
    ins.features = {0.0};
    ins.pred_label = preds[t];
    ins.true_label = truths[t];
    traj.instances.push_back(ins);
  }
  return traj;
}

} // namespace

TEST_CASE("episodes thread the previous action through the state") {
  const reward_spec spec{reward_variant::full, builtin_rules("sleep")};
  const trajectory traj = scripted_trajectory();
  const int script[4] = {2, 1, 2, 2};

  std::vector<int> prev_seen;
  const action_selector select = [&](std::span<const double> state, const instance&, int t) {
    prev_seen.push_back(prev_action_from_state(state, 5));
    return script[t];
  };
  const auto records = run_episode(traj, select, spec);
  REQUIRE(records.size() == 4);

  // before the first action the predictor's first label stands in
  CHECK(prev_seen == std::vector<int>{2, 2, 1, 2});
  for (std::size_t t = 0; t < records.size(); ++t) CHECK(records[t].action == script[t]);

  // rewards recomputed by hand: prev = {2,2,1,2}
  CHECK(records[0].reward == oracle::sleep_reward(2, 2, 2, 2)); // 0
  CHECK(records[1].reward == oracle::sleep_reward(2, 2, 1, 2)); // -3
  CHECK(records[2].reward == oracle::sleep_reward(2, 0, 2, 1)); // +1
  CHECK(records[3].reward == oracle::sleep_reward(2, 2, 2, 2)); // 0
  CHECK(episode_return(records) == -2);
  CHECK(records[1].category == reward_category::reassign_wrong_possible_pred_right);
}

TEST_CASE("episode runner validates its inputs") {
  const reward_spec spec{reward_variant::full, builtin_rules("sleep")};
  const action_selector keep = [](std::span<const double>, const instance& ins, int) {
    return ins.pred_label;
  };
  CHECK_THROWS_AS(run_episode(trajectory{"empty", {}}, keep, spec), domain_error);

  trajectory no_truth = scripted_trajectory();
  for (auto& ins : no_truth.instances) ins.true_label = -1;
  CHECK_THROWS_AS(run_episode(no_truth, keep, spec), data_error);

  const action_selector wild = [](std::span<const double>, const instance&, int) { return 7; };
  CHECK_THROWS_AS(run_episode(scripted_trajectory(), wild, spec), domain_error);
}

TEST_CASE("trace files round trip and reject corruption") {
  const reward_spec spec{reward_variant::full, builtin_rules("sleep")};
  const action_selector keep = [](std::span<const double>, const instance& ins, int) {
    return ins.pred_label;
  };
  const auto records = run_episode(scripted_trajectory(), keep, spec);
  const auto rows = make_trace("ep", records);
  REQUIRE(rows.size() == records.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    CHECK(rows[t].t == static_cast<int>(t));
    CHECK(rows[t].action == records[t].action);
    CHECK(rows[t].reward == records[t].reward);
  }

  const std::string text = serialize_trace(rows);
  const auto back = parse_trace(text, "trace");
  REQUIRE(back.size() == rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    CHECK(back[t].seq_id == rows[t].seq_id);
    CHECK(back[t].t == rows[t].t);
    CHECK(back[t].action == rows[t].action);
    CHECK(back[t].reward == rows[t].reward);
    CHECK(back[t].category == rows[t].category);
  }
  CHECK(serialize_trace(back) == text);

  CHECK_THROWS_AS(parse_trace("seq_id\tt\n" "ep\t0\n", "trace"), data_error);
  CHECK_THROWS_AS(parse_trace("seq_id\tt\taction\treward\tcategory\n"
                              "ep\t0\t1\t0\tnot_a_category\n",
                              "trace"),
                  data_error);
}
