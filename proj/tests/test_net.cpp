#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "rrll/adam.hpp"
#include "rrll/mlp.hpp"
#include "rrll/policy.hpp"
#include "rrll/rng.hpp"

#include "grad_check.hpp"

using namespace rrll;

TEST_CASE("init is deterministic, bounded, and zero-biased") {
  rng g1(77), g2(77), g3(78);
  const mlp a = init_mlp({6, 5, 3}, g1);
  const mlp b = init_mlp({6, 5, 3}, g2);
  const mlp c = init_mlp({6, 5, 3}, g3);
  CHECK(a.weights == b.weights);
  CHECK(a.weights != c.weights);
  CHECK(a.parameter_count() == 6 * 5 + 5 + 5 * 3 + 3);

  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    const double r = std::sqrt(6.0 / (a.dims[l] + a.dims[l + 1]));
    for (double w : a.weights[l]) CHECK(std::abs(w) <= r);
    for (double bias : a.biases[l]) CHECK(bias == 0.0);
  }

  CHECK_THROWS_AS(init_mlp({4}, g1), domain_error);
  CHECK_THROWS_AS(init_mlp({4, 0, 2}, g1), domain_error);
}

TEST_CASE("forward matches a hand computation") {
  mlp net;
  net.dims = {2, 2, 1};
  net.weights = {{1.0, 2.0, -1.0, 1.0}, {2.0, -1.0}};
  net.biases = {{0.5, -0.25}, {0.1}};

  // both hidden units rectify to zero
  CHECK(forward(net, std::vector<double>{1.0, -1.0}) == std::vector<double>{0.1});
  // hidden = relu([4.5, -1.25]) = [4.5, 0]; out = 2 * 4.5 + 0.1
  CHECK(forward(net, std::vector<double>{2.0, 1.0}) == std::vector<double>{9.1});

  CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}), domain_error);
}

TEST_CASE("policy and baseline backward match finite differences") {
  rng gen(123);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<int> dims = trial % 2 == 0 ? std::vector<int>{4, 6, 3}
                                                 : std::vector<int>{5, 7, 7, 4};
    mlp net = init_mlp(dims, gen);
    std::vector<double> x(static_cast<std::size_t>(dims.front()));
    for (auto& v : x) v = 2.0 * gen.uniform01() - 1.0;
    const int action = gen.uniform_int(dims.back());
    const double coeff = 4.0 * gen.uniform01() - 2.0;
    const double eta = trial % 3 == 0 ? 2.5 : 1.0;

    mlp_cache cache;
    const auto probs = policy_forward(net, x, eta, cache);
    mlp_grads analytic = zeros_like(net);
    policy_backward_step(net, cache, probs, action, coeff, eta, analytic);
    const auto res = gradcheck::check_all_params(net, analytic, [&](const mlp& n) {
      return coeff * log_prob_from_logits(forward(n, x), action, eta);
    });
    INFO("policy trial " << trial << " max rel err " << res.max_rel_err);
    CHECK(res.max_rel_err < 1e-4);
  }

  for (int trial = 0; trial < 20; ++trial) {
    mlp net = init_mlp({5, 6, 1}, gen);
    std::vector<double> x(5);
    for (auto& v : x) v = 2.0 * gen.uniform01() - 1.0;
    const double target = 10.0 * gen.uniform01() - 5.0;

    mlp_cache cache;
    const double value = baseline_forward(net, x, cache);
    mlp_grads analytic = zeros_like(net);
    baseline_backward_step(net, cache, value, target, analytic);
    const auto res = gradcheck::check_all_params(net, analytic, [&](const mlp& n) {
      const double v = forward(n, x)[0];
      return (v - target) * (v - target);
    });
    INFO("baseline trial " << trial << " max rel err " << res.max_rel_err);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("adam reproduces a frozen two-step trace") {
  mlp net;
  net.dims = {2, 1};
  net.weights = {{1.0, -2.0}};
  net.biases = {{0.0}};
  mlp_grads g = zeros_like(net);
  g.weights[0] = {0.5, -0.25};

  adam_state opt = make_adam(net);
  CHECK(opt.beta1 == 0.9);
  CHECK(opt.beta2 == 0.99);
  adam_step(net, g, opt, 0.1);
  adam_step(net, g, opt, 0.1);
  CHECK(opt.step == 2);

  // Constant gradient: bias correction makes m-hat = g and v-hat = g^2, so
  // each step moves by lr * g / (|g| + eps).
  CHECK(net.weights[0][0] == Catch::Approx(0.800000004).margin(1e-12));
  CHECK(net.weights[0][1] == Catch::Approx(-1.800000008).margin(1e-12));
  CHECK(net.biases[0][0] == 0.0); // zero gradient never moves a parameter
}

TEST_CASE("adam rejects non-finite input without touching parameters") {
  rng gen(5);
  mlp net = init_mlp({3, 4, 2}, gen);
  const mlp snapshot = net;
  adam_state opt = make_adam(net);

  mlp_grads bad = zeros_like(net);
  bad.weights[1][0] = std::nan("");
  CHECK_THROWS_AS(adam_step(net, bad, opt, 0.01), numeric_error);
  CHECK(net.weights == snapshot.weights);
  CHECK(opt.step == 0);

  mlp_grads good = zeros_like(net);
  CHECK_THROWS_AS(adam_step(net, good, opt, std::numeric_limits<double>::infinity()),
                  numeric_error);
  CHECK(net.weights == snapshot.weights);
}

TEST_CASE("learning rate decays one percent per epoch") {
  CHECK(scheduled_lr(3e-4, 0) == 3e-4);
  CHECK(scheduled_lr(3e-4, 1) == Catch::Approx(2.97e-4).epsilon(1e-12));
  CHECK(scheduled_lr(3e-4, 2) == Catch::Approx(2.9403e-4).epsilon(1e-12));
  CHECK(scheduled_lr(1.0, 49) == Catch::Approx(std::pow(0.99, 49)).epsilon(1e-12));
}

TEST_CASE("softmax is normalized and temperature only flattens") {
  rng gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(5);
    for (auto& q : logits) q = 20.0 * gen.uniform01() - 10.0;
    if (trial % 5 == 0)
      for (auto& q : logits) q += 1000.0; // max subtraction keeps this finite

    double prev_top = 2.0;
    int argmax_ref = -1;
    for (const double eta : {0.25, 1.0, 4.0}) {
      const auto p = softmax_temperature(logits, eta);
      double sum = 0.0, top = 0.0;
      int arg = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] > 0.0);
        sum += p[i];
        if (p[i] > top) {
          top = p[i];
          arg = static_cast<int>(i);
        }
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      if (argmax_ref < 0) argmax_ref = arg;
      CHECK(arg == argmax_ref); // temperature never moves the argmax
      CHECK(top <= prev_top);   // hotter = flatter
      prev_top = top;
    }
  }
  CHECK_THROWS_AS(softmax_temperature(std::vector<double>{1.0}, 0.0), domain_error);
  CHECK_THROWS_AS(softmax_temperature(std::vector<double>{}, 1.0), domain_error);
}

TEST_CASE("log prob agrees with the probabilities") {
  rng gen(32);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> logits(4);
    for (auto& q : logits) q = 6.0 * gen.uniform01() - 3.0;
    const double eta = trial % 2 == 0 ? 1.0 : 1.7;
    const auto p = softmax_temperature(logits, eta);
    for (int a = 0; a < 4; ++a)
      CHECK(log_prob_from_logits(logits, a, eta) ==
            Catch::Approx(std::log(p[static_cast<std::size_t>(a)])).margin(1e-12));

    const auto g = log_prob_logit_grad(p, 1, eta);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum += g[i];
      const double expect = ((static_cast<int>(i) == 1 ? 1.0 : 0.0) - p[i]) / eta;
      CHECK(g[i] == Catch::Approx(expect).margin(1e-15));
    }
    CHECK(std::abs(sum) < 1e-14);
  }
}

TEST_CASE("action sampling honours epsilon") {
  const std::vector<double> skewed = {0.97, 0.02, 0.01};
  const int n = 100000;

  rng gen(41);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_action(skewed, 1.0, gen))];
  for (int c = 0; c < 3; ++c) {
    const double p = 1.0 / 3.0;
    const double sigma = std::sqrt(n * p * (1.0 - p));
    INFO("uniform class " << c << " count " << counts[static_cast<std::size_t>(c)]);
    CHECK(std::abs(counts[static_cast<std::size_t>(c)] - n * p) < 3.0 * sigma);
  }

  const std::vector<double> probs = {0.5, 0.3, 0.2};
  std::fill(counts.begin(), counts.end(), 0);
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_action(probs, 0.0, gen))];
  for (int c = 0; c < 3; ++c) {
    const double p = probs[static_cast<std::size_t>(c)];
    const double sigma = std::sqrt(n * p * (1.0 - p));
    INFO("greedy class " << c << " count " << counts[static_cast<std::size_t>(c)]);
    CHECK(std::abs(counts[static_cast<std::size_t>(c)] - n * p) < 3.0 * sigma);
  }

  CHECK_THROWS_AS(sample_action(probs, -0.1, gen), domain_error);
  CHECK_THROWS_AS(sample_action(probs, 1.1, gen), domain_error);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax_action(std::vector<double>{0.4, 0.4, 0.2}) == 0);
  CHECK(argmax_action(std::vector<double>{0.2, 0.4, 0.4}) == 1);
  CHECK(argmax_action(std::vector<double>{0.1, 0.2, 0.7}) == 2);
}

TEST_CASE("policy forward rejects non-finite states") {
  rng gen(9);
  mlp net = init_mlp({3, 4, 2}, gen);
  mlp_cache cache;
  std::vector<double> x = {0.0, std::nan(""), 1.0};
  CHECK_THROWS_AS(policy_forward(net, x, 1.0, cache), domain_error);
  CHECK_THROWS_AS(baseline_forward(net, std::vector<double>{1.0, 0.0, 0.0}, cache),
                  domain_error); // output dim 2, not a scalar head
}
