#include <cmath>
#include <numeric>

#include "doctest.h"
#include "handopt/learning.hpp"

using namespace handopt;
using namespace handopt::learning;

namespace {

learning::TaskSet sphere_task(double gamma = 0.99) {
  TaskSet task;
  task.instances = {env::make_object(env::Shape::Sphere, 1.0)};
  task.gamma = gamma;
  return task;
}

env::Simulator v5_sim() {
  return env::Simulator(env::build_hand(design::dash_v5()), env::EnvParams{});
}

BatchFitness quadratic(const std::vector<double>& centre) {
  return [centre](const std::vector<std::vector<double>>& batch) {
    std::vector<double> out;
    for (const auto& x : batch) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - centre[i]) * (x[i] - centre[i]);
      out.push_back(-s);
    }
    return out;
  };
}

}  // namespace

TEST_CASE("policy network") {
  const PolicyArch arch;
  CHECK(arch.param_count() == 36 * 32 + 32 + 32 * 8 + 8);
  CHECK(arch.param_count() == 1448);

  env::Observation obs{};
  obs.fill(0.7);
  const auto zero = act(PolicyParams::zeros(), obs);
  for (double a : zero) CHECK(a == 0.0);

  // Single hidden unit fed by obs[0]; action 0 = tanh(2 tanh(obs0) + 0.5).
  auto p = PolicyParams::zeros();
  p.params[0] = 1.0;                               // W1[0][0]
  const std::size_t w2 = 36 * 32 + 32;
  p.params[w2] = 2.0;                              // W2[0][0]
  p.params[w2 + 32 * 8] = 0.5;                     // b2[0]
  const auto a = act(p, obs);
  CHECK(a[0] == doctest::Approx(std::tanh(2.0 * std::tanh(0.7) + 0.5)));
  CHECK(a[1] == 0.0);

  const auto r = PolicyParams::random(5, 1.0);
  for (int i = 0; i < 50; ++i) {
    obs.fill(i * 0.04 - 1.0);
    for (double v : act(r, obs)) {
      REQUIRE(v > -1.0);
      REQUIRE(v < 1.0);
    }
  }
  CHECK(PolicyParams::random(5) == PolicyParams::random(5));
  CHECK_FALSE(PolicyParams::random(5) == PolicyParams::random(6));

  auto bad = PolicyParams::zeros();
  bad.params.pop_back();
  CHECK_THROWS_AS(validate(bad), InvalidConfig);
  bad = PolicyParams::zeros();
  bad.arch.activation = "relu";
  CHECK_THROWS_AS(validate(bad), InvalidConfig);
}

TEST_CASE("discounted return of the idle policy") {
  // With no actuation the sphere sits still at the palm centre, so every step
  // earns the same reward r and the return is r (1 - g^H) / (1 - g).
  const auto sim = v5_sim();
  const auto task = sphere_task();
  const auto cfg = task.episode(0, 0.0, 17);
  const double err_pos = std::hypot(cfg.goal.x, cfg.goal.y);
  const double r = -err_pos / 100.0;  // sphere: no angular term
  const int H = cfg.horizon;

  const auto res = rollout(PolicyParams::zeros().params, sim, cfg, 0.99);
  CHECK(res.steps == H);
  CHECK_FALSE(res.success);
  CHECK(res.discounted_return ==
        doctest::Approx(r * (1 - std::pow(0.99, H)) / (1 - 0.99)).epsilon(1e-9));

  const auto first = rollout(PolicyParams::zeros().params, sim, cfg, 0.0);
  CHECK(first.discounted_return == doctest::Approx(r));
  const auto undiscounted = rollout(PolicyParams::zeros().params, sim, cfg, 1.0);
  CHECK(undiscounted.discounted_return == doctest::Approx(H * r));
}

TEST_CASE("gamma zero keeps only the first reward") {
  const auto sim = v5_sim();
  const auto task = sphere_task();
  const auto policy = PolicyParams::random(3, 0.5);
  const auto cfg = task.episode(1, 0.5, 9);
  double first = 0.0;
  rollout(as_controller(policy), sim, cfg, 0.0,
          [&](int t, const env::SimState&, double rew) {
            if (t == 0) first = rew;
          });
  CHECK(rollout(policy.params, sim, cfg, 0.0).discounted_return == doctest::Approx(first));
}

TEST_CASE("observer sees every transition") {
  const auto sim = v5_sim();
  const auto cfg = sphere_task().episode(0, 0.2, 4);
  const auto policy = PolicyParams::random(8, 0.3);
  int calls = 0;
  double sum = 0.0;
  const auto res = rollout(as_controller(policy), sim, cfg, 1.0,
                           [&](int t, const env::SimState& s, double rew) {
                             CHECK(t == calls);
                             CHECK(s.step_count == t + 1);
                             ++calls;
                             sum += rew;
                           });
  CHECK(calls == res.steps);
  CHECK(sum == doctest::Approx(res.discounted_return));
}

TEST_CASE("return estimates") {
  const auto sim = v5_sim();
  TaskSet task = sphere_task();
  task.instances.push_back(env::make_object(env::Shape::Board, 1.0));
  const auto policy = PolicyParams::random(12, 0.2);
  const WorkerPool pool(2);

  const double one = estimate_return(policy, sim, task, 1, 0.3, 77, pool);
  const auto direct = rollout(policy.params, sim, task.episode(0, 0.3, 77), task.gamma);
  CHECK(one == doctest::Approx(direct.discounted_return));

  const auto rets = episode_returns(policy.params, sim, task, 0, 6, 0.3, 77, pool);
  REQUIRE(rets.size() == 6);
  const double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / 6.0;
  CHECK(estimate_return(policy, sim, task, 6, 0.3, 77, pool) == doctest::Approx(mean));
  // Episode i alternates instances.
  CHECK(task.episode(3, 0.0, 77).object.shape == env::Shape::Board);
  CHECK(task.episode(4, 0.0, 77).object.shape == env::Shape::Sphere);

  const WorkerPool serial(1);
  CHECK(estimate_return(policy, sim, task, 6, 0.3, 77, serial) ==
        estimate_return(policy, sim, task, 6, 0.3, 77, pool));
}

TEST_CASE("generations to threshold") {
  TrainReport r;
  r.initial_return = -5;
  r.best_return_curve = {-4, -3, -3, -1};
  CHECK(generations_to_threshold(r, -6) == 0);
  CHECK(generations_to_threshold(r, -3) == 2);
  CHECK(generations_to_threshold(r, -1) == 4);
  CHECK_FALSE(generations_to_threshold(r, 0).has_value());
}

TEST_CASE("evolution strategy") {
  EsOptions opts;
  SUBCASE("budget of one") {
    opts.budget = 1;
    const auto res = evolution_strategy(quadratic({1, 1}), {0, 0}, opts, 1);
    CHECK(res.report.generations_used == 1);
    CHECK(res.report.best_return_curve.size() == 1);
  }
  SUBCASE("quadratic surrogate") {
    const std::vector<double> centre(16, 0.1);
    opts.budget = 200;
    opts.window = 200;
    const auto res = evolution_strategy(quadratic(centre), std::vector<double>(16, 0.0), opts, 2);
    CHECK(res.report.initial_return == doctest::Approx(-0.16));
    CHECK(res.report.final_expected_return >= -1e-2);
    CHECK(quadratic(centre)({res.params})[0] == doctest::Approx(res.report.final_expected_return));
    for (std::size_t g = 1; g < res.report.best_return_curve.size(); ++g) {
      REQUIRE(res.report.best_return_curve[g] >= res.report.best_return_curve[g - 1]);
    }
  }
  SUBCASE("warm start at the optimum converges within the window") {
    const std::vector<double> centre(16, 0.3);
    opts.window = 20;
    const auto res = evolution_strategy(quadratic(centre), centre, opts, 3);
    CHECK(res.report.converged);
    CHECK(res.report.generations_used == 20);
    CHECK(res.params == centre);
  }
  SUBCASE("stop at a target") {
    opts.stop_at = -0.05;
    opts.budget = 500;
    const auto res = evolution_strategy(quadratic(std::vector<double>(16, 0.1)),
                                        std::vector<double>(16, 0.0), opts, 4);
    CHECK(res.report.final_expected_return >= -0.05);
    CHECK(generations_to_threshold(res.report, -0.05) == res.report.generations_used);
  }
  SUBCASE("reproducible") {
    const auto a = evolution_strategy(quadratic({1, 2, 3}), {0, 0, 0}, opts, 9);
    const auto b = evolution_strategy(quadratic({1, 2, 3}), {0, 0, 0}, opts, 9);
    CHECK(a.params == b.params);
    CHECK(a.report.best_return_curve == b.report.best_return_curve);
  }
  SUBCASE("invalid options") {
    opts.population = 7;
    CHECK_THROWS_AS(validate(opts), InvalidConfig);
    opts.population = 32;
    opts.elite = 32;
    CHECK_THROWS_AS(validate(opts), InvalidConfig);
    opts.elite = 8;
    opts.budget = 0;
    CHECK_THROWS_AS(validate(opts), InvalidConfig);
  }
}

TEST_CASE("training on the simulator") {
  const auto sim = v5_sim();
  const auto task = sphere_task();
  TrainingConfig cfg;
  cfg.es.budget = 3;
  cfg.episodes = 2;
  const WorkerPool one(1), two(2);
  const auto a = train(sim, task, nullptr, cfg, 5, one);
  const auto b = train(sim, task, nullptr, cfg, 5, two);
  CHECK(a.policy == b.policy);
  CHECK(a.report.best_return_curve == b.report.best_return_curve);
  CHECK(a.report.generations_used == 3);
  CHECK(a.report.final_expected_return >= a.report.initial_return);
  CHECK_NOTHROW(validate(a.policy));

  // Warm start on the same episode set: the starting fitness is the score the
  // first run already reported for its best policy.
  const auto c = train(sim, task, &a.policy, cfg, 5, one);
  CHECK(c.report.initial_return == doctest::Approx(a.report.final_expected_return));
  CHECK(c.report.final_expected_return >= c.report.initial_return);
}
