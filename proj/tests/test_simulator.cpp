#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <numeric>

#include "m3d/dynamics.hpp"
#include "m3d/error.hpp"
#include "m3d/simulator.hpp"

using namespace m3d;

namespace {
constexpr double kE = 2.718281828459045;

bool same(const EnsembleResult& a, const EnsembleResult& b) {
  if (a.trajectories.size() != b.trajectories.size()) return false;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    const auto& x = a.trajectories[i];
    const auto& y = b.trajectories[i];
    if (x.action_id != y.action_id || x.log_counts != y.log_counts || x.log_total != y.log_total)
      return false;
  }
  return a.failures.size() == b.failures.size();
}
}  // namespace

TEST_CASE("draw_tick degenerate probabilities") {
  Stream s(1, 0, StreamDomain::test);
  const TickTally all = draw_tick(IndividualModel::homogeneous(5, 1.0), s, 0);
  CHECK(all.y_plus == 5);
  CHECK(all.y_minus == 0);
  const TickTally none = draw_tick(IndividualModel::homogeneous(5, 0.0), s, 0);
  CHECK(none.y_plus == 0);
  CHECK(none.y_minus == 5);
}

TEST_CASE("draw_tick law of large numbers") {
  Stream s(42, 0, StreamDomain::test);
  const std::size_t m = 100000;
  const TickTally t = draw_tick(IndividualModel::homogeneous(m, 0.3), s, 0);
  // 3 sigma of the binomial proportion is 0.0043
  CHECK(std::abs(static_cast<double>(t.y_plus) / m - 0.3) < 0.005);
  CHECK(t.users() == static_cast<std::int64_t>(m));
}

TEST_CASE("draw_tick reports adopters without changing the draw") {
  const auto model = IndividualModel::homogeneous(200, 0.4);
  Stream a(3, 1), b(3, 1);
  std::vector<std::uint32_t> adopters;
  const TickTally x = draw_tick(model, a, 0);
  const TickTally y = draw_tick(model, b, 0, &adopters);
  CHECK(x.y_plus == y.y_plus);
  CHECK(adopters.size() == static_cast<std::size_t>(y.y_plus));
}

TEST_CASE("step_group examples") {
  CHECK(step_group(1.0, {0, 3, 1}, {kE, kE}) == doctest::Approx(7.38905609893065).epsilon(1e-14));
  CHECK(step_group(10.0, {0, 0, 0}, {1.7, 0.3}) == doctest::Approx(10.0).epsilon(1e-15));
  // 2 * 1.5^2 / 1.2^3 evaluated directly
  CHECK(step_group(2.0, {0, 2, 3}, {1.5, 1.2}) == doctest::Approx(2.604166666666667).epsilon(1e-13));
}

TEST_CASE("step_group agrees with naive arithmetic") {
  Stream s(9, 0, StreamDomain::test);
  for (int i = 0; i < 2000; ++i) {
    const double n = 0.01 + 100.0 * s.uniform();
    const double up = 0.5 + 2.0 * s.uniform();
    const double down = 0.5 + 2.0 * s.uniform();
    const auto yp = static_cast<std::int64_t>(s.below(20));
    const auto ym = static_cast<std::int64_t>(s.below(20));
    const double naive = n * std::pow(up, static_cast<double>(yp)) / std::pow(down, static_cast<double>(ym));
    const double logged = step_group(n, {0, yp, ym}, {up, down});
    REQUIRE(std::abs(logged - naive) <= 1e-12 * naive);
  }
}

TEST_CASE("step_group overflow names the tick") {
  try {
    step_group(1e300, {5, 100, 0}, {kE, kE});
    FAIL("expected overflow");
  } catch (const OverflowError& e) {
    CHECK(e.tick() == 5);
    CHECK(std::string(e.what()).find("tick 5") != std::string::npos);
  }
  CHECK_THROWS_AS(step_group(1e-300, {2, 0, 1000}, {kE, kE}), OverflowError);
}

TEST_CASE("forced single step") {
  SimulationConfig c;
  c.users = 2;
  c.mu = HomogeneousMu{1.0};
  c.max_ticks = 1;
  c.actions = 1;
  const auto traj = simulate_action(c, resolve_model(c), 0);
  REQUIRE(traj.length() == 2);
  CHECK(traj.counts()[0] == 1.0);
  CHECK(traj.counts()[1] == doctest::Approx(kE * kE).epsilon(1e-14));
  CHECK(traj.total() == doctest::Approx(1.0 + kE * kE).epsilon(1e-14));
}

TEST_CASE("duration mean follows the rounded-up exponential") {
  SimulationConfig c;
  c.users = 1;
  c.lambda = 0.1;
  c.max_ticks = 1000000;
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Stream s(c.seed, static_cast<std::uint64_t>(i));
    sum += static_cast<double>(draw_duration(c.lambda, c.max_ticks, s));
  }
  // ceil of Exp(0.1) is geometric on {1,2,...} with success 1 - e^-0.1:
  // mean 1/(1 - e^-0.1) = 10.5083, sd sqrt(e^-0.1)/(1 - e^-0.1) = 9.9916.
  const double mean = 1.0 / (1.0 - std::exp(-0.1));
  const double sd = std::sqrt(std::exp(-0.1)) / (1.0 - std::exp(-0.1));
  CHECK(std::abs(sum / n - mean) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("tallies conserve the user count") {
  SimulationConfig c;
  c.users = 37;
  c.mu = UniformMu{0.1, 0.9};
  c.lambda = 0.05;
  c.factors = {1.01, 1.01};
  c.actions = 20;
  for (const auto& t : simulate_ensemble(c).trajectories) {
    CHECK(t.tallies.size() + 1 == t.length());
    for (const auto& tally : t.tallies) REQUIRE(tally.users() == 37);
    CHECK(t.log_counts[0] == 0.0);
  }
}

TEST_CASE("ensemble is deterministic across thread counts") {
  SimulationConfig c;
  c.users = 100;
  c.mu = HomogeneousMu{0.5};
  c.lambda = 0.5;
  c.actions = 500;
  c.seed = 11;
  const auto model = resolve_model(c);
  const auto serial = simulate_ensemble_serial(c, model);
  const int saved = omp_get_max_threads();
  for (const int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    CHECK(same(serial, simulate_ensemble(c, model)));
  }
  omp_set_num_threads(saved);
  CHECK(same(simulate_ensemble(c), simulate_ensemble(c)));

  c.actions = 1;
  const auto single = simulate_ensemble(c, model);
  REQUIRE(single.trajectories.size() == 1);
  CHECK(single.trajectories[0].log_counts == simulate_action(c, model, 0).log_counts);
}

TEST_CASE("ensemble records overflowing actions") {
  SimulationConfig c;
  c.users = 1000;
  c.mu = HomogeneousMu{1.0};
  c.lambda = 0.001;
  c.max_ticks = 5;
  c.actions = 3;
  const auto r = simulate_ensemble(c);
  CHECK(r.trajectories.empty());
  REQUIRE(r.failures.size() == 3);
  CHECK(r.failures[1].action_id == 1);
}

TEST_CASE("horizon draws: parallel equals serial") {
  const auto model = IndividualModel::homogeneous(50, 0.2);
  const auto a = log_counts_at_horizon(model, {kE, kE}, 30, 200, 5);
  const auto b = log_counts_at_horizon_serial(model, {kE, kE}, 30, 200, 5);
  CHECK(a == b);
}

TEST_CASE("ln n(t) moments under the +-1 update") {
  // Each tick adds sum_v x_v with x_v = +-1, so ln n(t) has mean t(2 tau - m)
  // and variance 4 t delta^2 when U = D = e.
  SimulationConfig c;
  c.users = 1000;
  c.mu = UniformMu{0.0, 0.1};
  c.seed = 3;
  const auto model = resolve_model(c);
  const auto meso = micro_to_meso(model);
  const std::int64_t t = 200;
  const std::size_t n = 400;
  const auto logs = log_counts_at_horizon(model, {kE, kE}, t, n, 3);
  const double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
  double var = 0.0;
  for (const double x : logs) var += (x - mean) * (x - mean);
  var /= n - 1;
  const double mu_exp = t * (2.0 * meso.tau - 1000.0);
  const double var_exp = 4.0 * t * meso.delta_sq;
  CHECK(std::abs(mean - mu_exp) < 4.0 * std::sqrt(var_exp / n));
  CHECK(std::abs(var - var_exp) < 4.0 * var_exp * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("config validation") {
  SimulationConfig c;
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_ticks = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.actions = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.mu = ExplicitMu{{0.5}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(IndividualModel({0.5, 1.5}), ConfigError);
}
