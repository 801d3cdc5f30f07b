#include <doctest.h>

#include <cmath>
#include <vector>

#include "m3d/dynamics.hpp"
#include "m3d/error.hpp"
#include "m3d/fitting.hpp"

using namespace m3d;

namespace {

constexpr double kE = 2.718281828459045;
constexpr double kPi = 3.14159265358979323846;

/// Composite Simpson in u = sqrt(t); independent of the library quadrature.
double simpson_density(double tau, double dsq, double lambda, double N) {
  const double L = std::log(N);
  auto f = [&](double u) {
    // u -> 0 limit: nonzero only when ln N = 0
    if (u <= 0.0) return L == 0.0 ? 2.0 * lambda / (N * std::sqrt(2.0 * kPi * dsq)) : 0.0;
    const double t = u * u;
    const double z = L - tau * t;
    return 2.0 * u * lambda * std::exp(-lambda * t) / (N * std::sqrt(2.0 * kPi * dsq * t)) *
           std::exp(-z * z / (2.0 * dsq * t));
  };
  const double hi = std::sqrt(60.0 / lambda + 4.0 * std::abs(L) / tau + 50.0);
  const int n = 400000;
  const double h = hi / n;
  double s = f(0.0) + f(hi);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Trajectory generated exactly by the group model from the given tallies.
GroupTrajectory exact_trajectory(const std::vector<std::pair<int, int>>& tallies, FactorPair f) {
  GroupTrajectory t;
  t.log_counts.push_back(0.0);
  for (std::size_t i = 0; i < tallies.size(); ++i) {
    const TickTally tally{static_cast<std::int64_t>(i), tallies[i].first, tallies[i].second};
    t.tallies.push_back(tally);
    t.log_counts.push_back(step_group_log(t.log_counts.back(), tally, f));
  }
  t.finalize();
  return t;
}

std::vector<std::pair<int, int>> random_tallies(int m, std::size_t n, std::uint64_t seed) {
  Stream s(seed, 0, StreamDomain::test);
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int plus = static_cast<int>(s.below(static_cast<std::uint64_t>(m) + 1));
    out.emplace_back(plus, m - plus);
  }
  return out;
}

}  // namespace

TEST_CASE("micro_to_meso") {
  const auto p = micro_to_meso(IndividualModel({0.5, 0.5}));
  CHECK(p.tau == 1.0);
  CHECK(p.delta_sq == 0.5);
  CHECK_THROWS_AS(micro_to_meso(IndividualModel({1.0, 0.0})), NumericalError);
  const auto h = micro_to_meso(IndividualModel::homogeneous(100, 0.3));
  CHECK(h.tau == doctest::Approx(30.0));
  CHECK(h.delta_sq == doctest::Approx(21.0));
}

TEST_CASE("micro_to_meso is additive over disjoint user sets") {
  const std::vector<double> a{0.1, 0.25, 0.7}, b{0.05, 0.5};
  std::vector<double> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const auto pa = micro_to_meso(IndividualModel(a));
  const auto pb = micro_to_meso(IndividualModel(b));
  const auto pab = micro_to_meso(IndividualModel(ab));
  CHECK(pab.tau == doctest::Approx(pa.tau + pb.tau).epsilon(1e-15));
  CHECK(pab.delta_sq == doctest::Approx(pa.delta_sq + pb.delta_sq).epsilon(1e-15));
}

TEST_CASE("meso_to_macro closed forms") {
  const auto m = meso_to_macro({1.0, 1.0}, 0.5);
  CHECK(m.alpha == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  CHECK(m.C == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-15));
  // sqrt(1 + 2 lambda) = 1 + lambda + O(lambda^2)
  CHECK(meso_to_macro({1.0, 1.0}, 1e-6).alpha == doctest::Approx(-1.0 - 1e-6).epsilon(1e-11));
  CHECK_NOTHROW(meso_to_macro({1.0, 1.0}, 0.008));
  CHECK(nonradical_exponent({1.0, 1.0}, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("quadrature matches an independent Simpson rule") {
  for (const double N : {1.0, 3.0, 50.0, 2000.0}) {
    const double lib = powerlaw_density_numeric({1.0, 1.0}, 0.5, N);
    CHECK(lib == doctest::Approx(simpson_density(1.0, 1.0, 0.5, N)).epsilon(1e-6));
  }
  CHECK(powerlaw_density_numeric({0.5, 2.0}, 0.1, 777.0) ==
        doctest::Approx(simpson_density(0.5, 2.0, 0.1, 777.0)).epsilon(1e-6));
}

TEST_CASE("quadrature density at N = 1 is finite and positive") {
  const double d = powerlaw_density_numeric({1.0, 1.0}, 0.5, 1.0);
  CHECK(std::isfinite(d));
  CHECK(d > 0.0);
}

TEST_CASE("quadrature log-log slope and level") {
  std::vector<double> x, y;
  for (int i = 0; i <= 30; ++i) {
    const double lnN = std::log(10.0) + (std::log(1e4) - std::log(10.0)) * i / 30.0;
    x.push_back(lnN);
    y.push_back(std::log(powerlaw_density_numeric({1.0, 1.0}, 0.5, std::exp(lnN))));
  }
  CHECK(std::abs(least_squares(x, y).slope + std::sqrt(2.0)) < 0.01);

  const auto pl = meso_to_macro({2.0, 0.5}, 0.1);
  for (const double N : {1e2, 1e3, 1e5}) {
    const double d = powerlaw_density_numeric({2.0, 0.5}, 0.1, N);
    CHECK(d == doctest::Approx(pl.C * std::pow(N, pl.alpha)).epsilon(1e-3));
    const double ratio = powerlaw_density_numeric({2.0, 0.5}, 0.1, 2 * N) / d;
    CHECK(ratio == doctest::Approx(std::pow(2.0, pl.alpha)).epsilon(1e-4));
  }
}

TEST_CASE("winner threshold") {
  CHECK(winner_threshold(99, 0.5) == doctest::Approx(0.03).epsilon(1e-15));
  for (const std::size_t m : {1u, 2u, 10u, 100u, 100000u})
    for (const double lambda : {0.008, 0.1, 0.5, 3.0}) {
      CHECK(winner_threshold(m, lambda) > 1.0 / static_cast<double>(m));
      CHECK(winner_threshold(m + 1, lambda) < winner_threshold(m, lambda));
      CHECK(winner_threshold(m, lambda * 1.1) > winner_threshold(m, lambda));
    }
  // above the threshold both exponent forms are negative
  const auto meso = micro_to_meso(IndividualModel::homogeneous(100, 0.05));
  CHECK(0.05 > winner_threshold(100, 0.5));
  CHECK(meso_to_macro(meso, 0.5).alpha < 0.0);
  CHECK(nonradical_exponent(meso, 0.5) < 0.0);
}

TEST_CASE("mu estimator") {
  ObservedActions obs;
  // v follows a, b, c
  obs.add_edge("v", "a");
  obs.add_edge("v", "b");
  obs.add_edge("v", "c");
  obs.add_edge("w", "a");
  obs.add_edge("v", "v");
  CHECK(obs.out_neighbors(*obs.user_index("v")).size() == 3);
  for (int t = 0; t < 2; ++t) obs.add_event(t, "v", "z", 1);
  for (int t = 0; t < 10; ++t) obs.add_event(t, t % 2 ? "a" : "b", "z", 1);
  obs.add_event(3, "c", "z", -1);
  const auto e = estimate_mu(obs, "z", "v");
  CHECK(e.value == doctest::Approx(0.2));
  CHECK(e.status == MuEstimate::Status::ok);

  for (int t = 0; t < 7; ++t) obs.add_event(t, "a", "y", 1);
  CHECK(estimate_mu(obs, "y", "w").value == 0.0);

  for (int t = 0; t < 3; ++t) obs.add_event(t, "w", "x", 1);
  for (int t = 0; t < 2; ++t) obs.add_event(t, "a", "x", 1);
  const auto clamped = estimate_mu(obs, "x", "w");
  CHECK(clamped.value == 1.0);
  CHECK(clamped.status == MuEstimate::Status::clamped);

  const auto unobserved = estimate_mu(obs, "z", "a");
  CHECK(unobserved.status == MuEstimate::Status::unobserved);
  CHECK(estimate_individual_model(obs, "z", 0.05).model.mu(*obs.user_index("a")) == 0.05);
  CHECK_THROWS_AS(estimate_mu(obs, "z", "nobody"), InputError);
  CHECK_THROWS_AS(obs.add_event(0, "nobody", "z", 1), InputError);
  CHECK_THROWS_AS(obs.add_event(-1, "v", "z", 1), InputError);
}

TEST_CASE("mu estimates always lie in [0, 1]") {
  Stream s(5, 0, StreamDomain::test);
  ObservedActions obs;
  for (int v = 0; v < 30; ++v)
    for (int k = 0; k < 3; ++k) {
      const auto u = s.below(30);
      if (u != static_cast<std::uint64_t>(v)) obs.add_edge("u" + std::to_string(v), "u" + std::to_string(u));
    }
  for (int i = 0; i < 300; ++i)
    obs.add_event(static_cast<std::int64_t>(s.below(10)), "u" + std::to_string(s.below(30)), "z", 1);
  for (const auto& user : obs.users()) {
    const double mu = estimate_mu(obs, "z", user).value;
    CHECK(mu >= 0.0);
    CHECK(mu <= 1.0);
  }
}

TEST_CASE("factor pair: decoupled system") {
  GroupTrajectory t;
  t.log_counts = {0.0, 1.0, 0.5};
  t.tallies = {{0, 1, 0}, {1, 0, 1}};
  const auto f = estimate_factors_pair(t, 0, 1);
  REQUIRE(f.has_value());
  CHECK(f->up == doctest::Approx(kE).epsilon(1e-15));
  CHECK(f->down == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
}

TEST_CASE("factor pair: singular system") {
  GroupTrajectory t;
  t.log_counts = {0.0, 0.3, 0.6};
  t.tallies = {{0, 2, 4}, {1, 1, 2}};
  CHECK_FALSE(estimate_factors_pair(t, 0, 1).has_value());
  CHECK_THROWS_AS(estimate_factors_pair(t, 1, 1), DomainError);
  CHECK_THROWS_AS(estimate_factors_pair(t, 0, 2), DomainError);
}

TEST_CASE("factor recovery on exact trajectories") {
  const auto t = exact_trajectory(random_tallies(20, 30, 1), {1.5, 1.2});
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = i + 1; j < 30; ++j)
      if (const auto f = estimate_factors_pair(t, i, j)) {
        REQUIRE(f->up == doctest::Approx(1.5).epsilon(1e-10));
        REQUIRE(f->down == doctest::Approx(1.2).epsilon(1e-10));
      }
  const auto e = estimate_factors(t, 0, 10);
  CHECK(std::abs(e.factors.up / 1.5 - 1.0) < 1e-9);
  CHECK(std::abs(e.factors.down / 1.2 - 1.0) < 1e-9);
  CHECK(e.pairs_used + e.pairs_skipped == 45);

  const auto ee = estimate_factors(exact_trajectory(random_tallies(20, 10, 2), {kE, kE}), 0, 10);
  CHECK(ee.factors.up == doctest::Approx(kE).epsilon(1e-12));
  CHECK(ee.factors.down == doctest::Approx(kE).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_factors(t, 0, 1), NumericalError);
  // every pair singular
  CHECK_THROWS_AS(estimate_factors(exact_trajectory({{2, 4}, {1, 2}, {3, 6}}, {1.5, 1.2}), 0, 3),
                  NumericalError);
}

TEST_CASE("forward prediction") {
  CHECK(predict_group_next(100.0, {0, 5, 5}, {kE, kE}) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(predict_group_next(42.0, {0, 7, 3}, {1.0, 1.0}) == doctest::Approx(42.0).epsilon(1e-15));
  const auto t = exact_trajectory(random_tallies(20, 40, 3), {1.5, 1.2});
  const auto f = estimate_factors(t, 0, 28).factors;
  const auto tail = forecast_log_tail(t, f, 28);
  const auto one = one_step_log_forecasts(t, f, 28);
  REQUIRE(tail.size() == 12);
  REQUIRE(one.size() == 12);
  for (std::size_t j = 0; j < tail.size(); ++j) {
    CHECK(tail[j] == doctest::Approx(t.log_counts[29 + j]).epsilon(1e-9));
    CHECK(one[j] == doctest::Approx(t.log_counts[29 + j]).epsilon(1e-9));
  }
}
