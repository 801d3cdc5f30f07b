#include <doctest.h>

#include <cmath>
#include <vector>

#include "m3d/burst.hpp"
#include "m3d/error.hpp"
#include "m3d/io.hpp"

using namespace m3d;

namespace {

GroupTrajectory from_counts(const std::vector<double>& counts) {
  GroupTrajectory t;
  for (const double c : counts) t.log_counts.push_back(std::log(c));
  t.finalize();
  return t;
}

GroupTrajectory exact(std::size_t ticks, FactorPair f, std::uint64_t seed, int m = 20) {
  Stream s(seed, 0, StreamDomain::test);
  GroupTrajectory t;
  t.action_id = std::to_string(seed);
  t.log_counts.push_back(0.0);
  for (std::size_t i = 0; i < ticks; ++i) {
    const auto plus = static_cast<std::int64_t>(s.below(static_cast<std::uint64_t>(m) + 1));
    const TickTally tally{static_cast<std::int64_t>(i), plus, m - plus};
    t.tallies.push_back(tally);
    t.log_counts.push_back(step_group_log(t.log_counts.back(), tally, f));
  }
  t.finalize();
  return t;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Stream& s) {
  Matrix x{rows, cols, std::vector<double>(rows * cols)};
  for (double& v : x.data) v = s.normal();
  return x;
}

std::vector<std::uint8_t> labels_of(const std::vector<double>& counts, std::size_t w) {
  return detect_bursts(from_counts(counts), w).labels;
}

}  // namespace

TEST_CASE("burst labels") {
  CHECK(labels_of({1, 2, 5, 2, 1}, 2) == std::vector<std::uint8_t>{0, 0, 1, 0, 0});
  CHECK(labels_of({3, 3, 3}, 1) == std::vector<std::uint8_t>{0, 0, 0});
  CHECK(labels_of({1, 2, 3, 4, 5, 6}, 1) == std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1});
  CHECK(labels_of({9, 1, 2, 1, 9, 9}, 1) == std::vector<std::uint8_t>{1, 0, 1, 0, 0, 0});
  CHECK_THROWS_AS(detect_bursts(from_counts({1, 2, 3}), 0), DomainError);
  CHECK_THROWS_AS(detect_bursts(from_counts({1, 2, 3, 4}), 2), DomainError);
}

TEST_CASE("burst labels are invariant under rescaling") {
  Stream s(1, 0, StreamDomain::test);
  std::vector<double> counts(200);
  for (double& c : counts) c = 1.0 + s.below(50);
  auto scaled = counts;
  for (double& c : scaled) c *= 17.25;
  CHECK(labels_of(counts, 3) == labels_of(scaled, 3));
}

TEST_CASE("per-tick upward factors") {
  const auto t = exact(30, {1.5, 1.2}, 2);
  const auto u = per_tick_log_upward_factors(t);
  CHECK(std::isnan(u[0]));
  CHECK(std::isnan(u[1]));
  for (std::size_t i = 2; i < u.size(); ++i)
    if (!std::isnan(u[i])) CHECK(u[i] == doctest::Approx(std::log(1.5)).epsilon(1e-9));
}

TEST_CASE("count dataset windows") {
  std::vector<double> counts;
  for (int i = 0; i < 12; ++i) counts.push_back(std::pow(2.0, i));
  const std::vector<GroupTrajectory> trajs{from_counts(counts)};
  const auto d = build_dataset(trajs, 3, FeatureKind::count, 1);
  REQUIRE(d.size() == 9);  // t = 2 .. 10
  CHECK(d.raw.row(0)[0] == doctest::Approx(1.0));
  CHECK(d.raw.row(0)[1] == doctest::Approx(2.0));
  CHECK(d.raw.row(0)[2] == doctest::Approx(4.0));
  CHECK(d.keys[0].tick == 2);
  CHECK(d.skipped == 2);
  for (std::size_t c = 0; c < 3; ++c)
    CHECK(d.features.row(0)[c] == doctest::Approx((d.raw.row(0)[c] - d.transform.mean[c]) / d.transform.scale[c]));
  // label is the burst at t + 1: only the final tick of a monotone series
  CHECK(d.labels.back() == 1);
  CHECK(d.labels.front() == 0);
}

TEST_CASE("factor dataset on exact trajectories is constant") {
  const std::vector<GroupTrajectory> trajs{exact(40, {1.5, 1.2}, 3), exact(40, {1.5, 1.2}, 4)};
  const auto d = build_dataset(trajs, 4, FeatureKind::factor, 2);
  REQUIRE(d.size() > 0);
  for (const double v : d.raw.data) CHECK(v == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("dataset errors and parallel agreement") {
  const std::vector<GroupTrajectory> shorts{from_counts({1, 2, 3, 2, 1})};
  CHECK_THROWS_AS(build_dataset(shorts, 10, FeatureKind::count, 1), InputError);
  CHECK_THROWS_AS(build_dataset(shorts, 1, FeatureKind::count, 1), ConfigError);
  CHECK_THROWS_AS(build_dataset(shorts, 2, FeatureKind::factor, 1), InputError);

  std::vector<GroupTrajectory> trajs;
  for (std::uint64_t i = 0; i < 12; ++i) trajs.push_back(exact(50, {1.1, 1.05}, 10 + i));
  for (const auto kind : {FeatureKind::count, FeatureKind::factor}) {
    const auto a = build_dataset(trajs, 5, kind, 2);
    const auto b = build_dataset_serial(trajs, 5, kind, 2);
    CHECK(a.raw.data == b.raw.data);
    CHECK(a.labels == b.labels);
    CHECK(a.skipped == b.skipped);
  }
}

TEST_CASE("standardization round trip") {
  Stream s(5, 0, StreamDomain::test);
  Matrix x = random_matrix(300, 4, s);
  for (std::size_t r = 0; r < x.rows; ++r) {
    x.row(r)[1] = 1e6 + 1e3 * x.row(r)[1];
    x.row(r)[3] = 2.0;  // constant column
  }
  const auto st = Standardizer::fit(x);
  const auto z = st.apply(x);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < z.rows; ++r) m += z.row(r)[c];
    m /= z.rows;
    for (std::size_t r = 0; r < z.rows; ++r) v += (z.row(r)[c] - m) * (z.row(r)[c] - m);
    v /= z.rows;
    CHECK(std::abs(m) < 1e-10);
    CHECK(std::abs(v - 1.0) < 1e-10);
  }
  CHECK(z.row(0)[3] == 0.0);
}

TEST_CASE("chronological split") {
  std::vector<GroupTrajectory> trajs;
  for (std::uint64_t i = 0; i < 3; ++i) trajs.push_back(exact(30, {1.1, 1.05}, 20 + i));
  const auto d = build_dataset(trajs, 3, FeatureKind::count, 1);
  const auto [train, test] = split_chronological(d, 0.7);
  CHECK(train.size() + test.size() == d.size());
  CHECK(train.size() == static_cast<std::size_t>(std::floor(0.7 * d.size())));
  std::int64_t last_train = 0;
  for (const auto& k : train.keys) last_train = std::max(last_train, k.tick);
  for (const auto& k : test.keys) CHECK(k.tick >= last_train);
  CHECK(test.transform.mean == train.transform.mean);
  CHECK_THROWS_AS(split_chronological(d, 1.0), ConfigError);
}

TEST_CASE("logistic gradient matches central differences") {
  Stream s(6, 0, StreamDomain::test);
  for (int batch = 0; batch < 5; ++batch) {
    const Matrix x = random_matrix(64, 5, s);
    std::vector<int> y(64);
    for (int& v : y) v = static_cast<int>(s.below(2));
    std::vector<double> w(5);
    for (double& v : w) v = s.normal();
    const double b = s.normal();
    const double l2 = 0.01;
    const auto g = logistic_gradient(x, y, w, b, l2);
    const double eps = 1e-5;
    for (std::size_t c = 0; c <= 5; ++c) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (c < 5) {
        wp[c] += eps;
        wm[c] -= eps;
      } else {
        bp += eps;
        bm -= eps;
      }
      const double fd = (logistic_loss(x, y, wp, bp, l2) - logistic_loss(x, y, wm, bm, l2)) / (2 * eps);
      CHECK(std::abs(fd - g[c]) < 1e-6);
    }
  }
}

TEST_CASE("logistic regression training") {
  ClassifierModel zero;
  zero.weights = {0.0, 0.0};
  CHECK(predict_probability(zero, std::vector<double>{3.0, -7.0}) == 0.5);

  Matrix x{40, 1, {}};
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    x.data.push_back(i < 20 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i);
    y.push_back(i < 20 ? 0 : 1);
  }
  TrainOptions opt;
  opt.l2 = 1e-6;
  const auto model = train_logreg(x, y, opt);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows; ++r)
    correct += (predict_probability(model, {x.row(r), 1}) >= 0.5) == (y[r] == 1);
  CHECK(correct == x.rows);
  for (std::size_t i = 1; i < model.loss_history.size(); ++i)
    CHECK(model.loss_history[i] <= model.loss_history[i - 1] + 1e-12);

  CHECK_THROWS_AS(train_logreg(x, std::vector<int>(40, 1), opt), InputError);
  CHECK_THROWS_AS(train_logreg(Matrix{0, 1, {}}, std::vector<int>{}, opt), InputError);
}

TEST_CASE("logistic loss is convex: different starts agree") {
  Stream s(7, 0, StreamDomain::test);
  const Matrix x = random_matrix(200, 4, s);
  std::vector<int> y(200);
  for (std::size_t r = 0; r < 200; ++r) y[r] = x.row(r)[0] + 0.5 * s.normal() > 0 ? 1 : 0;
  TrainOptions a, b;
  a.l2 = b.l2 = 1e-2;
  b.init = {5.0, -3.0, 2.0, 1.0, -4.0};
  const auto ma = train_logreg(x, y, a);
  const auto mb = train_logreg(x, y, b);
  CHECK(std::abs(ma.final_loss - mb.final_loss) < 1e-6);
}

TEST_CASE("metrics") {
  const auto m = metrics_from_counts(2, 2, 10, 2);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == 0.5);
  const auto perfect = metrics_from_counts(3, 0, 5, 0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);
  const auto none = metrics_from_counts(0, 0, 5, 3);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("window sweep") {
  SynthOptions opt;
  opt.scenario = Scenario::burst_injected;
  opt.sim.users = 20;
  opt.sim.actions = 20;
  opt.sim.max_ticks = 80;
  opt.sim.seed = 3;
  opt.out_degree = 3;
  const auto corpus = synth_corpus(opt);
  const auto one = window_sweep(corpus.trajectories, {3}, FeatureKind::factor);
  CHECK(one.rows.size() == 1);
  const auto dup = window_sweep(corpus.trajectories, {4, 3, 4}, FeatureKind::count);
  CHECK(dup.rows.size() == 2);
  CHECK(dup.duplicates_removed == 1);
  CHECK(dup.rows[0].k == 3);
  for (const auto& r : dup.rows) {
    CHECK(r.ok);
    for (const double v : {r.metrics.precision, r.metrics.recall, r.metrics.f1, r.metrics.accuracy}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const auto failing = window_sweep(corpus.trajectories, {1000}, FeatureKind::count);
  CHECK_FALSE(failing.rows[0].ok);
}
