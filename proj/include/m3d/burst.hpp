#pragma once

// Information-burst labelling and one-step-ahead burst prediction from
// sliding-window features, with a small native logistic regression.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m3d/simulator.hpp"

namespace m3d {

struct BurstLabelSeries {
  std::string action_id;
  std::vector<std::uint8_t> labels;  // 1 = burst at that tick
  std::size_t w = 1;
};

/// labels[t] = 1 iff values[t] > values[t'] for every t' != t in
/// [t - w, t + w], the window truncated at the series ends.
std::vector<std::uint8_t> strict_max_labels(std::span<const double> values, std::size_t w);

/// Labels on ln n (same order as n). Throws DomainError unless w >= 1 and
/// the trajectory is longer than 2w ticks.
BurstLabelSeries detect_bursts(const GroupTrajectory& traj, std::size_t w);

enum class FeatureKind { factor, count };

const char* to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);

/// ln U-hat per tick. Entry t' solves the transitions into t' - 1 and t'
/// jointly; singular pairs carry the previous value forward. NaN until the
/// first non-singular pair.
std::vector<double> per_tick_log_upward_factors(const GroupTrajectory& traj);

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

/// Column standardisation (mean 0, variance 1). Constant columns are centred
/// and left unscaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct RowKey {
  std::size_t action = 0;  // index into the trajectory list
  std::int64_t tick = 0;   // features end at this tick; label is for tick + 1
};

struct BurstDataset {
  FeatureKind kind = FeatureKind::factor;
  std::size_t k = 0;
  Matrix raw;       // unstandardised features
  Matrix features;  // standardised with `transform`
  std::vector<int> labels;
  std::vector<RowKey> keys;
  Standardizer transform;
  std::size_t skipped = 0;  // candidate rows dropped for missing history

  std::size_t size() const { return labels.size(); }
};

/// One row per (action, t) with a full k-tick history and a tick t + 1 to
/// label. Factor features are U-hat (exp of per_tick_log_upward_factors) over
/// [t - k + 1, t]; count features are n over the same window. Parallel over actions; rows are
/// ordered by action then tick. Throws InputError when no row can be built.
BurstDataset build_dataset(std::span<const GroupTrajectory> trajs, std::size_t k,
                           FeatureKind kind, std::size_t w);
BurstDataset build_dataset_serial(std::span<const GroupTrajectory> trajs, std::size_t k,
                                  FeatureKind kind, std::size_t w);

/// Rows split by tick: the earliest `train_fraction` of rows (stable order by
/// tick) train, the rest test. Both halves are restandardised with the
/// training transform.
std::pair<BurstDataset, BurstDataset> split_chronological(const BurstDataset& data,
                                                          double train_fraction);

struct ClassifierModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 0.0;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

/// Mean logistic loss plus (l2 / 2) |w|^2; labels in {0, 1}.
double logistic_loss(const Matrix& x, std::span<const int> labels, std::span<const double> w,
                     double bias, double l2);

/// Gradient of logistic_loss: grad_w (size cols) then d/d bias (last entry).
std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> labels,
                                      std::span<const double> w, double bias, double l2);

double predict_probability(const ClassifierModel& model, std::span<const double> row);

struct TrainOptions {
  double l2 = 1e-4;
  std::size_t max_iter = 5000;
  double tol = 1e-6;
  std::vector<double> init;  // optional starting point: weights then bias
};

/// Gradient descent with Armijo backtracking until |grad| < tol. Throws
/// InputError for an empty or single-class dataset.
ClassifierModel train_logreg(const Matrix& x, std::span<const int> labels,
                             const TrainOptions& options = {});
ClassifierModel train_logreg(const BurstDataset& data, const TrainOptions& options = {});

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

/// Threshold 0.5.
Metrics evaluate(const ClassifierModel& model, const BurstDataset& data);

struct SweepRow {
  std::size_t k = 0;
  bool ok = false;
  Metrics metrics;
  std::string error;
};

struct SweepResult {
  FeatureKind kind = FeatureKind::factor;
  std::vector<SweepRow> rows;  // ascending k
  std::size_t duplicates_removed = 0;
};

struct SweepOptions {
  std::size_t w = 3;
  double train_fraction = 0.7;
  TrainOptions train;
};

/// Per k: build, split chronologically, train, evaluate on the test rows.
/// Failures are recorded per row and the sweep continues.
SweepResult window_sweep(std::span<const GroupTrajectory> trajs,
                         std::vector<std::size_t> k_values, FeatureKind kind,
                         const SweepOptions& options = {});

}  // namespace m3d
