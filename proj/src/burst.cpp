#include "m3d/burst.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "m3d/error.hpp"

namespace m3d {

std::vector<std::uint8_t> strict_max_labels(std::span<const double> values, std::size_t w) {
  const std::size_t n = values.size();
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= w ? t - w : 0;
    const std::size_t hi = std::min(n - 1, t + w);
    bool peak = true;
    for (std::size_t u = lo; u <= hi && peak; ++u)
      if (u != t && !(values[t] > values[u])) peak = false;
    labels[t] = peak ? 1 : 0;
  }
  return labels;
}

BurstLabelSeries detect_bursts(const GroupTrajectory& traj, std::size_t w) {
  if (w < 1) throw DomainError("burst half-window must be at least 1 tick");
  if (traj.length() <= 2 * w)
    throw DomainError("trajectory " + traj.action_id + " has " + std::to_string(traj.length()) +
                      " ticks; burst detection needs more than " + std::to_string(2 * w));
  return {traj.action_id, strict_max_labels(traj.log_counts, w), w};
}

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::factor ? "factor" : "count";
}

FeatureKind parse_feature_kind(const std::string& text) {
  if (text == "factor") return FeatureKind::factor;
  if (text == "count") return FeatureKind::count;
  throw ConfigError("unknown feature kind '" + text + "' (expected factor or count)");
}

std::vector<double> per_tick_log_upward_factors(const GroupTrajectory& traj) {
  const std::size_t n = traj.length();
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  double carry = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = 2; t < n && t - 1 < traj.tallies.size(); ++t) {
    const TickTally& a = traj.tallies[t - 2];
    const TickTally& b = traj.tallies[t - 1];
    const double p1 = static_cast<double>(a.y_plus), m1 = static_cast<double>(a.y_minus);
    const double p2 = static_cast<double>(b.y_plus), m2 = static_cast<double>(b.y_minus);
    const double det = p2 * m1 - p1 * m2;
    if (det != 0.0) {
      const double d1 = traj.log_counts[t - 1] - traj.log_counts[t - 2];
      const double d2 = traj.log_counts[t] - traj.log_counts[t - 1];
      carry = (d2 * m1 - d1 * m2) / det;
    }
    out[t] = carry;
  }
  return out;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 1.0);
  if (x.rows == 0) return s;
  const auto n = static_cast<double>(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += x.row(r)[c];
  for (double& m : s.mean) m /= n;
  std::vector<double> var(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = x.row(r)[c] - s.mean[c];
      var[c] += d * d;
    }
  for (std::size_t c = 0; c < x.cols; ++c) {
    const double sd = std::sqrt(var[c] / n);
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.row(r)[c] = (out.row(r)[c] - mean[c]) / scale[c];
  return out;
}

namespace {

struct ActionRows {
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<std::int64_t> ticks;
  std::size_t skipped = 0;
};

ActionRows rows_for(const GroupTrajectory& traj, std::size_t k, FeatureKind kind,
                    std::size_t w) {
  ActionRows out;
  const std::size_t n = traj.length();
  if (n < 2) return out;
  const std::size_t candidates = n - 1;  // t = 0 .. n-2 each has a tick t+1
  if (n <= 2 * w) {
    out.skipped = candidates;
    return out;
  }
  const std::vector<std::uint8_t> labels = strict_max_labels(traj.log_counts, w);

  std::vector<double> series;
  if (kind == FeatureKind::factor) {
    if (traj.tallies.size() + 1 < n)
      throw InputError("factor features need tallies for trajectory " + traj.action_id);
    series = per_tick_log_upward_factors(traj);
    for (double& v : series) v = std::exp(v);
  } else {
    series.reserve(n);
    for (const double lc : traj.log_counts) series.push_back(std::exp(lc));
  }

  for (std::size_t t = 0; t + 1 < n; ++t) {
    if (t + 1 < k) {
      ++out.skipped;
      continue;
    }
    const std::size_t first = t + 1 - k;
    bool finite = true;
    for (std::size_t u = first; u <= t && finite; ++u) finite = std::isfinite(series[u]);
    if (!finite) {
      ++out.skipped;
      continue;
    }
    out.features.insert(out.features.end(), series.begin() + static_cast<std::ptrdiff_t>(first),
                        series.begin() + static_cast<std::ptrdiff_t>(t + 1));
    out.labels.push_back(labels[t + 1]);
    out.ticks.push_back(static_cast<std::int64_t>(t));
  }
  return out;
}

BurstDataset assemble(std::vector<ActionRows>& parts, std::size_t k, FeatureKind kind) {
  BurstDataset data;
  data.kind = kind;
  data.k = k;
  data.raw.cols = k;
  for (std::size_t a = 0; a < parts.size(); ++a) {
    ActionRows& p = parts[a];
    data.raw.data.insert(data.raw.data.end(), p.features.begin(), p.features.end());
    data.labels.insert(data.labels.end(), p.labels.begin(), p.labels.end());
    for (const std::int64_t t : p.ticks) data.keys.push_back({a, t});
    data.skipped += p.skipped;
  }
  data.raw.rows = data.labels.size();
  if (data.raw.rows == 0)
    throw InputError("burst dataset is empty: no trajectory has a full " + std::to_string(k) +
                     "-tick history");
  data.transform = Standardizer::fit(data.raw);
  data.features = data.transform.apply(data.raw);
  return data;
}

void check_k(std::size_t k) {
  if (k < 2) throw ConfigError("feature window k must be at least 2");
}

}  // namespace

BurstDataset build_dataset(std::span<const GroupTrajectory> trajs, std::size_t k,
                           FeatureKind kind, std::size_t w) {
  check_k(k);
  std::vector<ActionRows> parts(trajs.size());
  const auto n = static_cast<std::int64_t>(trajs.size());
  std::vector<std::string> errors(trajs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(i);
    try {
      parts[a] = rows_for(trajs[a], k, kind, w);
    } catch (const std::exception& e) {
      errors[a] = e.what();
    }
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw InputError(e);
  return assemble(parts, k, kind);
}

BurstDataset build_dataset_serial(std::span<const GroupTrajectory> trajs, std::size_t k,
                                  FeatureKind kind, std::size_t w) {
  check_k(k);
  std::vector<ActionRows> parts;
  parts.reserve(trajs.size());
  for (const GroupTrajectory& traj : trajs) parts.push_back(rows_for(traj, k, kind, w));
  return assemble(parts, k, kind);
}

std::pair<BurstDataset, BurstDataset> split_chronological(const BurstDataset& data,
                                                          double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.keys[a].tick < data.keys[b].tick;
  });
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(order.size())));

  auto take = [&](std::size_t begin, std::size_t end) {
    BurstDataset part;
    part.kind = data.kind;
    part.k = data.k;
    part.raw.cols = data.raw.cols;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = order[i];
      part.raw.data.insert(part.raw.data.end(), data.raw.row(r), data.raw.row(r) + data.raw.cols);
      part.labels.push_back(data.labels[r]);
      part.keys.push_back(data.keys[r]);
    }
    part.raw.rows = part.labels.size();
    return part;
  };
  BurstDataset train = take(0, cut);
  BurstDataset test = take(cut, order.size());
  train.transform = Standardizer::fit(train.raw);
  test.transform = train.transform;
  train.features = train.transform.apply(train.raw);
  test.features = test.transform.apply(test.raw);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(const double* a, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) s += a[c] * w[c];
  return s;
}

}  // namespace

double logistic_loss(const Matrix& x, std::span<const int> labels, std::span<const double> w,
                     double bias, double l2) {
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double z = dot(x.row(r), w) + bias;
    // -[y log s(z) + (1-y) log(1 - s(z))] = softplus(z) - y z
    loss += softplus(z) - (labels[r] != 0 ? z : 0.0);
  }
  loss /= static_cast<double>(x.rows);
  double norm = 0.0;
  for (const double v : w) norm += v * v;
  return loss + 0.5 * l2 * norm;
}

std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> labels,
                                      std::span<const double> w, double bias, double l2) {
  std::vector<double> g(x.cols + 1, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* row = x.row(r);
    const double resid = sigmoid(dot(row, w) + bias) - (labels[r] != 0 ? 1.0 : 0.0);
    for (std::size_t c = 0; c < x.cols; ++c) g[c] += resid * row[c];
    g[x.cols] += resid;
  }
  const auto n = static_cast<double>(x.rows);
  for (double& v : g) v /= n;
  for (std::size_t c = 0; c < x.cols; ++c) g[c] += l2 * w[c];
  return g;
}

double predict_probability(const ClassifierModel& model, std::span<const double> row) {
  return sigmoid(dot(row.data(), model.weights) + model.bias);
}

ClassifierModel train_logreg(const Matrix& x, std::span<const int> labels,
                             const TrainOptions& options) {
  if (x.rows == 0 || labels.size() != x.rows)
    throw InputError("logistic regression: empty dataset or label count mismatch");
  const auto positives = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
  if (positives == 0 || static_cast<std::size_t>(positives) == labels.size())
    throw InputError("logistic regression: dataset contains a single class");

  const std::size_t d = x.cols;
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  if (!options.init.empty()) {
    if (options.init.size() != d + 1)
      throw ConfigError("logistic regression: init must hold k weights plus a bias");
    std::copy(options.init.begin(), options.init.begin() + static_cast<std::ptrdiff_t>(d), w.begin());
    b = options.init[d];
  }

  ClassifierModel model;
  model.l2 = options.l2;
  double loss = logistic_loss(x, labels, w, b, options.l2);
  model.loss_history.push_back(loss);
  double step = 1.0;
  std::vector<double> w_try(d);
  std::size_t it = 0;
  for (; it < options.max_iter; ++it) {
    const std::vector<double> g = logistic_gradient(x, labels, w, b, options.l2);
    double gnorm2 = 0.0;
    for (const double v : g) gnorm2 += v * v;
    if (std::sqrt(gnorm2) < options.tol) break;

    step *= 2.0;
    double trial = 0.0;
    for (;;) {
      for (std::size_t c = 0; c < d; ++c) w_try[c] = w[c] - step * g[c];
      const double b_try = b - step * g[d];
      trial = logistic_loss(x, labels, w_try, b_try, options.l2);
      if (trial <= loss - 0.5 * step * gnorm2) {
        w.swap(w_try);
        b = b_try;
        break;
      }
      step *= 0.5;
      if (step < 1e-20) {
        trial = loss;
        break;
      }
    }
    if (step < 1e-20) break;
    loss = trial;
    model.loss_history.push_back(loss);
  }
  model.weights = std::move(w);
  model.bias = b;
  model.iterations = it;
  model.final_loss = loss;
  return model;
}

ClassifierModel train_logreg(const BurstDataset& data, const TrainOptions& options) {
  return train_logreg(data.features, data.labels, options);
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  return m;
}

Metrics evaluate(const ClassifierModel& model, const BurstDataset& data) {
  if (data.size() == 0) throw InputError("evaluate: empty dataset");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const bool predicted =
        predict_probability(model, {data.features.row(r), data.features.cols}) >= 0.5;
    const bool actual = data.labels[r] != 0;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

SweepResult window_sweep(std::span<const GroupTrajectory> trajs,
                         std::vector<std::size_t> k_values, FeatureKind kind,
                         const SweepOptions& options) {
  if (k_values.empty()) throw ConfigError("window sweep needs at least one k");
  SweepResult result;
  result.kind = kind;
  const std::set<std::size_t> unique(k_values.begin(), k_values.end());
  result.duplicates_removed = k_values.size() - unique.size();
  for (const std::size_t k : unique) {
    SweepRow row;
    row.k = k;
    try {
      const BurstDataset data = build_dataset(trajs, k, kind, options.w);
      auto [train, test] = split_chronological(data, options.train_fraction);
      if (test.size() == 0) throw InputError("test split is empty");
      const ClassifierModel model = train_logreg(train, options.train);
      row.metrics = evaluate(model, test);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace m3d
