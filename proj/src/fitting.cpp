#include "m3d/fitting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include "m3d/error.hpp"
#include "m3d/special.hpp"

namespace m3d {

LognormalFit lognormal_mle_from_logs(std::span<const double> log_samples, std::int64_t tick) {
  if (log_samples.size() < 2) throw InputError("lognormal fit needs at least two samples");
  LognormalFit fit;
  fit.tick = tick;
  fit.samples = log_samples.size();
  const auto n = static_cast<double>(log_samples.size());
  double mean = 0.0;
  for (const double l : log_samples) {
    if (!std::isfinite(l)) throw DomainError("lognormal fit: non-finite log sample");
    mean += l;
  }
  mean /= n;
  double var = 0.0;
  for (const double l : log_samples) var += (l - mean) * (l - mean);
  fit.mean = mean;
  fit.variance = var / n;
  return fit;
}

LognormalFit lognormal_mle(std::span<const double> samples, std::int64_t tick) {
  if (samples.size() < 2) throw InputError("lognormal fit needs at least two samples");
  std::vector<double> logs;
  logs.reserve(samples.size());
  for (const double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw DomainError("lognormal fit: samples must be finite and positive");
    logs.push_back(std::log(x));
  }
  return lognormal_mle_from_logs(logs, tick);
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InputError("least squares needs two equally sized series of length >= 2");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("least squares: x has zero spread");
  LineFit line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  line.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return line;
}

QQPoints qq_points_from_logs(std::span<const double> log_samples, const LognormalFit& fit) {
  if (log_samples.size() < 2) throw InputError("QQ plot needs at least two samples");
  if (!(fit.variance > 0.0)) throw NumericalError("QQ plot: degenerate fit (zero variance)");
  QQPoints qq;
  qq.empirical.assign(log_samples.begin(), log_samples.end());
  std::sort(qq.empirical.begin(), qq.empirical.end());
  const auto n = static_cast<double>(qq.empirical.size());
  const double sd = std::sqrt(fit.variance);
  qq.theoretical.reserve(qq.empirical.size());
  for (std::size_t i = 1; i <= qq.empirical.size(); ++i)
    qq.theoretical.push_back(fit.mean +
                             sd * normal_quantile((static_cast<double>(i) - 0.5) / n));
  qq.line = least_squares(qq.theoretical, qq.empirical);
  return qq;
}

QQPoints qq_points(std::span<const double> samples, const LognormalFit& fit) {
  std::vector<double> logs;
  logs.reserve(samples.size());
  for (const double x : samples) {
    if (!(x > 0.0)) throw DomainError("QQ plot: samples must be positive");
    logs.push_back(std::log(x));
  }
  return qq_points_from_logs(logs, fit);
}

// ---------------------------------------------------------------------------
// Discrete power law

namespace {

struct Distinct {
  std::vector<double> value;       // ascending distinct sample values
  std::vector<std::size_t> tail;   // number of samples >= value[j]
  std::vector<double> tail_log;    // sum of ln x over samples >= value[j]
  std::size_t n = 0;
};

Distinct tabulate(std::span<const double> samples, const PowerLawOptions& options) {
  if (samples.size() < options.min_samples)
    throw InputError("power-law fit needs at least " + std::to_string(options.min_samples) +
                     " samples, got " + std::to_string(samples.size()));
  std::vector<double> sorted(samples.begin(), samples.end());
  for (const double x : sorted)
    if (!(x >= 1.0) || !std::isfinite(x) || std::floor(x) != x)
      throw InputError("power-law fit: samples must be positive integers");
  std::sort(sorted.begin(), sorted.end());

  Distinct d;
  d.n = sorted.size();
  std::vector<std::size_t> count;
  for (const double x : sorted) {
    if (d.value.empty() || d.value.back() != x) {
      d.value.push_back(x);
      count.push_back(0);
    }
    ++count.back();
  }
  const std::size_t k = d.value.size();
  d.tail.assign(k, 0);
  d.tail_log.assign(k, 0.0);
  std::size_t acc = 0;
  double acc_log = 0.0;
  for (std::size_t j = k; j-- > 0;) {
    acc += count[j];
    acc_log += static_cast<double>(count[j]) * std::log(d.value[j]);
    d.tail[j] = acc;
    d.tail_log[j] = acc_log;
  }
  return d;
}

/// Candidates need the minimum tail size and at least two distinct values.
std::size_t candidate_count(const Distinct& d, const PowerLawOptions& options) {
  std::size_t c = 0;
  while (c + 1 < d.value.size() && d.tail[c] >= options.min_tail) ++c;
  return c;
}

double mle_alpha(const Distinct& d, std::size_t j) {
  const auto nt = static_cast<double>(d.tail[j]);
  const double denom = d.tail_log[j] - nt * std::log(d.value[j] - 0.5);
  return 1.0 + nt / denom;
}

/// Exact sup over integers x >= x_min of |S(x) - F(x)|, abandoning the scan
/// once the running value exceeds `bound`.
double ks_distance(const Distinct& d, std::size_t j, double alpha, double bound) {
  const double x_min = d.value[j];
  const double norm = hurwitz_zeta(alpha, x_min);
  const auto nt = static_cast<double>(d.tail[j]);
  double worst = 0.0;
  double below = 0.0;  // samples in the tail strictly below value[k]
  for (std::size_t k = j; k < d.value.size(); ++k) {
    const double x = d.value[k];
    if (x > x_min) {
      // At x - 1: empirical mass below x vs P(X <= x - 1).
      const double model = 1.0 - hurwitz_zeta(alpha, x) / norm;
      worst = std::max(worst, std::abs(below / nt - model));
    }
    const std::size_t here = d.tail[k] - (k + 1 < d.value.size() ? d.tail[k + 1] : 0);
    below += static_cast<double>(here);
    const double model = 1.0 - hurwitz_zeta(alpha, x + 1.0) / norm;
    worst = std::max(worst, std::abs(below / nt - model));
    if (worst > bound) break;
  }
  return worst;
}

PowerLawFit assemble(const Distinct& d, std::size_t j, double alpha, double ks) {
  PowerLawFit fit;
  fit.alpha = alpha;
  fit.x_min = d.value[j];
  fit.C = 1.0 / hurwitz_zeta(alpha, fit.x_min);
  fit.ks = ks;
  fit.n_tail = d.tail[j];
  fit.n = d.n;
  return fit;
}

std::size_t select(const std::vector<double>& ks) {
  std::size_t best = ks.size();
  for (std::size_t j = 0; j < ks.size(); ++j)
    if (best == ks.size() || ks[j] < ks[best]) best = j;
  return best;
}

void require_candidates(const Distinct& d, std::size_t c, const PowerLawOptions& options) {
  if (c == 0) {
    if (d.value.size() < 2)
      throw NumericalError("power-law fit failed: all samples are equal");
    throw NumericalError("power-law fit failed: no tail with at least " +
                         std::to_string(options.min_tail) +
                         " samples and two distinct values");
  }
}

void atomic_min(std::atomic<double>& target, double value) {
  double current = target.load(std::memory_order_relaxed);
  while (value < current &&
         !target.compare_exchange_weak(current, value, std::memory_order_relaxed)) {
  }
}

}  // namespace

PowerLawFit powerlaw_fit(std::span<const double> samples, const PowerLawOptions& options) {
  const Distinct d = tabulate(samples, options);
  const std::size_t c = candidate_count(d, options);
  require_candidates(d, c, options);

  std::vector<double> alpha(c), ks(c);
  std::atomic<double> best{std::numeric_limits<double>::infinity()};
  const auto nc = static_cast<std::int64_t>(c);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < nc; ++i) {
    const auto j = static_cast<std::size_t>(i);
    alpha[j] = mle_alpha(d, j);
    const double bound = best.load(std::memory_order_relaxed);
    const double dist = ks_distance(d, j, alpha[j], bound);
    // A pruned scan only proves dist > bound >= the eventual minimum.
    ks[j] = dist > bound ? std::numeric_limits<double>::infinity() : dist;
    atomic_min(best, ks[j]);
  }
  const std::size_t j = select(ks);
  return assemble(d, j, alpha[j], ks[j]);
}

PowerLawFit powerlaw_fit_serial(std::span<const double> samples,
                                const PowerLawOptions& options) {
  const Distinct d = tabulate(samples, options);
  const std::size_t c = candidate_count(d, options);
  require_candidates(d, c, options);

  std::vector<double> alpha(c), ks(c);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c; ++j) {
    alpha[j] = mle_alpha(d, j);
    const double dist = ks_distance(d, j, alpha[j], best);
    ks[j] = dist > best ? std::numeric_limits<double>::infinity() : dist;
    best = std::min(best, ks[j]);
  }
  const std::size_t j = select(ks);
  return assemble(d, j, alpha[j], ks[j]);
}

double powerlaw_ks(std::span<const double> samples, double alpha, double x_min) {
  std::vector<double> tail;
  for (const double x : samples)
    if (x >= x_min) tail.push_back(x);
  if (tail.empty()) throw DomainError("powerlaw_ks: no samples at or above x_min");
  PowerLawOptions opts;
  opts.min_samples = 1;
  opts.min_tail = 1;
  const Distinct d = tabulate(tail, opts);
  return ks_distance(d, 0, alpha, std::numeric_limits<double>::infinity());
}

double discrete_powerlaw_ccdf(double x, double alpha, double x_min) {
  if (x <= x_min) return 1.0;
  return hurwitz_zeta(alpha, std::ceil(x)) / hurwitz_zeta(alpha, x_min);
}

namespace {

class PowerLawSampler {
 public:
  PowerLawSampler(double alpha, double x_min)
      : alpha_(alpha), x_min_(x_min), norm_(hurwitz_zeta(alpha, x_min)) {}

  double draw(Stream& stream) const {
    const double u = 1.0 - stream.uniform();  // (0, 1]
    // Largest integer x with P(X >= x) >= u.
    double lo = x_min_;
    double guess = (x_min_ - 0.5) * std::pow(u, -1.0 / (alpha_ - 1.0)) + 0.5;
    double hi = std::max(lo + 1.0, std::floor(guess) + 1.0);
    while (ccdf(hi) >= u) {
      lo = hi;
      hi = std::floor(hi * 2.0);
    }
    while (hi - lo > 1.0) {
      const double mid = std::floor(lo + (hi - lo) / 2.0);
      if (mid <= lo || mid >= hi) break;  // beyond integer resolution
      if (ccdf(mid) >= u)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

 private:
  double ccdf(double x) const { return hurwitz_zeta(alpha_, x) / norm_; }

  double alpha_;
  double x_min_;
  double norm_;
};

double replicate_ks(std::span<const double> below, const PowerLawSampler& sampler,
                    double tail_prob, std::size_t n, std::uint64_t seed, std::uint64_t rep,
                    const PowerLawOptions& options, bool parallel_scan) {
  Stream stream(seed, rep, StreamDomain::bootstrap);
  std::vector<double> synthetic(n);
  for (double& x : synthetic) {
    if (below.empty() || stream.uniform() < tail_prob)
      x = sampler.draw(stream);
    else
      x = below[stream.below(below.size())];
  }
  try {
    return parallel_scan ? powerlaw_fit(synthetic, options).ks
                         : powerlaw_fit_serial(synthetic, options).ks;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

struct BootstrapSetup {
  std::vector<double> below;
  double tail_prob = 1.0;
};

BootstrapSetup setup_bootstrap(std::span<const double> samples, const PowerLawFit& fit) {
  BootstrapSetup s;
  for (const double x : samples)
    if (x < fit.x_min) s.below.push_back(x);
  s.tail_prob = static_cast<double>(samples.size() - s.below.size()) /
                static_cast<double>(samples.size());
  return s;
}

double tally_pvalue(const std::vector<double>& ks, double observed) {
  std::size_t valid = 0, extreme = 0;
  for (const double k : ks) {
    if (std::isnan(k)) continue;
    ++valid;
    if (k >= observed) ++extreme;
  }
  if (valid == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(extreme) / static_cast<double>(valid);
}

}  // namespace

double sample_discrete_powerlaw(double alpha, double x_min, Stream& stream) {
  if (!(alpha > 1.0) || !(x_min >= 1.0)) throw DomainError("power-law sampler: need alpha > 1, x_min >= 1");
  return PowerLawSampler(alpha, x_min).draw(stream);
}

double powerlaw_pvalue(std::span<const double> samples, const PowerLawFit& fit,
                       std::size_t n_boot, std::uint64_t seed, const PowerLawOptions& options) {
  if (n_boot == 0) return std::numeric_limits<double>::quiet_NaN();
  const BootstrapSetup setup = setup_bootstrap(samples, fit);
  const PowerLawSampler sampler(fit.alpha, fit.x_min);
  std::vector<double> ks(n_boot);
  const auto nb = static_cast<std::int64_t>(n_boot);
  // Replicates are the parallel unit; each refit scans serially.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < nb; ++i)
    ks[static_cast<std::size_t>(i)] =
        replicate_ks(setup.below, sampler, setup.tail_prob, samples.size(), seed,
                     static_cast<std::uint64_t>(i), options, false);
  return tally_pvalue(ks, fit.ks);
}

double powerlaw_pvalue_serial(std::span<const double> samples, const PowerLawFit& fit,
                              std::size_t n_boot, std::uint64_t seed,
                              const PowerLawOptions& options) {
  if (n_boot == 0) return std::numeric_limits<double>::quiet_NaN();
  const BootstrapSetup setup = setup_bootstrap(samples, fit);
  const PowerLawSampler sampler(fit.alpha, fit.x_min);
  std::vector<double> ks(n_boot);
  for (std::size_t i = 0; i < n_boot; ++i)
    ks[i] = replicate_ks(setup.below, sampler, setup.tail_prob, samples.size(), seed, i,
                         options, false);
  return tally_pvalue(ks, fit.ks);
}

// ---------------------------------------------------------------------------
// Geometric binning

std::vector<double> geometric_bin_edges(double x_min, double x_max) {
  if (!(x_min > 0.0) || !(x_max >= x_min))
    throw DomainError("geometric bins need 0 < x_min <= x_max");
  const auto top = static_cast<int>(std::ceil(std::log2(x_max / x_min)));
  std::vector<double> edges;
  for (int i = 0; i <= top + 1; ++i) edges.push_back(std::ldexp(x_min, i));
  return edges;
}

BinnedDensity bin_geometric(std::span<const double> samples, double x_min) {
  std::vector<double> tail;
  for (const double x : samples)
    if (x >= x_min) tail.push_back(x);
  if (tail.empty()) throw DomainError("no samples at or above x_min");
  const double x_max = *std::max_element(tail.begin(), tail.end());
  const std::vector<double> edges = geometric_bin_edges(x_min, x_max);

  BinnedDensity out;
  const std::size_t bins = edges.size() - 1;
  out.count.assign(bins, 0);
  for (const double x : tail) {
    auto b = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), x) - edges.begin() - 1);
    out.count[std::min(b, bins - 1)]++;
  }
  const auto n = static_cast<double>(tail.size());
  for (std::size_t b = 0; b < bins; ++b) {
    out.lo.push_back(edges[b]);
    out.hi.push_back(edges[b + 1]);
    out.density.push_back(static_cast<double>(out.count[b]) / n / (edges[b + 1] - edges[b]));
  }
  return out;
}

BinMass discrete_powerlaw_mass(const PowerLawFit& fit) {
  const double alpha = fit.alpha;
  const double norm = hurwitz_zeta(alpha, fit.x_min);
  const double x_min = fit.x_min;
  return [alpha, norm, x_min](double lo, double hi) {
    const double a = std::max(std::ceil(lo), x_min);
    const double b = std::max(std::ceil(hi), x_min);
    if (b <= a) return 0.0;
    return (hurwitz_zeta(alpha, a) - hurwitz_zeta(alpha, b)) / norm;
  };
}

double rss_geometric(std::span<const double> samples, const BinMass& model, double x_min) {
  const BinnedDensity binned = bin_geometric(samples, x_min);
  double rss = 0.0;
  for (std::size_t b = 0; b < binned.density.size(); ++b) {
    if (binned.count[b] == 0) continue;
    const double width = binned.hi[b] - binned.lo[b];
    const double diff = binned.density[b] - model(binned.lo[b], binned.hi[b]) / width;
    rss += diff * diff;
  }
  return rss;
}

std::vector<double> to_count_samples(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const double v : values) {
    if (!(v > 0.0)) throw DomainError("count samples must be positive");
    out.push_back(std::max(1.0, std::round(v)));
  }
  return out;
}

}  // namespace m3d
