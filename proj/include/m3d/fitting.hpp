#pragma once

// Distribution fitting for the meso level (lognormal at a fixed tick) and the
// macro level (discrete power law above a truncation point).
//
// The power-law fitter follows the usual recipe for integer data: for every
// candidate x_min take the approximate discrete MLE exponent, keep the
// candidate whose tail is closest to its fit in Kolmogorov-Smirnov distance,
// and judge plausibility with a semi-parametric bootstrap.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "m3d/rng.hpp"

namespace m3d {

struct LognormalFit {
  std::int64_t tick = 0;
  double mean = 0.0;      // of ln x
  double variance = 0.0;  // of ln x, MLE (divisor n)
  std::size_t samples = 0;
};

/// Throws DomainError for a non-positive sample and InputError for fewer than
/// two samples.
LognormalFit lognormal_mle(std::span<const double> samples, std::int64_t tick = 0);

/// Same fit from values already on the log scale (for counts that underflow).
LognormalFit lognormal_mle_from_logs(std::span<const double> log_samples, std::int64_t tick = 0);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

struct QQPoints {
  std::vector<double> theoretical;  // Phi^-1((i - 0.5)/n) sqrt(var) + mean
  std::vector<double> empirical;    // sorted ln samples
  LineFit line;                     // empirical on theoretical
};

/// Throws NumericalError when the fit variance is zero.
QQPoints qq_points(std::span<const double> samples, const LognormalFit& fit);
QQPoints qq_points_from_logs(std::span<const double> log_samples, const LognormalFit& fit);

struct PowerLawFit {
  double alpha = 0.0;  // P(x) = x^-alpha / zeta(alpha, x_min) for x >= x_min
  double x_min = 1.0;
  double C = 0.0;      // 1 / zeta(alpha, x_min)
  double ks = 0.0;
  double p_value = std::numeric_limits<double>::quiet_NaN();  // NaN: not computed
  double rss = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_tail = 0;
  std::size_t n = 0;

  /// The framework's signed exponent for the same law.
  double model_alpha() const { return -alpha; }
};

struct PowerLawOptions {
  std::size_t min_samples = 50;
  std::size_t min_tail = 50;
};

/// Samples must be positive integers (stored as doubles so that counts beyond
/// 2^63 remain representable). Throws InputError for too few or invalid
/// samples and NumericalError (fit failed) when no candidate tail qualifies.
PowerLawFit powerlaw_fit(std::span<const double> samples, const PowerLawOptions& options = {});

/// Single-threaded reference for the x_min scan; must agree exactly.
PowerLawFit powerlaw_fit_serial(std::span<const double> samples,
                                const PowerLawOptions& options = {});

/// KS distance between the empirical tail (x >= x_min) and a discrete power
/// law with the given exponent.
double powerlaw_ks(std::span<const double> samples, double alpha, double x_min);

/// P(X >= x) for the discrete power law.
double discrete_powerlaw_ccdf(double x, double alpha, double x_min);

/// Exact inverse-transform draw from the discrete power law.
double sample_discrete_powerlaw(double alpha, double x_min, Stream& stream);

/// Fraction of semi-parametric bootstrap replicates whose refit KS is at
/// least the observed KS. Replicate i uses stream (seed, i, bootstrap).
/// Returns NaN when n_boot == 0.
double powerlaw_pvalue(std::span<const double> samples, const PowerLawFit& fit,
                       std::size_t n_boot, std::uint64_t seed,
                       const PowerLawOptions& options = {});
double powerlaw_pvalue_serial(std::span<const double> samples, const PowerLawFit& fit,
                              std::size_t n_boot, std::uint64_t seed,
                              const PowerLawOptions& options = {});

/// Edges x_min * 2^i for i = 0 .. ceil(log2(x_max / x_min)) + 1, so the last
/// bin contains x_max.
std::vector<double> geometric_bin_edges(double x_min, double x_max);

struct BinnedDensity {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> density;  // tail probability mass in [lo, hi) / (hi - lo)
  std::vector<std::size_t> count;
};

/// Ratio-2 binning of samples >= x_min; throws DomainError if none qualify.
BinnedDensity bin_geometric(std::span<const double> samples, double x_min);

/// Probability mass a model assigns to [lo, hi), conditional on x >= x_min.
using BinMass = std::function<double(double lo, double hi)>;

BinMass discrete_powerlaw_mass(const PowerLawFit& fit);

/// Sum over non-empty ratio-2 bins of (empirical density - model density)^2.
double rss_geometric(std::span<const double> samples, const BinMass& model, double x_min);

/// Rounds positive reals to the nearest integer >= 1 for the discrete fitter.
std::vector<double> to_count_samples(std::span<const double> values);

}  // namespace m3d
