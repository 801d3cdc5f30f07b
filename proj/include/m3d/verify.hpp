#pragma once

// Simulation-based checks of the three emergence results. Shared by the
// verify-theorems subcommand and the acceptance test binary.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace m3d {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // deterministic given the options
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  bool quick = false;       // smaller ensembles, same tolerances
  std::size_t n_boot = 1000;  // bootstrap replicates per p-value
};

/// m = 1000, mu ~ U(0, 0.1), U = D = e, ln n(200) over 5000 actions (1000
/// quick). The first row tests against N(t sum mu, t sum mu(1 - mu)); the
/// second against the moments of the +-1 update, N(t(2 tau - m), 4 t delta^2).
std::vector<CheckResult> check_lognormal_emergence(const VerifyOptions& options);

/// p = 0.5, m = 100, lambda = 0.5, U = D = e, 2e4 actions (4000 quick).
/// Rows: fitted exponent vs meso_to_macro within 0.15; bootstrap p > 0.1.
std::vector<CheckResult> check_powerlaw_emergence(const VerifyOptions& options);

/// Quadrature slope over N in [1e2, 1e5] on the 27-point (tau, delta^2,
/// lambda) grid: within 0.01 of the radical exponent everywhere and more than
/// 0.05 from the non-radical one somewhere.
CheckResult check_oracle_grid();

/// m = 100, lambda = 0.5: p = 1.5 x threshold must be accepted (p-value >
/// 0.1) and p = 1e-4 rejected (p-value < 0.1). A failed fit counts as p = 0.
CheckResult check_threshold(const VerifyOptions& options);

std::vector<CheckResult> verify_theorems(const VerifyOptions& options);

}  // namespace m3d
