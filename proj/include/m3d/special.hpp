#pragma once

namespace m3d {

/// Hurwitz zeta: sum over k >= 0 of (q + k)^-s, for s > 1 and q > 0.
/// Direct summation until q + k >= max(10, 2s), then Euler-Maclaurin.
double hurwitz_zeta(double s, double q);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace m3d
