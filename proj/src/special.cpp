#include "m3d/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "m3d/error.hpp"

namespace m3d {

double hurwitz_zeta(double s, double q) {
  if (!(s > 1.0)) throw DomainError("hurwitz_zeta: s must exceed 1");
  if (!(q > 0.0)) throw DomainError("hurwitz_zeta: q must be positive");

  // B_{2j} / (2j)!
  static constexpr std::array<double, 6> kCoef = {
      1.0 / 12.0,           -1.0 / 720.0,         1.0 / 30240.0,
      -1.0 / 1209600.0,     1.0 / 47900160.0,     -691.0 / 1307674368000.0};

  const double start = std::max(10.0, 2.0 * s);
  double sum = 0.0;
  double a = q;
  while (a < start) {
    sum += std::pow(a, -s);
    a += 1.0;
  }
  const double a_pow = std::pow(a, -s);
  sum += a * a_pow / (s - 1.0) + 0.5 * a_pow;
  // term_j = coef_j * s (s+1) ... (s+2j-2) * a^{-s-2j+1}
  const double inv_a2 = 1.0 / (a * a);
  double rising = s;
  double power = a_pow / a;
  for (std::size_t j = 0; j < kCoef.size(); ++j) {
    sum += kCoef[j] * rising * power;
    const double k = 2.0 * static_cast<double>(j) + 1.0;
    rising *= (s + k) * (s + k + 1.0);
    power *= inv_a2;
  }
  return sum;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  static const boost::math::normal_distribution<double> standard(0.0, 1.0);
  return boost::math::quantile(standard, p);
}

}  // namespace m3d
