#include "m3d/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "m3d/error.hpp"

namespace m3d {

GroupModelParams micro_to_meso(const IndividualModel& model) {
  if (model.empty()) throw ConfigError("micro_to_meso: individual model is empty");
  GroupModelParams out;
  for (const double p : model.mu()) {
    out.tau += p;
    out.delta_sq += p * (1.0 - p);
  }
  if (!(out.delta_sq > 0.0))
    throw NumericalError("degenerate individual model: every mu is 0 or 1, so delta^2 = 0");
  return out;
}

PowerLawParams meso_to_macro(const GroupModelParams& params, double lambda) {
  if (!(params.delta_sq > 0.0)) throw DomainError("meso_to_macro: delta^2 must be positive");
  if (!(lambda > 0.0)) throw DomainError("meso_to_macro: lambda must be positive");
  const double tau = params.tau;
  const double d2 = params.delta_sq;
  const double delta = std::sqrt(d2);
  PowerLawParams out;
  out.lambda = lambda;
  out.C = lambda / (delta * std::sqrt((tau / delta) * (tau / delta) + 2.0 * lambda));
  out.alpha = -1.0 + tau / d2 - std::sqrt(tau * tau + 2.0 * lambda * d2) / d2;
  return out;
}

double nonradical_exponent(const GroupModelParams& params, double lambda) {
  const double tau = params.tau;
  const double d2 = params.delta_sq;
  return -1.0 + tau / d2 - (tau * tau - 2.0 * lambda * d2) / d2;
}

ModelSummary summarize(const GroupModelParams& params, double lambda) {
  const PowerLawParams macro = meso_to_macro(params, lambda);
  return {params.tau, params.delta_sq, lambda, macro.alpha, macro.C,
          nonradical_exponent(params, lambda)};
}

double powerlaw_density_numeric(const GroupModelParams& params, double lambda, double N) {
  if (!(N > 0.0)) throw DomainError("powerlaw_density_numeric: N must be positive");
  if (!(params.delta_sq > 0.0) || !(lambda > 0.0))
    throw DomainError("powerlaw_density_numeric: need delta^2 > 0 and lambda > 0");

  const double tau = params.tau;
  const double d2 = params.delta_sq;
  const double L = std::log(N);
  const double log_prefactor =
      std::log(lambda) - L - 0.5 * std::log(d2) - 0.5 * std::log(2.0 * std::numbers::pi);

  auto integrand = [&](double t) {
    if (!(t > 0.0) || !std::isfinite(t)) return 0.0;
    const double r = L - tau * t;
    return std::exp(log_prefactor - lambda * t - 0.5 * std::log(t) - r * r / (2.0 * d2 * t));
  };

  // Split at the mode of the integrand so both halves are monotone-ish.
  const double a = 2.0 * lambda * d2 + tau * tau;
  double split = (-d2 + std::sqrt(d2 * d2 + 4.0 * a * L * L)) / (2.0 * a);
  if (!(split > 1e-6)) split = 1.0 / a;

  constexpr double kTol = 1e-8;
  double err_lo = 0.0, err_hi = 0.0, l1_lo = 0.0, l1_hi = 0.0;
  double lower = 0.0, upper = 0.0;
  try {
    boost::math::quadrature::tanh_sinh<double> head;
    lower = head.integrate(integrand, 0.0, split, kTol * 1e-2, &err_lo, &l1_lo);
    boost::math::quadrature::exp_sinh<double> tail;
    upper = tail.integrate(integrand, split, std::numeric_limits<double>::infinity(),
                           kTol * 1e-2, &err_hi, &l1_hi);
  } catch (const std::exception& e) {
    throw NumericalError(std::string("density quadrature failed: ") + e.what());
  }
  const double value = lower + upper;
  const double err = err_lo + err_hi;
  if (!std::isfinite(value) || !(value > 0.0) || err > kTol * value) {
    std::ostringstream msg;
    msg << "density quadrature did not converge: N=" << N << " tau=" << tau
        << " delta^2=" << d2 << " lambda=" << lambda << " value=" << value
        << " error estimate=" << err;
    throw NumericalError(msg.str());
  }
  return value;
}

double winner_threshold(std::size_t users, double lambda) {
  if (users < 1) throw DomainError("winner_threshold: m must be at least 1");
  if (!(lambda > 0.0)) throw DomainError("winner_threshold: lambda must be positive");
  return (2.0 * lambda + 2.0) / (static_cast<double>(users) + 1.0);
}

std::size_t ObservedActions::add_user(std::string_view user) {
  if (user.empty()) throw InputError("user id must be non-empty");
  const std::string key(user);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const std::size_t idx = users_.size();
  users_.push_back(key);
  index_.emplace(key, idx);
  out_.emplace_back();
  for (auto& [action, counts] : adoptions_) counts.push_back(0);
  return idx;
}

bool ObservedActions::has_user(std::string_view user) const {
  return index_.find(std::string(user)) != index_.end();
}

std::optional<std::size_t> ObservedActions::user_index(std::string_view user) const {
  if (auto it = index_.find(std::string(user)); it != index_.end()) return it->second;
  return std::nullopt;
}

void ObservedActions::add_edge(std::string_view src, std::string_view dst) {
  const std::size_t v = add_user(src);
  const std::size_t u = add_user(dst);
  if (u == v) return;
  auto& nbrs = out_[v];
  const auto uu = static_cast<std::uint32_t>(u);
  if (std::find(nbrs.begin(), nbrs.end(), uu) == nbrs.end()) nbrs.push_back(uu);
}

void ObservedActions::add_event(std::int64_t tick, std::string_view user,
                                std::string_view action, int value) {
  if (tick < 0) throw InputError("event tick must be non-negative");
  if (value != 1 && value != -1) throw InputError("event value must be +1 or -1");
  const auto v = user_index(user);
  if (!v) throw InputError("event references unknown user '" + std::string(user) + "'");
  const std::string key(action);
  auto it = adoptions_.find(key);
  if (it == adoptions_.end()) {
    it = adoptions_.emplace(key, std::vector<std::uint64_t>(users_.size(), 0)).first;
    action_order_.push_back(key);
  }
  if (value == 1) ++it->second[*v];
}

std::vector<std::string> ObservedActions::actions() const { return action_order_; }

std::uint64_t ObservedActions::adoptions(std::string_view action, std::size_t v) const {
  const auto it = adoptions_.find(std::string(action));
  if (it == adoptions_.end()) return 0;
  return it->second[v];
}

MuEstimate estimate_mu(const ObservedActions& obs, std::string_view action,
                       std::string_view user) {
  const auto v = obs.user_index(user);
  if (!v) throw InputError("estimate_mu: unknown user '" + std::string(user) + "'");
  MuEstimate est;
  est.numerator = obs.adoptions(action, *v);
  for (const std::uint32_t u : obs.out_neighbors(*v)) est.denominator += obs.adoptions(action, u);
  if (est.denominator == 0) {
    est.status = MuEstimate::Status::unobserved;
    return est;
  }
  const double ratio = static_cast<double>(est.numerator) / static_cast<double>(est.denominator);
  if (ratio > 1.0) {
    est.value = 1.0;
    est.status = MuEstimate::Status::clamped;
  } else {
    est.value = ratio;
  }
  return est;
}

MuFit estimate_individual_model(const ObservedActions& obs, std::string_view action,
                                double floor) {
  if (!(floor >= 0.0 && floor <= 1.0)) throw ConfigError("mu floor must lie in [0,1]");
  std::vector<double> mu(obs.user_count());
  std::size_t clamped = 0, unobserved = 0;
  for (std::size_t v = 0; v < obs.user_count(); ++v) {
    const MuEstimate est = estimate_mu(obs, action, obs.users()[v]);
    switch (est.status) {
      case MuEstimate::Status::ok:
        mu[v] = est.value;
        break;
      case MuEstimate::Status::clamped:
        mu[v] = est.value;
        ++clamped;
        break;
      case MuEstimate::Status::unobserved:
        mu[v] = floor;
        ++unobserved;
        break;
    }
  }
  return {IndividualModel(std::move(mu), obs.users()), clamped, unobserved};
}

namespace {

void check_transition(const GroupTrajectory& traj, std::size_t t) {
  if (t + 1 >= traj.log_counts.size() || t >= traj.tallies.size())
    throw DomainError("transition " + std::to_string(t) + " lies outside the trajectory");
}

std::optional<FactorPair> solve_pair(const GroupTrajectory& traj, std::size_t t1,
                                     std::size_t t2) {
  const double p1 = static_cast<double>(traj.tallies[t1].y_plus);
  const double m1 = static_cast<double>(traj.tallies[t1].y_minus);
  const double p2 = static_cast<double>(traj.tallies[t2].y_plus);
  const double m2 = static_cast<double>(traj.tallies[t2].y_minus);
  // Integer tallies make the singularity test exact.
  const double det = p2 * m1 - p1 * m2;
  if (det == 0.0) return std::nullopt;
  const double d1 = traj.log_counts[t1 + 1] - traj.log_counts[t1];
  const double d2 = traj.log_counts[t2 + 1] - traj.log_counts[t2];
  const double log_up = (d2 * m1 - d1 * m2) / det;
  const double log_down = (p1 * d2 - p2 * d1) / det;
  return FactorPair{std::exp(log_up), std::exp(log_down)};
}

}  // namespace

std::optional<FactorPair> estimate_factors_pair(const GroupTrajectory& traj, std::size_t t1,
                                                std::size_t t2) {
  if (t1 == t2) throw DomainError("estimate_factors_pair: t1 and t2 must differ");
  check_transition(traj, t1);
  check_transition(traj, t2);
  return solve_pair(traj, t1, t2);
}

FactorEstimate estimate_factors(const GroupTrajectory& traj, std::size_t first,
                                std::size_t window) {
  const std::size_t usable = std::min(traj.tallies.size(), traj.log_counts.size() - 1);
  const std::size_t last = std::min(first + window, usable);
  if (first >= last || last - first < 2)
    throw NumericalError("factor estimation failed: window holds fewer than two transitions");

  struct Partial {
    double up = 0.0, down = 0.0;
    std::size_t used = 0, skipped = 0;
  };
  std::vector<Partial> partial(last - first);
  const auto lo = static_cast<std::int64_t>(first);
  const auto hi = static_cast<std::int64_t>(last);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = lo; i < hi; ++i) {
    Partial& acc = partial[static_cast<std::size_t>(i - lo)];
    for (auto j = static_cast<std::size_t>(i) + 1; j < last; ++j) {
      if (auto f = solve_pair(traj, static_cast<std::size_t>(i), j)) {
        acc.up += f->up;
        acc.down += f->down;
        ++acc.used;
      } else {
        ++acc.skipped;
      }
    }
  }
  Partial total;
  for (const Partial& p : partial) {
    total.up += p.up;
    total.down += p.down;
    total.used += p.used;
    total.skipped += p.skipped;
  }
  if (total.used == 0)
    throw NumericalError("factor estimation failed: every transition pair is degenerate (" +
                         std::to_string(total.skipped) + " skipped)");
  const auto n = static_cast<double>(total.used);
  return {{total.up / n, total.down / n}, total.used, total.skipped};
}

std::vector<double> forecast_log_tail(const GroupTrajectory& traj, const FactorPair& factors,
                                      std::size_t from) {
  factors.validate();
  if (from >= traj.log_counts.size()) throw DomainError("forecast origin outside trajectory");
  std::vector<double> out;
  double log_n = traj.log_counts[from];
  for (std::size_t t = from; t + 1 < traj.log_counts.size() && t < traj.tallies.size(); ++t) {
    log_n = step_group_log(log_n, traj.tallies[t], factors);
    out.push_back(log_n);
  }
  return out;
}

std::vector<double> one_step_log_forecasts(const GroupTrajectory& traj,
                                           const FactorPair& factors, std::size_t from) {
  factors.validate();
  if (from >= traj.log_counts.size()) throw DomainError("forecast origin outside trajectory");
  std::vector<double> out;
  for (std::size_t t = from; t + 1 < traj.log_counts.size() && t < traj.tallies.size(); ++t)
    out.push_back(step_group_log(traj.log_counts[t], traj.tallies[t], factors));
  return out;
}

}  // namespace m3d
