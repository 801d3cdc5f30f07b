#pragma once

// Closed-form maps between the three levels of the framework and the
// estimators that recover their parameters from data.
//
//   individual model (mu_v) --micro_to_meso--> (tau, delta^2)
//   (tau, delta^2, lambda)  --meso_to_macro--> P(N) = C N^alpha
//
// powerlaw_density_numeric evaluates the exponential mixture of lognormals by
// quadrature and is the independent check on meso_to_macro.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "m3d/simulator.hpp"

namespace m3d {

struct GroupModelParams {
  double tau = 0.0;       // drift rate per tick
  double delta_sq = 0.0;  // variance rate per tick
};

struct PowerLawParams {
  double C = 0.0;
  double alpha = 0.0;  // P(N) = C N^alpha; power law when alpha < 0
  double lambda = 0.0;
};

/// Record exported by fit-mu and friends.
struct ModelSummary {
  double tau = 0.0;
  double delta_sq = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double C = 0.0;
  double alpha_alt = 0.0;  // the non-radical exponent variant, for comparison
};

/// tau = sum mu_v, delta^2 = sum mu_v (1 - mu_v). Throws NumericalError
/// when delta^2 == 0 (every mu in {0, 1}).
GroupModelParams micro_to_meso(const IndividualModel& model);

/// C = lambda / (delta sqrt((tau/delta)^2 + 2 lambda)),
/// alpha = -1 + tau/delta^2 - sqrt(tau^2 + 2 lambda delta^2) / delta^2.
PowerLawParams meso_to_macro(const GroupModelParams& params, double lambda);

/// -1 + tau/delta^2 - (tau^2 - 2 lambda delta^2) / delta^2. Kept only so the
/// two printed exponent forms can be compared against quadrature.
double nonradical_exponent(const GroupModelParams& params, double lambda);

ModelSummary summarize(const GroupModelParams& params, double lambda);

/// Integral over t in (0, inf) of lambda e^{-lambda t} times the lognormal
/// density of N at time t, to relative tolerance 1e-8. Throws NumericalError
/// (with the error estimate) if the quadrature does not converge.
double powerlaw_density_numeric(const GroupModelParams& params, double lambda, double N);

/// (2 lambda + 2) / (m + 1).
double winner_threshold(std::size_t users, double lambda);

/// Observed network plus adoption events, indexed for the mu estimator.
/// Edge v -> u means v follows u; u is then an out-neighbour of v.
class ObservedActions {
 public:
  std::size_t add_user(std::string_view user);
  bool has_user(std::string_view user) const;
  std::optional<std::size_t> user_index(std::string_view user) const;

  /// Adds v -> u; both users are created on demand. Self-loops are ignored.
  void add_edge(std::string_view src, std::string_view dst);

  /// Records x_tvz. Only value == +1 contributes to adoption counts.
  /// Throws InputError if the user is unknown or the tick negative.
  void add_event(std::int64_t tick, std::string_view user, std::string_view action, int value);

  std::size_t user_count() const { return users_.size(); }
  const std::vector<std::string>& users() const { return users_; }
  const std::vector<std::uint32_t>& out_neighbors(std::size_t v) const { return out_[v]; }
  std::vector<std::string> actions() const;

  /// Number of +1 events of `action` by user index v.
  std::uint64_t adoptions(std::string_view action, std::size_t v) const;

 private:
  std::vector<std::string> users_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::uint32_t>> out_;
  std::vector<std::string> action_order_;
  std::unordered_map<std::string, std::vector<std::uint64_t>> adoptions_;
};

struct MuEstimate {
  enum class Status { ok, clamped, unobserved };
  double value = 0.0;  // in [0, 1]; 0 when unobserved
  Status status = Status::ok;
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
};

/// v's adoption count of z divided by the adoption count of z over v's
/// out-neighbours, clamped to [0, 1]. A zero denominator is reported as
/// Status::unobserved. Throws InputError if v is unknown.
MuEstimate estimate_mu(const ObservedActions& obs, std::string_view action,
                       std::string_view user);

struct MuFit {
  IndividualModel model;
  std::size_t clamped = 0;
  std::size_t unobserved = 0;
};

/// estimate_mu over every user; unobserved users receive `floor`.
MuFit estimate_individual_model(const ObservedActions& obs, std::string_view action,
                                double floor = 0.0);

/// Solves Delta_i = y+_i ln U - y-_i ln D for i in {t1, t2}, with
/// Delta_i = ln n(t_i + 1) - ln n(t_i). Returns nullopt for a singular system.
/// Throws DomainError if t1 == t2 or either transition lies outside the
/// trajectory.
std::optional<FactorPair> estimate_factors_pair(const GroupTrajectory& traj, std::size_t t1,
                                                std::size_t t2);

struct FactorEstimate {
  FactorPair factors;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
};

/// Arithmetic mean of the pairwise U and D estimates over all transition
/// pairs in [first, first + window). Throws NumericalError if no pair is
/// usable (including windows shorter than two transitions).
FactorEstimate estimate_factors(const GroupTrajectory& traj, std::size_t first,
                                std::size_t window);

inline double predict_group_next(double n_t, const TickTally& tally_next,
                                 const FactorPair& factors) {
  return step_group(n_t, tally_next, factors);
}

/// Free-running forecast: ln n(t) for t > from, iterated from the observed
/// ln n(from) with the recorded tallies.
std::vector<double> forecast_log_tail(const GroupTrajectory& traj, const FactorPair& factors,
                                      std::size_t from);

/// One-step-ahead forecasts: entry j predicts ln n(from + 1 + j) from the
/// observed ln n(from + j).
std::vector<double> one_step_log_forecasts(const GroupTrajectory& traj,
                                           const FactorPair& factors, std::size_t from);

}  // namespace m3d
