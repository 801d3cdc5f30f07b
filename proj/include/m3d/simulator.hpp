#pragma once

// Micro-level Bernoulli actions and the multiplicative group model.
//
// Group counts are carried as natural logarithms throughout. A trajectory
// stores ln n(t) for t = 0..T together with the tallies that drove each
// transition: tallies[t] moves n(t) to n(t+1).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "m3d/rng.hpp"

namespace m3d {

struct FactorPair {
  double up = 1.0;    // U
  double down = 1.0;  // D

  void validate() const;
};

struct TickTally {
  std::int64_t tick = 0;
  std::int64_t y_plus = 0;
  std::int64_t y_minus = 0;

  std::int64_t users() const { return y_plus + y_minus; }
};

/// Per-user adoption probabilities mu_v.
class IndividualModel {
 public:
  IndividualModel() = default;
  explicit IndividualModel(std::vector<double> mu, std::vector<std::string> users = {});

  static IndividualModel homogeneous(std::size_t users, double p);

  std::size_t size() const { return mu_.size(); }
  bool empty() const { return mu_.empty(); }
  std::span<const double> mu() const { return mu_; }
  double mu(std::size_t v) const { return mu_[v]; }
  const std::vector<std::string>& users() const { return users_; }
  std::optional<double> homogeneous_p() const { return homogeneous_p_; }

  /// P(u32 < threshold) == mu exactly up to 2^-32 resolution.
  std::span<const std::uint64_t> thresholds() const { return thresholds_; }

 private:
  std::vector<double> mu_;
  std::vector<std::string> users_;
  std::vector<std::uint64_t> thresholds_;
  std::optional<double> homogeneous_p_;
};

/// One Bernoulli draw per user. When `adopters` is given, indices of users
/// with x = +1 are appended to it; the stream is consumed identically either way.
TickTally draw_tick(const IndividualModel& model, Stream& stream, std::int64_t tick = 0,
                    std::vector<std::uint32_t>* adopters = nullptr);

/// n_prev * U^y+ * D^-y-, evaluated through logs. Throws OverflowError when the
/// result is not a finite positive double.
double step_group(double n_prev, const TickTally& tally, const FactorPair& factors);

/// The same update on ln n; never overflows for finite factors.
double step_group_log(double log_prev, const TickTally& tally, const FactorPair& factors);

struct GroupTrajectory {
  std::string action_id;
  std::int64_t t0 = 0;
  std::vector<double> log_counts;  // ln n(t), log_counts[0] == 0
  std::vector<TickTally> tallies;  // size() == log_counts.size() - 1 when known
  double log_total = 0.0;          // ln N, N = sum_t n(t)

  std::size_t length() const { return log_counts.size(); }

  /// Recomputes ln N with a log-sum-exp over log_counts.
  void finalize();

  /// Exported values; these underflow to 0 for very negative ln n and throw
  /// OverflowError (naming the tick) when n(t) exceeds the double range.
  std::vector<double> counts() const;
  double total() const;

  /// Throws OverflowError if N is not representable as a finite double.
  void check_total_finite() const;
};

struct ExplicitMu {
  std::vector<double> mu;
};
struct HomogeneousMu {
  double p = 0.5;
};
struct UniformMu {
  double low = 0.0;
  double high = 0.1;
};
using MuSource = std::variant<ExplicitMu, HomogeneousMu, UniformMu>;

struct SimulationConfig {
  std::size_t users = 100;
  MuSource mu = HomogeneousMu{0.5};
  FactorPair factors{2.718281828459045, 2.718281828459045};
  double lambda = 0.5;
  std::int64_t max_ticks = 10000;
  std::size_t actions = 1000;
  std::uint64_t seed = 1;

  /// Throws ConfigError on the first violated precondition.
  void validate() const;
};

/// Materialises the mu source. Uniform draws come from a dedicated model
/// stream so the vector depends only on (seed, users, range).
IndividualModel resolve_model(const SimulationConfig& config);

/// ceil(T) ticks for T ~ Exponential(rate), clamped to [1, max_ticks].
std::int64_t draw_duration(double rate, std::int64_t max_ticks, Stream& stream);

/// Factor schedule for time-varying runs: factors for the transition
/// into tick t + 1 from tick t.
using FactorSchedule = std::function<FactorPair(std::int64_t tick)>;

/// Runs `ticks` transitions from n(0) = 1. `adopter_sink`, when set, receives
/// (tick, adopters) after each draw.
GroupTrajectory simulate_path(
    const IndividualModel& model, const FactorSchedule& schedule, std::int64_t ticks,
    Stream& stream,
    const std::function<void(std::int64_t, const std::vector<std::uint32_t>&)>& adopter_sink = {});

GroupTrajectory simulate_path(const IndividualModel& model, const FactorPair& factors,
                              std::int64_t ticks, Stream& stream);

/// Draws the duration then runs the path. Throws OverflowError if N overflows.
GroupTrajectory simulate_action(const SimulationConfig& config, const IndividualModel& model,
                                std::uint64_t action_id, Stream& stream);

/// Uses the canonical stream for (config.seed, action_id).
GroupTrajectory simulate_action(const SimulationConfig& config, const IndividualModel& model,
                                std::uint64_t action_id);

struct ActionFailure {
  std::uint64_t action_id = 0;
  std::string message;
};

struct EnsembleResult {
  std::vector<GroupTrajectory> trajectories;  // ascending action id, failures omitted
  std::vector<ActionFailure> failures;
};

/// OpenMP-parallel over actions. Output is independent of thread count.
EnsembleResult simulate_ensemble(const SimulationConfig& config);
EnsembleResult simulate_ensemble(const SimulationConfig& config, const IndividualModel& model);

/// Single-threaded reference; must match simulate_ensemble exactly.
EnsembleResult simulate_ensemble_serial(const SimulationConfig& config,
                                        const IndividualModel& model);

/// ln n(t) at a fixed horizon for `actions` independent actions (no duration
/// draw). OpenMP-parallel; deterministic.
std::vector<double> log_counts_at_horizon(const IndividualModel& model, const FactorPair& factors,
                                          std::int64_t horizon, std::size_t actions,
                                          std::uint64_t seed);
std::vector<double> log_counts_at_horizon_serial(const IndividualModel& model,
                                                 const FactorPair& factors, std::int64_t horizon,
                                                 std::size_t actions, std::uint64_t seed);

}  // namespace m3d
