#include "m3d/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "m3d/error.hpp"

namespace m3d {

namespace {

const double kLogMax = std::log(std::numeric_limits<double>::max());

std::uint64_t bernoulli_threshold(double mu) {
  // u32 < threshold has probability threshold / 2^32.
  return static_cast<std::uint64_t>(std::llround(mu * 4294967296.0));
}

std::string action_name(std::uint64_t id) { return std::to_string(id); }

}  // namespace

void FactorPair::validate() const {
  if (!(up > 0.0) || !std::isfinite(up))
    throw ConfigError("upward factor U must be a finite positive number");
  if (!(down > 0.0) || !std::isfinite(down))
    throw ConfigError("downward factor D must be a finite positive number");
}

IndividualModel::IndividualModel(std::vector<double> mu, std::vector<std::string> users)
    : mu_(std::move(mu)), users_(std::move(users)) {
  if (!users_.empty() && users_.size() != mu_.size())
    throw ConfigError("individual model: user id count does not match mu count");
  thresholds_.reserve(mu_.size());
  for (std::size_t v = 0; v < mu_.size(); ++v) {
    const double p = mu_[v];
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError("individual model: mu[" + std::to_string(v) + "] outside [0,1]");
    thresholds_.push_back(bernoulli_threshold(p));
  }
}

IndividualModel IndividualModel::homogeneous(std::size_t users, double p) {
  IndividualModel model(std::vector<double>(users, p));
  model.homogeneous_p_ = p;
  return model;
}

TickTally draw_tick(const IndividualModel& model, Stream& stream, std::int64_t tick,
                    std::vector<std::uint32_t>* adopters) {
  const auto thresholds = model.thresholds();
  std::int64_t plus = 0;
  if (adopters == nullptr) {
    for (const std::uint64_t thr : thresholds) plus += stream.next_u32() < thr;
  } else {
    for (std::size_t v = 0; v < thresholds.size(); ++v) {
      if (stream.next_u32() < thresholds[v]) {
        ++plus;
        adopters->push_back(static_cast<std::uint32_t>(v));
      }
    }
  }
  const auto m = static_cast<std::int64_t>(thresholds.size());
  return {tick, plus, m - plus};
}

double step_group_log(double log_prev, const TickTally& tally, const FactorPair& factors) {
  return log_prev + static_cast<double>(tally.y_plus) * std::log(factors.up) -
         static_cast<double>(tally.y_minus) * std::log(factors.down);
}

double step_group(double n_prev, const TickTally& tally, const FactorPair& factors) {
  if (!(n_prev > 0.0)) throw DomainError("step_group: n_prev must be positive");
  const double log_next = step_group_log(std::log(n_prev), tally, factors);
  const double next = std::exp(log_next);
  if (!std::isfinite(next) || log_next > kLogMax)
    throw OverflowError(tally.tick, "group count overflow");
  if (!(next > 0.0)) throw OverflowError(tally.tick, "group count underflow");
  return next;
}

void GroupTrajectory::finalize() {
  if (log_counts.empty()) {
    log_total = -std::numeric_limits<double>::infinity();
    return;
  }
  const double peak = *std::max_element(log_counts.begin(), log_counts.end());
  double acc = 0.0;
  for (const double lc : log_counts) acc += std::exp(lc - peak);
  log_total = peak + std::log(acc);
}

std::vector<double> GroupTrajectory::counts() const {
  std::vector<double> out;
  out.reserve(log_counts.size());
  for (std::size_t t = 0; t < log_counts.size(); ++t) {
    if (log_counts[t] > kLogMax)
      throw OverflowError(t0 + static_cast<long long>(t), "group count overflow on export");
    out.push_back(std::exp(log_counts[t]));
  }
  return out;
}

double GroupTrajectory::total() const {
  check_total_finite();
  return std::exp(log_total);
}

void GroupTrajectory::check_total_finite() const {
  if (log_total <= kLogMax) return;
  // Name the first tick at which the running total leaves the double range.
  double peak = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::size_t t = 0; t < log_counts.size(); ++t) {
    const double lc = log_counts[t];
    if (lc > peak) {
      acc = acc * std::exp(peak - lc) + 1.0;
      peak = lc;
    } else {
      acc += std::exp(lc - peak);
    }
    if (peak + std::log(acc) > kLogMax)
      throw OverflowError(t0 + static_cast<long long>(t), "cumulative total overflow");
  }
  throw OverflowError(t0 + static_cast<long long>(log_counts.size()) - 1,
                      "cumulative total overflow");
}

void SimulationConfig::validate() const {
  if (users == 0) throw ConfigError("user count m must be at least 1");
  factors.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("window rate lambda must be positive");
  if (max_ticks < 1) throw ConfigError("max ticks must be at least 1");
  if (actions < 1) throw ConfigError("ensemble size must be at least 1");
  std::visit(
      [&](const auto& src) {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, ExplicitMu>) {
          if (src.mu.size() != users)
            throw ConfigError("explicit mu vector has " + std::to_string(src.mu.size()) +
                              " entries, expected " + std::to_string(users));
          for (const double p : src.mu)
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("explicit mu outside [0,1]");
        } else if constexpr (std::is_same_v<T, HomogeneousMu>) {
          if (!(src.p >= 0.0 && src.p <= 1.0)) throw ConfigError("p must lie in [0,1]");
        } else {
          if (!(src.low >= 0.0 && src.low <= src.high && src.high <= 1.0))
            throw ConfigError("uniform mu range must satisfy 0 <= low <= high <= 1");
        }
      },
      mu);
}

IndividualModel resolve_model(const SimulationConfig& config) {
  config.validate();
  return std::visit(
      [&](const auto& src) -> IndividualModel {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, ExplicitMu>) {
          return IndividualModel(src.mu);
        } else if constexpr (std::is_same_v<T, HomogeneousMu>) {
          return IndividualModel::homogeneous(config.users, src.p);
        } else {
          Stream stream(config.seed, 0, StreamDomain::model);
          std::vector<double> mu(config.users);
          for (double& p : mu) p = src.low + (src.high - src.low) * stream.uniform();
          return IndividualModel(std::move(mu));
        }
      },
      config.mu);
}

std::int64_t draw_duration(double rate, std::int64_t max_ticks, Stream& stream) {
  const double t = stream.exponential(rate);
  if (!(t < static_cast<double>(max_ticks))) return max_ticks;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t)));
}

GroupTrajectory simulate_path(
    const IndividualModel& model, const FactorSchedule& schedule, std::int64_t ticks,
    Stream& stream,
    const std::function<void(std::int64_t, const std::vector<std::uint32_t>&)>& adopter_sink) {
  if (model.empty()) throw ConfigError("individual model is empty");
  GroupTrajectory traj;
  traj.log_counts.reserve(static_cast<std::size_t>(ticks) + 1);
  traj.tallies.reserve(static_cast<std::size_t>(ticks));
  traj.log_counts.push_back(0.0);
  std::vector<std::uint32_t> adopters;
  double log_n = 0.0;
  for (std::int64_t t = 0; t < ticks; ++t) {
    adopters.clear();
    const TickTally tally = draw_tick(model, stream, t, adopter_sink ? &adopters : nullptr);
    if (adopter_sink) adopter_sink(t, adopters);
    log_n = step_group_log(log_n, tally, schedule(t));
    traj.tallies.push_back(tally);
    traj.log_counts.push_back(log_n);
  }
  traj.finalize();
  return traj;
}

GroupTrajectory simulate_path(const IndividualModel& model, const FactorPair& factors,
                              std::int64_t ticks, Stream& stream) {
  if (model.empty()) throw ConfigError("individual model is empty");
  // Hot path for constant factors: no std::function dispatch per tick.
  const double log_up = std::log(factors.up);
  const double log_down = std::log(factors.down);
  GroupTrajectory traj;
  traj.log_counts.reserve(static_cast<std::size_t>(ticks) + 1);
  traj.tallies.reserve(static_cast<std::size_t>(ticks));
  traj.log_counts.push_back(0.0);
  double log_n = 0.0;
  for (std::int64_t t = 0; t < ticks; ++t) {
    const TickTally tally = draw_tick(model, stream, t);
    log_n = log_n + static_cast<double>(tally.y_plus) * log_up -
            static_cast<double>(tally.y_minus) * log_down;
    traj.tallies.push_back(tally);
    traj.log_counts.push_back(log_n);
  }
  traj.finalize();
  return traj;
}

GroupTrajectory simulate_action(const SimulationConfig& config, const IndividualModel& model,
                                std::uint64_t action_id, Stream& stream) {
  const std::int64_t ticks = draw_duration(config.lambda, config.max_ticks, stream);
  GroupTrajectory traj = simulate_path(model, config.factors, ticks, stream);
  traj.action_id = action_name(action_id);
  traj.check_total_finite();
  return traj;
}

GroupTrajectory simulate_action(const SimulationConfig& config, const IndividualModel& model,
                                std::uint64_t action_id) {
  Stream stream(config.seed, action_id);
  return simulate_action(config, model, action_id, stream);
}

namespace {

struct Slot {
  std::optional<GroupTrajectory> trajectory;
  std::string error;
};

Slot run_slot(const SimulationConfig& config, const IndividualModel& model, std::uint64_t id) {
  Slot slot;
  try {
    slot.trajectory = simulate_action(config, model, id);
  } catch (const OverflowError& e) {
    slot.error = e.what();
  }
  return slot;
}

EnsembleResult merge(std::vector<Slot>& slots) {
  EnsembleResult result;
  result.trajectories.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].trajectory)
      result.trajectories.push_back(std::move(*slots[i].trajectory));
    else
      result.failures.push_back({i, std::move(slots[i].error)});
  }
  return result;
}

}  // namespace

EnsembleResult simulate_ensemble(const SimulationConfig& config, const IndividualModel& model) {
  config.validate();
  if (model.size() != config.users)
    throw ConfigError("individual model size does not match the configured user count");
  std::vector<Slot> slots(config.actions);
  const auto n = static_cast<std::int64_t>(config.actions);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i)
    slots[static_cast<std::size_t>(i)] = run_slot(config, model, static_cast<std::uint64_t>(i));
  return merge(slots);
}

EnsembleResult simulate_ensemble(const SimulationConfig& config) {
  return simulate_ensemble(config, resolve_model(config));
}

EnsembleResult simulate_ensemble_serial(const SimulationConfig& config,
                                        const IndividualModel& model) {
  config.validate();
  if (model.size() != config.users)
    throw ConfigError("individual model size does not match the configured user count");
  std::vector<Slot> slots(config.actions);
  for (std::size_t i = 0; i < config.actions; ++i) slots[i] = run_slot(config, model, i);
  return merge(slots);
}

namespace {

double log_count_at(const IndividualModel& model, double log_up, double log_down,
                    std::int64_t horizon, std::uint64_t seed, std::uint64_t id) {
  Stream stream(seed, id);
  double log_n = 0.0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const TickTally tally = draw_tick(model, stream, t);
    log_n = log_n + static_cast<double>(tally.y_plus) * log_up -
            static_cast<double>(tally.y_minus) * log_down;
  }
  return log_n;
}

}  // namespace

std::vector<double> log_counts_at_horizon(const IndividualModel& model, const FactorPair& factors,
                                          std::int64_t horizon, std::size_t actions,
                                          std::uint64_t seed) {
  factors.validate();
  const double lu = std::log(factors.up);
  const double ld = std::log(factors.down);
  std::vector<double> out(actions);
  const auto n = static_cast<std::int64_t>(actions);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        log_count_at(model, lu, ld, horizon, seed, static_cast<std::uint64_t>(i));
  return out;
}

std::vector<double> log_counts_at_horizon_serial(const IndividualModel& model,
                                                 const FactorPair& factors, std::int64_t horizon,
                                                 std::size_t actions, std::uint64_t seed) {
  factors.validate();
  const double lu = std::log(factors.up);
  const double ld = std::log(factors.down);
  std::vector<double> out(actions);
  for (std::size_t i = 0; i < actions; ++i) out[i] = log_count_at(model, lu, ld, horizon, seed, i);
  return out;
}

}  // namespace m3d
