#pragma once

// Text formats: event logs and edge lists (CSV with a header), trajectories
// (one JSON object per line), corpus sidecars (JSON) and two-column point
// files for plotting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "m3d/dynamics.hpp"
#include "m3d/fitting.hpp"
#include "m3d/simulator.hpp"

namespace m3d {

/// Shortest decimal that round-trips; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);

struct EventRecord {
  std::string action_id;
  std::string user_id;
  std::int64_t tick = 0;
  int value = 1;  // +1 or -1
};

struct EventLog {
  std::vector<EventRecord> records;  // file order; a duplicate replaces its earlier row in place
  bool has_value_column = true;
  std::size_t duplicates = 0;
};

/// Header `action_id,user_id,tick[,value]`. Without the value column every
/// row is an adoption (+1). Errors name the source and line.
EventLog parse_event_log(std::istream& in, const std::string& source = "<events>");
EventLog read_event_log(const std::filesystem::path& path);

void write_event_log(std::ostream& out, const EventLog& log);

struct EdgeList {
  std::vector<std::pair<std::string, std::string>> edges;  // first-seen order
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

/// Header `src,dst`. An empty input (no header either) is an empty edge set.
EdgeList parse_edge_list(std::istream& in, const std::string& source = "<edges>");
EdgeList read_edge_list(const std::filesystem::path& path);

void write_edge_list(std::ostream& out, const EdgeList& edges);

/// Network from the edge list, then every event. Unknown users in the event
/// log are an InputError.
ObservedActions make_observed(const EdgeList& edges, const EventLog& events);

/// Per-tick tallies of `action` over m users, reading absent records as -1.
/// Ticks run 0 .. last tick in the log for that action.
std::vector<TickTally> tallies_from_events(const EventLog& log, const std::string& action,
                                           std::size_t users);

/// Two-column `user_id,mu` table.
void write_mu_table(std::ostream& out, const IndividualModel& model);
IndividualModel read_mu_table(const std::filesystem::path& path);

/// One JSON object per line with action_id, t0, counts, total, log_counts,
/// log_total and, when known, y_plus / y_minus. Counts beyond the double range
/// are written as null; the log fields are authoritative on read.
void write_trajectory(std::ostream& out, const GroupTrajectory& traj);
void write_trajectories(std::ostream& out, std::span<const GroupTrajectory> trajs);
std::vector<GroupTrajectory> parse_trajectories(std::istream& in,
                                                const std::string& source = "<trajectories>");
std::vector<GroupTrajectory> read_trajectories(const std::filesystem::path& path);

/// One numeric column of a CSV. With a header the named column is used
/// ("total" when unnamed and present, otherwise the last one); without a
/// header, the last column.
std::vector<double> read_numeric_column(const std::filesystem::path& path,
                                        const std::string& column = "");

enum class Scenario { homogeneous, heterogeneous, burst_injected };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& text);

/// Settings for the burst-injected generator. Between spikes the series
/// decays; a spike raises U sharply for the `spike_len` transitions ending at
/// tick s, a milder rise follows until the peak at s + lead, and decay resumes.
struct BurstScenario {
  std::size_t lead = 1;  // 1..3
  std::size_t w = 3;
  std::size_t spike_len = 2;
  FactorPair growth{1.05, 0.95};
  FactorPair spike{4.0, 0.95};
  FactorPair decay{0.95, 1.05};
  std::size_t extra_gap = 4;  // random slack added to the minimum spike spacing

  void validate() const;
};

struct SynthOptions {
  SimulationConfig sim;  // mu source is replaced according to the scenario
  Scenario scenario = Scenario::homogeneous;
  double p = 0.5;                                // homogeneous and burst scenarios
  double mu_low = 0.0, mu_high = 0.1;            // heterogeneous
  std::size_t out_degree = 5;
  std::string tick_duration = "10min";
  BurstScenario burst;

  void validate() const;
};

struct SynthCorpus {
  IndividualModel model;
  EdgeList edges;
  std::vector<GroupTrajectory> trajectories;
  std::vector<ActionFailure> failures;
  EventLog events;  // adoption-only, ordered by action then tick then user
  std::map<std::string, std::vector<std::int64_t>> burst_ticks;  // burst scenario only
};

/// Generates everything in memory. Trajectories with a fixed length of
/// sim.max_ticks transitions are used for the burst scenario; the others draw
/// durations as the simulator does.
SynthCorpus synth_corpus(const SynthOptions& options);

/// Writes edges.csv, mu.csv, events.csv, trajectories.jsonl and sidecar.json
/// under `dir` (created if needed). Events are adoption-only.
void write_corpus(const SynthCorpus& corpus, const SynthOptions& options,
                  const std::filesystem::path& dir);

enum class PlotKind { pdf_loglog, ccdf_loglog, qq, trajectory };

const char* to_string(PlotKind k);
PlotKind parse_plot_kind(const std::string& text);

struct PlotPoints {
  std::string x_name, y_name;
  std::vector<double> x, y;
};

/// Ratio-2 bins from x_min (geometric bin centre, density).
PlotPoints pdf_loglog_points(std::span<const double> samples, double x_min);
/// (x, fraction of samples >= x) at every distinct x.
PlotPoints ccdf_loglog_points(std::span<const double> samples);
PlotPoints qq_plot_points(const QQPoints& qq);
PlotPoints trajectory_points(const GroupTrajectory& traj);

/// Header then `x,y` rows. Throws InputError for an empty point set.
void write_points(std::ostream& out, const PlotPoints& points);

/// Opens for writing, creating parent directories; errors name the path.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace m3d
