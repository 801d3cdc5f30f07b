#include "m3d/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "m3d/error.hpp"

namespace m3d {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

[[noreturn]] void bad_row(const std::string& source, std::size_t lineno, const std::string& why) {
  throw InputError(source + ":" + std::to_string(lineno) + ": " + why);
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  return res.ec == std::errc() && res.ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

EventLog parse_event_log(std::istream& in, const std::string& source) {
  EventLog log;
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw InputError(source + ": missing header");
  const auto header = split_csv(line);
  if (header == std::vector<std::string>{"action_id", "user_id", "tick", "value"})
    log.has_value_column = true;
  else if (header == std::vector<std::string>{"action_id", "user_id", "tick"})
    log.has_value_column = false;
  else
    bad_row(source, lineno, "expected header action_id,user_id,tick[,value]");

  const std::size_t columns = log.has_value_column ? 4 : 3;
  std::map<std::tuple<std::string, std::string, std::int64_t>, std::size_t> seen;
  while (next_line(in, line, lineno)) {
    auto cells = split_csv(line);
    if (cells.size() != columns)
      bad_row(source, lineno, "expected " + std::to_string(columns) + " columns, got " +
                                  std::to_string(cells.size()));
    EventRecord rec;
    rec.action_id = std::move(cells[0]);
    rec.user_id = std::move(cells[1]);
    if (rec.action_id.empty() || rec.user_id.empty()) bad_row(source, lineno, "empty id");
    if (!parse_number(cells[2], rec.tick) || rec.tick < 0)
      bad_row(source, lineno, "tick must be a non-negative integer, got '" + cells[2] + "'");
    if (log.has_value_column) {
      const std::string& v = cells[3];
      if (v == "1" || v == "+1") rec.value = 1;
      else if (v == "-1") rec.value = -1;
      else bad_row(source, lineno, "value must be +1 or -1, got '" + v + "'");
    }
    auto key = std::make_tuple(rec.action_id, rec.user_id, rec.tick);
    const auto it = seen.find(key);
    if (it != seen.end()) {
      log.records[it->second] = std::move(rec);
      ++log.duplicates;
    } else {
      seen.emplace(std::move(key), log.records.size());
      log.records.push_back(std::move(rec));
    }
  }
  return log;
}

EventLog read_event_log(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_event_log(in, path.string());
}

void write_event_log(std::ostream& out, const EventLog& log) {
  out << (log.has_value_column ? "action_id,user_id,tick,value\n" : "action_id,user_id,tick\n");
  for (const EventRecord& r : log.records) {
    out << r.action_id << ',' << r.user_id << ',' << r.tick;
    if (log.has_value_column) out << ',' << r.value;
    out << '\n';
  }
}

EdgeList parse_edge_list(std::istream& in, const std::string& source) {
  EdgeList list;
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) return list;
  if (split_csv(line) != std::vector<std::string>{"src", "dst"})
    bad_row(source, lineno, "expected header src,dst");
  std::set<std::pair<std::string, std::string>> seen;
  while (next_line(in, line, lineno)) {
    auto cells = split_csv(line);
    if (cells.size() != 2)
      bad_row(source, lineno, "expected 2 columns, got " + std::to_string(cells.size()));
    if (cells[0].empty() || cells[1].empty()) bad_row(source, lineno, "empty id");
    if (cells[0] == cells[1]) {
      ++list.self_loops;
      continue;
    }
    std::pair<std::string, std::string> edge{std::move(cells[0]), std::move(cells[1])};
    if (!seen.insert(edge).second) {
      ++list.duplicates;
      continue;
    }
    list.edges.push_back(std::move(edge));
  }
  return list;
}

EdgeList read_edge_list(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_edge_list(in, path.string());
}

void write_edge_list(std::ostream& out, const EdgeList& edges) {
  out << "src,dst\n";
  for (const auto& [s, d] : edges.edges) out << s << ',' << d << '\n';
}

ObservedActions make_observed(const EdgeList& edges, const EventLog& events) {
  ObservedActions obs;
  for (const auto& [s, d] : edges.edges) obs.add_edge(s, d);
  for (const EventRecord& r : events.records) {
    if (!obs.has_user(r.user_id))
      throw InputError("event for action " + r.action_id + " names user '" + r.user_id +
                       "' who is not in the network");
    obs.add_event(r.tick, r.user_id, r.action_id, r.value);
  }
  return obs;
}

std::vector<TickTally> tallies_from_events(const EventLog& log, const std::string& action,
                                           std::size_t users) {
  std::map<std::int64_t, std::set<std::string>> adopters;
  std::int64_t last = -1;
  for (const EventRecord& r : log.records) {
    if (r.action_id != action) continue;
    last = std::max(last, r.tick);
    if (r.value == 1) adopters[r.tick].insert(r.user_id);
  }
  if (last < 0) throw InputError("no events for action " + action);
  std::vector<TickTally> out;
  for (std::int64_t t = 0; t <= last; ++t) {
    const auto it = adopters.find(t);
    const auto plus = static_cast<std::int64_t>(it == adopters.end() ? 0 : it->second.size());
    if (plus > static_cast<std::int64_t>(users))
      throw InputError("action " + action + " has more adopters at tick " + std::to_string(t) +
                       " than there are users");
    out.push_back({t, plus, static_cast<std::int64_t>(users) - plus});
  }
  return out;
}

void write_mu_table(std::ostream& out, const IndividualModel& model) {
  out << "user_id,mu\n";
  for (std::size_t v = 0; v < model.size(); ++v) {
    if (model.users().empty()) out << 'u' << v;
    else out << model.users()[v];
    out << ',' << format_double(model.mu(v)) << '\n';
  }
}

IndividualModel read_mu_table(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  const std::string source = path.string();
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno) || split_csv(line) != std::vector<std::string>{"user_id", "mu"})
    throw InputError(source + ": expected header user_id,mu");
  std::vector<double> mu;
  std::vector<std::string> users;
  while (next_line(in, line, lineno)) {
    const auto cells = split_csv(line);
    double value = 0.0;
    if (cells.size() != 2 || cells[0].empty() || !parse_number(cells[1], value))
      bad_row(source, lineno, "expected user_id,mu");
    if (!(value >= 0.0 && value <= 1.0)) bad_row(source, lineno, "mu outside [0,1]");
    users.push_back(cells[0]);
    mu.push_back(value);
  }
  if (mu.empty()) throw InputError(source + ": no users");
  return IndividualModel(std::move(mu), std::move(users));
}

void write_trajectory(std::ostream& out, const GroupTrajectory& traj) {
  // Built by hand so that every double uses format_double and the key order is fixed.
  auto array = [&](const std::vector<double>& xs, bool exponentiate) {
    out << '[';
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out << ',';
      const double v = exponentiate ? std::exp(xs[i]) : xs[i];
      if (std::isfinite(v)) out << format_double(v);
      else out << "null";
    }
    out << ']';
  };
  out << "{\"action_id\":" << json(traj.action_id).dump() << ",\"t0\":" << traj.t0
      << ",\"counts\":";
  array(traj.log_counts, true);
  const double total = std::exp(traj.log_total);
  out << ",\"total\":" << (std::isfinite(total) ? format_double(total) : "null")
      << ",\"log_counts\":";
  array(traj.log_counts, false);
  out << ",\"log_total\":" << format_double(traj.log_total);
  if (!traj.tallies.empty()) {
    out << ",\"y_plus\":[";
    for (std::size_t i = 0; i < traj.tallies.size(); ++i)
      out << (i ? "," : "") << traj.tallies[i].y_plus;
    out << "],\"y_minus\":[";
    for (std::size_t i = 0; i < traj.tallies.size(); ++i)
      out << (i ? "," : "") << traj.tallies[i].y_minus;
    out << ']';
  }
  out << "}\n";
}

void write_trajectories(std::ostream& out, std::span<const GroupTrajectory> trajs) {
  for (const GroupTrajectory& t : trajs) write_trajectory(out, t);
}

std::vector<GroupTrajectory> parse_trajectories(std::istream& in, const std::string& source) {
  std::vector<GroupTrajectory> out;
  std::string line;
  std::size_t lineno = 0;
  while (next_line(in, line, lineno)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      bad_row(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    try {
      GroupTrajectory traj;
      const auto& id = j.at("action_id");
      traj.action_id = id.is_string() ? id.get<std::string>() : id.dump();
      traj.t0 = j.value("t0", std::int64_t{0});
      if (j.contains("log_counts")) {
        traj.log_counts = j.at("log_counts").get<std::vector<double>>();
      } else {
        for (const auto& c : j.at("counts")) {
          const double v = c.get<double>();
          if (!(v > 0.0)) bad_row(source, lineno, "counts must be positive");
          traj.log_counts.push_back(std::log(v));
        }
      }
      if (traj.log_counts.empty()) bad_row(source, lineno, "empty trajectory");
      if (j.contains("y_plus") || j.contains("y_minus")) {
        const auto plus = j.at("y_plus").get<std::vector<std::int64_t>>();
        const auto minus = j.at("y_minus").get<std::vector<std::int64_t>>();
        if (plus.size() != minus.size() || plus.size() + 1 != traj.log_counts.size())
          bad_row(source, lineno, "y_plus / y_minus must have one entry per transition");
        for (std::size_t t = 0; t < plus.size(); ++t) {
          if (plus[t] < 0 || minus[t] < 0) bad_row(source, lineno, "negative tally");
          traj.tallies.push_back({static_cast<std::int64_t>(t), plus[t], minus[t]});
        }
      }
      traj.finalize();
      out.push_back(std::move(traj));
    } catch (const json::exception& e) {
      bad_row(source, lineno, std::string("bad trajectory record: ") + e.what());
    }
  }
  return out;
}

std::vector<GroupTrajectory> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_trajectories(in, path.string());
}

std::vector<double> read_numeric_column(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in = open_input(path);
  const std::string source = path.string();
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> col;
  bool first = true;
  while (next_line(in, line, lineno)) {
    const auto cells = split_csv(line);
    if (first) {
      first = false;
      double probe = 0.0;
      const bool header = std::any_of(cells.begin(), cells.end(),
                                      [&](const std::string& c) { return !parse_number(c, probe); });
      if (header) {
        const std::string want = column.empty() ? "total" : column;
        const auto it = std::find(cells.begin(), cells.end(), want);
        if (it != cells.end()) col = static_cast<std::size_t>(it - cells.begin());
        else if (!column.empty()) bad_row(source, lineno, "no column named '" + column + "'");
        else col = cells.size() - 1;
        continue;
      }
      if (!column.empty()) bad_row(source, lineno, "no header to look up column '" + column + "'");
      col = cells.size() - 1;
    }
    if (*col >= cells.size()) bad_row(source, lineno, "missing column " + std::to_string(*col + 1));
    double v = 0.0;
    if (!parse_number(cells[*col], v)) bad_row(source, lineno, "not a number: '" + cells[*col] + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(source + ": no numeric rows");
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::homogeneous: return "homogeneous";
    case Scenario::heterogeneous: return "heterogeneous";
    case Scenario::burst_injected: return "burst-injected";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  if (text == "homogeneous") return Scenario::homogeneous;
  if (text == "heterogeneous") return Scenario::heterogeneous;
  if (text == "burst-injected" || text == "burst") return Scenario::burst_injected;
  throw ConfigError("unknown scenario '" + text +
                    "' (expected homogeneous, heterogeneous or burst-injected)");
}

void BurstScenario::validate() const {
  if (lead < 1 || lead > 3) throw ConfigError("burst lead must be 1, 2 or 3 ticks");
  if (w < 1) throw ConfigError("burst half-window must be at least 1");
  if (spike_len < 2) throw ConfigError("burst spike must span at least 2 transitions");
  if (w > lead + spike_len)
    throw ConfigError("burst half-window must not exceed lead + spike length (the rising run)");
  growth.validate();
  spike.validate();
  decay.validate();
}

void SynthOptions::validate() const {
  sim.validate();
  if (scenario == Scenario::heterogeneous) {
    if (!(mu_low >= 0.0 && mu_low <= mu_high && mu_high <= 1.0))
      throw ConfigError("heterogeneous mu range must satisfy 0 <= low <= high <= 1");
  } else if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("p must lie in [0, 1]");
  }
  if (scenario == Scenario::burst_injected) burst.validate();
  if (sim.users > 1 && out_degree >= sim.users)
    throw ConfigError("out-degree must be smaller than the user count");
}

namespace {

std::string user_name(std::size_t v) { return "u" + std::to_string(v); }

/// Peak ticks and the per-transition factor schedule for one burst action.
struct BurstPlan {
  std::vector<std::int64_t> spikes;
  std::vector<std::int64_t> peaks;
};

BurstPlan plan_bursts(const BurstScenario& b, std::int64_t length, Stream& stream) {
  BurstPlan plan;
  const auto lead = static_cast<std::int64_t>(b.lead);
  const auto w = static_cast<std::int64_t>(b.w);
  const auto len = static_cast<std::int64_t>(b.spike_len);
  const std::int64_t min_gap = lead + w + len + 1;
  std::int64_t s = w + len + static_cast<std::int64_t>(stream.below(b.extra_gap + 1));
  while (s + lead <= length - 1 - w) {
    plan.spikes.push_back(s);
    plan.peaks.push_back(s + lead);
    s += min_gap + static_cast<std::int64_t>(stream.below(b.extra_gap + 1));
  }
  return plan;
}

/// Factors for the transition into tick j.
FactorPair burst_factors(const BurstScenario& b, const BurstPlan& plan, std::int64_t j) {
  const auto len = static_cast<std::int64_t>(b.spike_len);
  if (plan.spikes.empty() || j <= plan.spikes.front() - len) return b.growth;
  const auto lead = static_cast<std::int64_t>(b.lead);
  for (const std::int64_t s : plan.spikes) {
    if (j > s - len && j <= s) return b.spike;
    if (j > s && j <= s + lead) return b.growth;
  }
  return b.decay;
}

EdgeList random_graph(std::size_t users, std::size_t out_degree, std::uint64_t seed) {
  EdgeList list;
  if (users < 2) return list;
  for (std::size_t v = 0; v < users; ++v) {
    Stream stream(seed, v, StreamDomain::graph);
    std::set<std::size_t> targets;
    while (targets.size() < out_degree) {
      const auto u = static_cast<std::size_t>(stream.below(users));
      if (u != v) targets.insert(u);
    }
    for (const std::size_t u : targets) list.edges.emplace_back(user_name(v), user_name(u));
  }
  return list;
}

struct ActionOutput {
  std::optional<GroupTrajectory> traj;
  std::vector<std::pair<std::int64_t, std::uint32_t>> adoptions;
  std::vector<std::int64_t> peaks;
  std::string error;
};

}  // namespace

SynthCorpus synth_corpus(const SynthOptions& options) {
  options.validate();
  SimulationConfig sim = options.sim;
  switch (options.scenario) {
    case Scenario::heterogeneous: sim.mu = UniformMu{options.mu_low, options.mu_high}; break;
    default: sim.mu = HomogeneousMu{options.p}; break;
  }

  SynthCorpus corpus;
  IndividualModel base = resolve_model(sim);
  std::vector<std::string> names(sim.users);
  for (std::size_t v = 0; v < sim.users; ++v) names[v] = user_name(v);
  const std::vector<double> mu(base.mu().begin(), base.mu().end());
  corpus.model = IndividualModel(mu, names);
  corpus.edges = random_graph(sim.users, options.out_degree, sim.seed);

  const bool bursty = options.scenario == Scenario::burst_injected;
  std::vector<ActionOutput> outputs(sim.actions);
  const auto n = static_cast<std::int64_t>(sim.actions);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::uint64_t>(i);
    ActionOutput& out = outputs[static_cast<std::size_t>(i)];
    auto sink = [&out](std::int64_t tick, const std::vector<std::uint32_t>& adopters) {
      for (const std::uint32_t v : adopters) out.adoptions.emplace_back(tick, v);
    };
    try {
      Stream stream(sim.seed, id);
      GroupTrajectory traj;
      if (bursty) {
        Stream schedule_stream(sim.seed, id, StreamDomain::schedule);
        const BurstPlan plan = plan_bursts(options.burst, sim.max_ticks, schedule_stream);
        traj = simulate_path(
            corpus.model,
            [&](std::int64_t t) { return burst_factors(options.burst, plan, t + 1); },
            sim.max_ticks, stream, sink);
        out.peaks = plan.peaks;
      } else {
        const std::int64_t ticks = draw_duration(sim.lambda, sim.max_ticks, stream);
        const FactorPair f = sim.factors;
        traj = simulate_path(
            corpus.model, [f](std::int64_t) { return f; }, ticks, stream, sink);
      }
      traj.action_id = std::to_string(id);
      traj.check_total_finite();
      out.traj = std::move(traj);
    } catch (const OverflowError& e) {
      out.error = e.what();
      out.adoptions.clear();
    }
  }

  corpus.events.has_value_column = false;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    ActionOutput& out = outputs[i];
    const std::string id = std::to_string(i);
    if (!out.traj) {
      corpus.failures.push_back({i, out.error});
      continue;
    }
    for (const auto& [tick, v] : out.adoptions)
      corpus.events.records.push_back({id, names[v], tick, 1});
    if (bursty) corpus.burst_ticks[id] = out.peaks;
    corpus.trajectories.push_back(std::move(*out.traj));
  }
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const SynthOptions& options,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto out = open_output(dir / "edges.csv");
    write_edge_list(out, corpus.edges);
  }
  {
    auto out = open_output(dir / "mu.csv");
    write_mu_table(out, corpus.model);
  }
  {
    auto out = open_output(dir / "events.csv");
    write_event_log(out, corpus.events);
  }
  {
    auto out = open_output(dir / "trajectories.jsonl");
    write_trajectories(out, corpus.trajectories);
  }

  const SimulationConfig& sim = options.sim;
  json side;
  side["scenario"] = to_string(options.scenario);
  side["seed"] = sim.seed;
  side["users"] = sim.users;
  side["actions"] = sim.actions;
  side["max_ticks"] = sim.max_ticks;
  side["lambda"] = sim.lambda;
  side["tick_duration"] = options.tick_duration;
  side["out_degree"] = options.out_degree;
  if (options.scenario == Scenario::heterogeneous) {
    side["mu_low"] = options.mu_low;
    side["mu_high"] = options.mu_high;
  } else {
    side["p"] = options.p;
  }
  if (options.scenario == Scenario::burst_injected) {
    const BurstScenario& b = options.burst;
    side["burst"] = {{"lead", b.lead},
                     {"w", b.w},
                     {"spike_len", b.spike_len},
                     {"extra_gap", b.extra_gap},
                     {"growth", {b.growth.up, b.growth.down}},
                     {"spike", {b.spike.up, b.spike.down}},
                     {"decay", {b.decay.up, b.decay.down}}};
    json ticks = json::object();
    for (const auto& [id, t] : corpus.burst_ticks) ticks[id] = t;
    side["burst_ticks"] = std::move(ticks);
  } else {
    side["U"] = sim.factors.up;
    side["D"] = sim.factors.down;
  }
  try {
    const GroupModelParams meso = micro_to_meso(corpus.model);
    side["tau"] = meso.tau;
    side["delta_sq"] = meso.delta_sq;
  } catch (const NumericalError&) {
    side["tau"] = nullptr;
    side["delta_sq"] = nullptr;
  }
  json failed = json::array();
  for (const ActionFailure& f : corpus.failures) failed.push_back({{"action_id", f.action_id}, {"error", f.message}});
  side["failed_actions"] = std::move(failed);
  auto out = open_output(dir / "sidecar.json");
  out << side.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Plot points

const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::pdf_loglog: return "pdf-loglog";
    case PlotKind::ccdf_loglog: return "ccdf-loglog";
    case PlotKind::qq: return "qq";
    case PlotKind::trajectory: return "trajectory";
  }
  return "?";
}

PlotKind parse_plot_kind(const std::string& text) {
  if (text == "pdf-loglog") return PlotKind::pdf_loglog;
  if (text == "ccdf-loglog") return PlotKind::ccdf_loglog;
  if (text == "qq") return PlotKind::qq;
  if (text == "trajectory") return PlotKind::trajectory;
  throw ConfigError("unknown plot kind '" + text + "'");
}

PlotPoints pdf_loglog_points(std::span<const double> samples, double x_min) {
  const BinnedDensity bins = bin_geometric(samples, x_min);
  PlotPoints p{"x", "density", {}, {}};
  for (std::size_t i = 0; i < bins.density.size(); ++i) {
    if (bins.count[i] == 0) continue;
    p.x.push_back(std::sqrt(bins.lo[i] * bins.hi[i]));
    p.y.push_back(bins.density[i]);
  }
  return p;
}

PlotPoints ccdf_loglog_points(std::span<const double> samples) {
  if (samples.empty()) throw InputError("ccdf: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  PlotPoints p{"x", "ccdf", {}, {}};
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    p.x.push_back(sorted[i]);
    p.y.push_back(static_cast<double>(sorted.size() - i) / n);
  }
  return p;
}

PlotPoints qq_plot_points(const QQPoints& qq) {
  return {"theoretical", "empirical", qq.theoretical, qq.empirical};
}

PlotPoints trajectory_points(const GroupTrajectory& traj) {
  PlotPoints p{"t", "n", {}, {}};
  for (std::size_t t = 0; t < traj.length(); ++t) {
    p.x.push_back(static_cast<double>(traj.t0) + static_cast<double>(t));
    p.y.push_back(std::exp(traj.log_counts[t]));
  }
  return p;
}

void write_points(std::ostream& out, const PlotPoints& points) {
  if (points.x.empty()) throw InputError("no points to write");
  out << points.x_name << ',' << points.y_name << '\n';
  for (std::size_t i = 0; i < points.x.size(); ++i)
    out << format_double(points.x[i]) << ',' << format_double(points.y[i]) << '\n';
}

}  // namespace m3d
