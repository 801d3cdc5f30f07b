#include "m3d/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "m3d/burst.hpp"
#include "m3d/dynamics.hpp"
#include "m3d/error.hpp"
#include "m3d/fitting.hpp"
#include "m3d/io.hpp"
#include "m3d/simulator.hpp"
#include "m3d/verify.hpp"

namespace m3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kE = 2.718281828459045;

struct Options {
  // shared
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir;
  std::string config;

  // simulation
  std::size_t users = 100;
  double p = 0.5;
  double mu_low = -1.0, mu_high = -1.0;
  std::string mu_file;
  double up = kE, down = kE;
  double lambda = 0.5;
  std::int64_t max_ticks = 10000;
  std::size_t actions = 1000;
  std::string plot_action;

  // synth
  std::string scenario = "homogeneous";
  std::size_t out_degree = 5;
  std::string tick_duration = "10min";
  std::size_t lead = 1;
  std::size_t spike_len = 2;

  // inputs
  std::string trajectories, events, edges, input, column;
  std::string action;
  double floor = 0.0;

  // estimation
  std::size_t first = 0;
  std::size_t window = 0;
  double train_fraction = 0.7;
  std::int64_t tick = -1;
  std::size_t bootstrap = 1000;
  std::size_t min_tail = 50;

  // bursts
  std::size_t w = 3;
  std::vector<std::size_t> k_values{5};
  std::string kind = "factor";
  double l2 = 1e-4;
  std::size_t max_iter = 5000;
  double tol = 1e-6;

  bool quick = false;
  std::size_t verify_bootstrap = 1000;
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

fs::path out_path(const Options& o, const std::string& name) { return fs::path(o.out_dir) / name; }

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

SimulationConfig simulation_config(const Options& o) {
  SimulationConfig c;
  c.users = o.users;
  c.factors = {o.up, o.down};
  c.lambda = o.lambda;
  c.max_ticks = o.max_ticks;
  c.actions = o.actions;
  c.seed = o.seed;
  if (o.mu_low >= 0.0 || o.mu_high >= 0.0)
    c.mu = UniformMu{std::max(0.0, o.mu_low), o.mu_high >= 0.0 ? o.mu_high : 0.1};
  else
    c.mu = HomogeneousMu{o.p};
  return c;
}

std::vector<GroupTrajectory> load_trajectories(const Options& o) {
  if (o.trajectories.empty()) throw ConfigError("--trajectories is required");
  auto trajs = read_trajectories(o.trajectories);
  if (trajs.empty()) throw InputError(o.trajectories + ": no trajectories");
  return trajs;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o, std::ostream& out) {
  SimulationConfig config = simulation_config(o);
  IndividualModel model;
  if (!o.mu_file.empty()) {
    model = read_mu_table(o.mu_file);
    config.users = model.size();
    config.mu = ExplicitMu{std::vector<double>(model.mu().begin(), model.mu().end())};
    config.validate();
  } else {
    config.validate();
    model = resolve_model(config);
  }
  const EnsembleResult result = simulate_ensemble(config, model);
  {
    auto f = open_output(out_path(o, "trajectories.jsonl"));
    write_trajectories(f, result.trajectories);
  }
  {
    auto f = open_output(out_path(o, "totals.csv"));
    f << "action_id,total,log_total\n";
    for (const GroupTrajectory& t : result.trajectories)
      f << t.action_id << ',' << format_double(t.total()) << ',' << format_double(t.log_total)
        << '\n';
  }
  json failures = json::array();
  for (const ActionFailure& f : result.failures)
    failures.push_back({{"action_id", f.action_id}, {"error", f.message}});
  json summary = {{"actions", config.actions},
                  {"simulated", result.trajectories.size()},
                  {"failed", std::move(failures)},
                  {"seed", config.seed},
                  {"users", config.users},
                  {"U", config.factors.up},
                  {"D", config.factors.down},
                  {"lambda", config.lambda}};
  try {
    const ModelSummary s = summarize(micro_to_meso(model), config.lambda);
    summary["model"] = {{"tau", s.tau},     {"delta_sq", s.delta_sq}, {"lambda", s.lambda},
                        {"alpha", s.alpha}, {"C", s.C},               {"alpha_alt", s.alpha_alt}};
  } catch (const NumericalError&) {
    summary["model"] = nullptr;
  }
  write_json(out_path(o, "simulation.json"), summary);
  if (!o.plot_action.empty()) {
    const auto it = std::find_if(result.trajectories.begin(), result.trajectories.end(),
                                 [&](const GroupTrajectory& t) { return t.action_id == o.plot_action; });
    if (it == result.trajectories.end()) throw InputError("no trajectory for action " + o.plot_action);
    auto f = open_output(out_path(o, "trajectory_" + o.plot_action + ".csv"));
    write_points(f, trajectory_points(*it));
  }
  double mean_log_total = 0.0;
  for (const GroupTrajectory& t : result.trajectories) mean_log_total += t.log_total;
  if (!result.trajectories.empty()) mean_log_total /= static_cast<double>(result.trajectories.size());
  out << "simulate: " << result.trajectories.size() << " trajectories, " << result.failures.size()
      << " failed, mean ln N " << format_double(mean_log_total) << " -> " << o.out_dir << '\n';
  return exit_ok;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthOptions s;
  s.sim = simulation_config(o);
  s.scenario = parse_scenario(o.scenario);
  s.p = o.p;
  if (o.mu_low >= 0.0) s.mu_low = o.mu_low;
  if (o.mu_high >= 0.0) s.mu_high = o.mu_high;
  s.out_degree = o.out_degree;
  s.tick_duration = o.tick_duration;
  s.burst.lead = o.lead;
  s.burst.w = o.w;
  s.burst.spike_len = o.spike_len;
  const SynthCorpus corpus = synth_corpus(s);
  write_corpus(corpus, s, o.out_dir);
  std::size_t bursts = 0;
  for (const auto& [id, ticks] : corpus.burst_ticks) bursts += ticks.size();
  out << "synth: " << to_string(s.scenario) << ", " << corpus.trajectories.size()
      << " trajectories, " << corpus.events.records.size() << " events, "
      << corpus.edges.edges.size() << " edges";
  if (s.scenario == Scenario::burst_injected) out << ", " << bursts << " injected bursts";
  out << " -> " << o.out_dir << '\n';
  return exit_ok;
}

int cmd_fit_mu(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.edges.empty() || o.events.empty()) throw ConfigError("--edges and --events are required");
  const EdgeList edges = read_edge_list(o.edges);
  const EventLog events = read_event_log(o.events);
  if (edges.self_loops || edges.duplicates)
    err << "fit-mu: dropped " << edges.self_loops << " self-loops and " << edges.duplicates
        << " duplicate edges\n";
  if (events.duplicates) err << "fit-mu: " << events.duplicates << " duplicate events (last wins)\n";
  const ObservedActions obs = make_observed(edges, events);
  std::vector<std::string> actions;
  if (o.action.empty()) actions = obs.actions();
  else actions = {o.action};

  auto table = open_output(out_path(o, "mu.csv"));
  table << "action_id,user_id,mu,status\n";
  json models = json::array();
  std::size_t clamped = 0, unobserved = 0;
  for (const std::string& a : actions) {
    MuFit fit = estimate_individual_model(obs, a, o.floor);
    clamped += fit.clamped;
    unobserved += fit.unobserved;
    for (std::size_t v = 0; v < obs.user_count(); ++v) {
      const MuEstimate e = estimate_mu(obs, a, obs.users()[v]);
      const char* status = e.status == MuEstimate::Status::ok        ? "ok"
                           : e.status == MuEstimate::Status::clamped ? "clamped"
                                                                      : "unobserved";
      table << a << ',' << obs.users()[v] << ',' << format_double(fit.model.mu(v)) << ','
            << status << '\n';
    }
    json rec = {{"action_id", a}, {"clamped", fit.clamped}, {"unobserved", fit.unobserved}};
    try {
      const ModelSummary s = summarize(micro_to_meso(fit.model), o.lambda);
      rec.update({{"tau", s.tau},     {"delta_sq", s.delta_sq}, {"lambda", s.lambda},
                  {"alpha", s.alpha}, {"C", s.C},               {"alpha_alt", s.alpha_alt}});
    } catch (const NumericalError& e) {
      rec["error"] = e.what();
    }
    models.push_back(std::move(rec));
  }
  write_json(out_path(o, "models.json"), models);
  if (clamped) err << "fit-mu: " << clamped << " estimates clamped to 1\n";
  out << "fit-mu: " << actions.size() << " actions x " << obs.user_count() << " users, "
      << clamped << " clamped, " << unobserved << " unobserved -> " << o.out_dir << '\n';
  return exit_ok;
}

std::size_t training_transitions(const GroupTrajectory& t, double fraction) {
  const std::size_t transitions = t.length() - 1;
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(transitions)));
}

int cmd_fit_factors(const Options& o, std::ostream& out) {
  const auto trajs = load_trajectories(o);
  auto table = open_output(out_path(o, "factors.csv"));
  table << "action_id,U,D,pairs_used,pairs_skipped,status\n";
  std::size_t ok = 0;
  for (const GroupTrajectory& t : trajs) {
    const std::size_t window = o.window > 0 ? o.window : training_transitions(t, o.train_fraction);
    try {
      if (t.tallies.empty()) throw InputError("no tallies");
      const FactorEstimate e = estimate_factors(t, o.first, window);
      table << t.action_id << ',' << format_double(e.factors.up) << ','
            << format_double(e.factors.down) << ',' << e.pairs_used << ',' << e.pairs_skipped
            << ",ok\n";
      ++ok;
    } catch (const Error& e) {
      table << t.action_id << ",,,0,0," << '"' << e.what() << "\"\n";
    }
  }
  if (ok == 0) throw NumericalError("factor estimation failed for every trajectory");
  out << "fit-factors: " << ok << " of " << trajs.size() << " trajectories estimated -> "
      << o.out_dir << '\n';
  return exit_ok;
}

int cmd_fit_lognormal(const Options& o, std::ostream& out) {
  std::vector<double> logs;
  std::int64_t tick = 0;
  if (!o.input.empty()) {
    for (const double x : read_numeric_column(o.input, o.column)) {
      if (!(x > 0.0)) throw DomainError("lognormal fit: sample " + format_double(x) + " is not positive");
      logs.push_back(std::log(x));
    }
  } else {
    if (o.tick < 0) throw ConfigError("--tick is required with --trajectories");
    tick = o.tick;
    for (const GroupTrajectory& t : load_trajectories(o))
      if (static_cast<std::int64_t>(t.length()) > tick)
        logs.push_back(t.log_counts[static_cast<std::size_t>(tick)]);
  }
  const LognormalFit fit = lognormal_mle_from_logs(logs, tick);
  json rec = {{"tick", fit.tick}, {"mean", fit.mean}, {"variance", fit.variance}, {"samples", fit.samples}};
  const QQPoints qq = qq_points_from_logs(logs, fit);
  rec["qq"] = {{"slope", qq.line.slope}, {"intercept", qq.line.intercept}, {"r_squared", qq.line.r_squared}};
  write_json(out_path(o, "lognormal.json"), rec);
  auto f = open_output(out_path(o, "qq.csv"));
  write_points(f, qq_plot_points(qq));
  out << "fit-lognormal: " << fit.samples << " samples, mean " << format_double(fit.mean)
      << ", variance " << format_double(fit.variance) << ", QQ R2 "
      << format_double(qq.line.r_squared) << " -> " << o.out_dir << '\n';
  return exit_ok;
}

int cmd_fit_powerlaw(const Options& o, std::ostream& out) {
  std::vector<double> values;
  if (!o.input.empty()) {
    values = read_numeric_column(o.input, o.column);
  } else {
    for (const GroupTrajectory& t : load_trajectories(o)) values.push_back(t.total());
  }
  for (const double v : values)
    if (!(v > 0.0)) throw DomainError("power-law fit: sample " + format_double(v) + " is not positive");
  const std::vector<double> samples = to_count_samples(values);
  PowerLawOptions popt;
  popt.min_tail = o.min_tail;
  popt.min_samples = std::min<std::size_t>(popt.min_samples, o.min_tail);
  PowerLawFit fit = powerlaw_fit(samples, popt);
  fit.p_value = powerlaw_pvalue(samples, fit, o.bootstrap, o.seed, popt);
  fit.rss = rss_geometric(samples, discrete_powerlaw_mass(fit), fit.x_min);
  json rec = {{"alpha", fit.alpha},
              {"model_alpha", fit.model_alpha()},
              {"x_min", fit.x_min},
              {"C", fit.C},
              {"ks", fit.ks},
              {"p_value", nullable(fit.p_value)},
              {"bootstrap", o.bootstrap},
              {"rss", nullable(fit.rss)},
              {"n_tail", fit.n_tail},
              {"n", fit.n}};
  write_json(out_path(o, "powerlaw.json"), rec);
  {
    auto f = open_output(out_path(o, "pdf_loglog.csv"));
    write_points(f, pdf_loglog_points(samples, fit.x_min));
  }
  {
    auto f = open_output(out_path(o, "ccdf_loglog.csv"));
    write_points(f, ccdf_loglog_points(samples));
  }
  out << "fit-powerlaw: alpha " << format_double(fit.alpha) << ", x_min "
      << format_double(fit.x_min) << ", KS " << format_double(fit.ks) << ", p "
      << (std::isnan(fit.p_value) ? std::string("undefined") : format_double(fit.p_value))
      << " -> " << o.out_dir << '\n';
  return exit_ok;
}

int cmd_predict_group(const Options& o, std::ostream& out) {
  const auto trajs = load_trajectories(o);
  auto table = open_output(out_path(o, "predictions.csv"));
  table << "action_id,t,log_observed,log_one_step,log_free_run\n";
  double abs_err = 0.0;
  std::size_t count = 0, used = 0;
  for (const GroupTrajectory& t : trajs) {
    const std::size_t train = training_transitions(t, o.train_fraction);
    FactorEstimate e;
    try {
      if (t.tallies.empty()) continue;
      e = estimate_factors(t, 0, train);
    } catch (const NumericalError&) {
      continue;
    }
    ++used;
    const auto one = one_step_log_forecasts(t, e.factors, train);
    const auto free = forecast_log_tail(t, e.factors, train);
    for (std::size_t j = 0; j < one.size(); ++j) {
      const std::size_t tick = train + 1 + j;
      table << t.action_id << ',' << tick << ',' << format_double(t.log_counts[tick]) << ','
            << format_double(one[j]) << ',' << format_double(free[j]) << '\n';
      abs_err += std::abs(one[j] - t.log_counts[tick]);
      ++count;
    }
  }
  if (used == 0) throw NumericalError("no trajectory had a usable training window");
  const double mae = count ? abs_err / static_cast<double>(count) : 0.0;
  write_json(out_path(o, "prediction_summary.json"),
             {{"trajectories", used}, {"predictions", count}, {"mean_abs_log_error", mae}});
  out << "predict-group: " << used << " trajectories, " << count
      << " one-step predictions, mean |log error| " << format_double(mae) << " -> " << o.out_dir
      << '\n';
  return exit_ok;
}

int cmd_detect_bursts(const Options& o, std::ostream& out, std::ostream& err) {
  const auto trajs = load_trajectories(o);
  auto table = open_output(out_path(o, "bursts.csv"));
  table << "action_id,tick\n";
  std::size_t bursts = 0, skipped = 0;
  for (const GroupTrajectory& t : trajs) {
    if (t.length() <= 2 * o.w) {
      ++skipped;
      continue;
    }
    const BurstLabelSeries labels = detect_bursts(t, o.w);
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
      if (labels.labels[i]) {
        table << t.action_id << ',' << t.t0 + static_cast<std::int64_t>(i) << '\n';
        ++bursts;
      }
  }
  if (skipped) err << "detect-bursts: " << skipped << " trajectories shorter than 2w+1 skipped\n";
  if (skipped == trajs.size())
    throw DomainError("every trajectory is too short for w = " + std::to_string(o.w));
  out << "detect-bursts: " << bursts << " bursts in " << trajs.size() - skipped
      << " trajectories (w=" << o.w << ") -> " << o.out_dir << '\n';
  return exit_ok;
}

TrainOptions train_options(const Options& o) {
  TrainOptions t;
  t.l2 = o.l2;
  t.max_iter = o.max_iter;
  t.tol = o.tol;
  return t;
}

json metrics_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"accuracy", m.accuracy},
          {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

void write_dataset(const fs::path& path, const BurstDataset& data,
                   const std::vector<GroupTrajectory>& trajs) {
  auto f = open_output(path);
  f << "action_id,tick";
  for (std::size_t c = 0; c < data.k; ++c) f << ",f" << c;
  f << ",label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    f << trajs[data.keys[r].action].action_id << ',' << data.keys[r].tick;
    for (std::size_t c = 0; c < data.k; ++c) f << ',' << format_double(data.raw.row(r)[c]);
    f << ',' << data.labels[r] << '\n';
  }
}

int cmd_predict_bursts(const Options& o, std::ostream& out) {
  const auto trajs = load_trajectories(o);
  if (o.k_values.size() != 1) throw ConfigError("predict-bursts takes a single --k");
  const FeatureKind kind = parse_feature_kind(o.kind);
  const BurstDataset data = build_dataset(trajs, o.k_values.front(), kind, o.w);
  auto [train, test] = split_chronological(data, o.train_fraction);
  if (test.size() == 0) throw InputError("test split is empty");
  const ClassifierModel model = train_logreg(train, train_options(o));
  const Metrics m = evaluate(model, test);
  write_dataset(out_path(o, "dataset.csv"), data, trajs);
  write_json(out_path(o, "classifier.json"),
             {{"kind", to_string(kind)},
              {"k", data.k},
              {"w", o.w},
              {"weights", model.weights},
              {"bias", model.bias},
              {"l2", model.l2},
              {"iterations", model.iterations},
              {"final_loss", model.final_loss},
              {"feature_mean", train.transform.mean},
              {"feature_scale", train.transform.scale}});
  write_json(out_path(o, "metrics.json"),
             {{"train_rows", train.size()}, {"test_rows", test.size()},
              {"skipped_rows", data.skipped}, {"test", metrics_json(m)}});
  out << "predict-bursts: " << to_string(kind) << " k=" << data.k << ", test P "
      << format_double(m.precision) << " R " << format_double(m.recall) << " F1 "
      << format_double(m.f1) << " -> " << o.out_dir << '\n';
  return exit_ok;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto trajs = load_trajectories(o);
  std::vector<FeatureKind> kinds;
  if (o.kind == "both") kinds = {FeatureKind::factor, FeatureKind::count};
  else kinds = {parse_feature_kind(o.kind)};
  SweepOptions opt;
  opt.w = o.w;
  opt.train_fraction = o.train_fraction;
  opt.train = train_options(o);
  auto table = open_output(out_path(o, "sweep.csv"));
  table << "kind,k,precision,recall,f1\n";
  std::map<std::string, double> best;
  for (const FeatureKind kind : kinds) {
    const SweepResult r = window_sweep(trajs, o.k_values, kind, opt);
    if (r.duplicates_removed)
      err << "sweep: removed " << r.duplicates_removed << " duplicate k values\n";
    double b = -1.0;
    for (const SweepRow& row : r.rows) {
      if (!row.ok) {
        err << "sweep: " << to_string(kind) << " k=" << row.k << " failed: " << row.error << '\n';
        table << to_string(kind) << ',' << row.k << ",nan,nan,nan\n";
        continue;
      }
      table << to_string(kind) << ',' << row.k << ',' << format_double(row.metrics.precision)
            << ',' << format_double(row.metrics.recall) << ',' << format_double(row.metrics.f1)
            << '\n';
      b = std::max(b, row.metrics.f1);
    }
    best[to_string(kind)] = b;
  }
  out << "sweep:";
  for (const auto& [kind, f1] : best)
    out << ' ' << kind << " best F1 " << (f1 < 0 ? std::string("n/a") : format_double(f1)) << ';';
  out << " -> " << o.out_dir << '\n';
  return exit_ok;
}

int cmd_verify(const Options& o, std::ostream& out) {
  VerifyOptions v;
  v.seed = o.seed;
  v.quick = o.quick;
  v.n_boot = o.verify_bootstrap;
  const auto rows = verify_theorems(v);
  auto table = open_output(out_path(o, "verify.csv"));
  table << "check,result,detail\n";
  std::size_t passed = 0;
  for (const CheckResult& r : rows) {
    table << '"' << r.name << "\"," << (r.passed ? "PASS" : "FAIL") << ",\"" << r.detail << "\"\n";
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  " << r.detail << '\n';
    passed += r.passed;
  }
  out << "verify-theorems: " << passed << " of " << rows.size() << " checks passed -> "
      << o.out_dir << '\n';
  return exit_ok;
}

/// Appends `--key value...` for every config entry not already on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw InputError("cannot open config " + config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(config_path + ": " + e.what());
  }
  if (!j.is_object()) throw InputError(config_path + ": expected a JSON object");
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  auto scalar = [&](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    if (value.is_array())
      for (const auto& v : value) args.push_back(scalar(v));
    else
      args.push_back(scalar(value));
  }
  return args;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Multiplicative group-dynamics simulator and estimation toolkit", "m3d"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--seed", o.seed, "RNG seed");
  app.add_option("--threads", o.threads, "worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--config", o.config, "JSON file of option values (command line wins)");

  auto sim_opts = [&](CLI::App* c) {
    c->add_option("--users", o.users, "user count m")->check(CLI::PositiveNumber);
    c->add_option("--p", o.p, "homogeneous adoption probability")->check(CLI::Range(0.0, 1.0));
    c->add_option("--mu-low", o.mu_low, "uniform mu range, lower end");
    c->add_option("--mu-high", o.mu_high, "uniform mu range, upper end");
    c->add_option("--U", o.up, "upward factor");
    c->add_option("--D", o.down, "downward factor");
    c->add_option("--lambda", o.lambda, "observation-window rate");
    c->add_option("--max-ticks", o.max_ticks, "duration cap (fixed length for burst corpora)");
    c->add_option("--actions", o.actions, "ensemble size");
  };
  auto traj_opt = [&](CLI::App* c) {
    c->add_option("--trajectories", o.trajectories, "trajectory JSONL file");
  };
  auto burst_opts = [&](CLI::App* c) {
    traj_opt(c);
    c->add_option("--w", o.w, "burst half-window (ticks)")->check(CLI::PositiveNumber);
    c->add_option("--train-fraction", o.train_fraction, "chronological training share");
    c->add_option("--l2", o.l2, "L2 strength");
    c->add_option("--max-iter", o.max_iter, "gradient-descent iteration cap");
    c->add_option("--tol", o.tol, "gradient-norm tolerance");
  };

  auto* simulate = app.add_subcommand("simulate", "simulate an ensemble of group trajectories");
  sim_opts(simulate);
  simulate->add_option("--mu-file", o.mu_file, "user_id,mu table");
  simulate->add_option("--plot-action", o.plot_action, "also write trajectory points for this action");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  sim_opts(synth);
  synth->add_option("--scenario", o.scenario, "homogeneous | heterogeneous | burst-injected");
  synth->add_option("--out-degree", o.out_degree, "edges per user in the random graph");
  synth->add_option("--tick-duration", o.tick_duration, "tick duration label for the sidecar");
  synth->add_option("--lead", o.lead, "ticks from factor spike to burst (burst scenario)");
  synth->add_option("--w", o.w, "burst half-window (burst scenario)");
  synth->add_option("--spike-len", o.spike_len, "transitions carrying the factor spike (burst scenario)");

  auto* fit_mu = app.add_subcommand("fit-mu", "estimate per-user adoption probabilities");
  fit_mu->add_option("--edges", o.edges, "src,dst edge list");
  fit_mu->add_option("--events", o.events, "event log");
  fit_mu->add_option("--action", o.action, "single action (default: all)");
  fit_mu->add_option("--floor", o.floor, "mu for users with no exposure")->check(CLI::Range(0.0, 1.0));
  fit_mu->add_option("--lambda", o.lambda, "window rate for the derived power-law summary");

  auto* fit_factors = app.add_subcommand("fit-factors", "estimate U and D per trajectory");
  traj_opt(fit_factors);
  fit_factors->add_option("--first", o.first, "first transition of the window");
  fit_factors->add_option("--window", o.window, "transitions in the window (0: training share)");
  fit_factors->add_option("--train-fraction", o.train_fraction, "training share when --window is 0");

  auto* fit_lognormal = app.add_subcommand("fit-lognormal", "lognormal fit and QQ points");
  traj_opt(fit_lognormal);
  fit_lognormal->add_option("--tick", o.tick, "tick to inspect in the trajectories");
  fit_lognormal->add_option("--input", o.input, "CSV of positive samples");
  fit_lognormal->add_option("--column", o.column, "column name in --input");

  auto* fit_powerlaw = app.add_subcommand("fit-powerlaw", "discrete power-law fit with x_min");
  traj_opt(fit_powerlaw);
  fit_powerlaw->add_option("--input", o.input, "CSV of totals");
  fit_powerlaw->add_option("--column", o.column, "column name in --input (default total, else last)");
  fit_powerlaw->add_option("--bootstrap", o.bootstrap, "bootstrap replicates (0: no p-value)");
  fit_powerlaw->add_option("--min-tail", o.min_tail, "smallest admissible tail");

  auto* predict_group = app.add_subcommand("predict-group", "forecast held-out ticks");
  traj_opt(predict_group);
  predict_group->add_option("--train-fraction", o.train_fraction, "training share of transitions");

  auto* detect = app.add_subcommand("detect-bursts", "label bursts");
  traj_opt(detect);
  detect->add_option("--w", o.w, "burst half-window (ticks)")->check(CLI::PositiveNumber);

  auto* predict_bursts = app.add_subcommand("predict-bursts", "train and test a burst classifier");
  burst_opts(predict_bursts);
  predict_bursts->add_option("--k", o.k_values, "feature window length");
  predict_bursts->add_option("--kind", o.kind, "factor | count");

  auto* sweep = app.add_subcommand("sweep", "burst prediction over feature window lengths");
  burst_opts(sweep);
  sweep->add_option("--k", o.k_values, "feature window lengths")->expected(1, -1);
  sweep->add_option("--kind", o.kind, "factor | count | both");

  auto* verify = app.add_subcommand("verify-theorems", "simulation checks of the emergence results");
  verify->add_option("--bootstrap", o.verify_bootstrap, "bootstrap replicates per p-value");
  verify->add_flag("--quick", o.quick, "smaller ensembles");

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "m3d: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    err << "m3d: " << e.what() << '\n';
    return e.kind() == ErrorKind::usage ? exit_usage : e.kind() == ErrorKind::input ? exit_input : exit_numerical;
  }

  if (o.out_dir.empty()) o.out_dir = env_or("M3D_OUTPUT_DIR", "m3d-out");
  if (o.threads == 0) o.threads = std::atoi(env_or("M3D_THREADS", "0").c_str());
  if (o.threads > 0) omp_set_num_threads(o.threads);

  try {
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (fit_mu->parsed()) return cmd_fit_mu(o, out, err);
    if (fit_factors->parsed()) return cmd_fit_factors(o, out);
    if (fit_lognormal->parsed()) return cmd_fit_lognormal(o, out);
    if (fit_powerlaw->parsed()) return cmd_fit_powerlaw(o, out);
    if (predict_group->parsed()) return cmd_predict_group(o, out);
    if (detect->parsed()) return cmd_detect_bursts(o, out, err);
    if (predict_bursts->parsed()) return cmd_predict_bursts(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (verify->parsed()) return cmd_verify(o, out);
  } catch (const Error& e) {
    err << "m3d: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::usage: return exit_usage;
      case ErrorKind::input: return exit_input;
      case ErrorKind::numerical: return exit_numerical;
    }
  } catch (const std::bad_alloc&) {
    err << "m3d: out of memory\n";
    return exit_numerical;
  }
  return exit_usage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace m3d
