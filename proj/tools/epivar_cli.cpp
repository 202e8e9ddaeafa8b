// epivar command-line front end.
//
//   epivar simulate          write a synthetic panel from a named scenario
//   epivar calibrate         fit + threshold calibration on a CSV panel
//   epivar detect            full offline pipeline (single or multiple)
//   epivar detect-online     sequential monitor over the test slice
//   epivar evaluate          score detection CSVs against known windows
//   epivar reproduce-tables  Monte-Carlo power/Hausdorff/count tables
//
// Exit codes: 0 success, 2 input/configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "epivar/cli_io.hpp"
#include "epivar/evaluation.hpp"
#include "epivar/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace epivar;

namespace {

// Flags that override values from --config. Unset flags leave the file (or
// built-in default) in place.
struct Overrides {
  std::string config_path;
  std::optional<int> q;
  std::optional<std::string> method;
  std::optional<std::string> scheme;
  std::optional<int> count;
  std::optional<std::uint64_t> interval_seed;
  std::optional<double> decay;
  std::optional<int> min_length;
  std::optional<double> constant;
  std::optional<std::string> sigma;
  std::optional<double> quantile;
  std::optional<int> calibration_runs;
  std::optional<std::string> calibration;
  std::optional<std::string> penalty;
  std::optional<double> penalty_lambda;
  std::vector<double> split;
  std::optional<std::uint64_t> seed;
  bool difference = false;
  bool multiple = false;
  bool header = false;
  bool label_column = false;
  std::optional<std::string> delimiter;
  std::optional<int> online_start;

  void attach(CLI::App* cmd, bool online) {
    cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--q", q, "VAR order");
    cmd->add_option("--scheme", scheme, "interval scheme: random | seeded");
    cmd->add_option("--count", count, "number of random intervals");
    cmd->add_option("--interval-seed", interval_seed, "seed of the random interval draw");
    cmd->add_option("--decay", decay, "seeded-interval decay a in [1/2, 1)");
    cmd->add_option("--min-length", min_length, "minimum interval length L (0 = pq + 1)");
    cmd->add_option("--lambda-constant", constant, "C in lambda = C sqrt(L (2 log p + log T))");
    cmd->add_option("--sigma", sigma, "noise covariance: identity | estimated");
    cmd->add_option("--quantile", quantile, "threshold quantile");
    cmd->add_option("--calibration-runs", calibration_runs, "null runs B");
    cmd->add_option("--penalty", penalty, "baseline penalty: none | ridge | lasso");
    cmd->add_option("--penalty-lambda", penalty_lambda, "explicit baseline penalty weight");
    cmd->add_option("--split", split, "train,calibrate,test fractions")->delimiter(',')
        ->expected(3);
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_flag("--difference", difference, "difference the panel before splitting");
    cmd->add_flag("--header", header, "first CSV row is a header");
    cmd->add_flag("--label-column", label_column, "first CSV column holds time labels");
    cmd->add_option("--delimiter", delimiter, "CSV delimiter");
    if (online) {
      cmd->add_option("--start", online_start, "monitoring starts after this time");
    } else {
      cmd->add_option("--method", method, "statistic: lasso | ols");
      cmd->add_option("--calibration", calibration, "bootstrap | empirical");
      cmd->add_flag("--multiple", multiple, "greedy multiple-anomaly selection");
    }
  }

  RunConfig resolve() const {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorKind::io, "cannot open config file '" + config_path + "'");
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw Error(ErrorKind::configuration, config_path + ": " + e.what());
      }
    }
    if (q) j["q"] = *q;
    if (method) j["method"] = *method;
    if (scheme || count || interval_seed || decay) {
      json& s = j["intervals"];
      if (!s.is_object()) s = json::object();
      if (scheme) s["scheme"] = *scheme;
      if (count) s["count"] = *count;
      if (interval_seed) s["seed"] = *interval_seed;
      if (decay) s["decay"] = *decay;
    }
    if (min_length) j["min_length"] = *min_length;
    if (constant) j["lambda_constant"] = *constant;
    if (sigma) j["sigma"] = *sigma;
    if (quantile) j["quantile"] = *quantile;
    if (calibration_runs) j["calibration_runs"] = *calibration_runs;
    if (calibration) j["calibration"] = *calibration;
    if (penalty || penalty_lambda) {
      json& b = j["baseline_penalty"];
      if (!b.is_object()) b = json::object();
      if (penalty) b["type"] = *penalty;
      if (penalty_lambda) b["lambda"] = *penalty_lambda;
    }
    if (!split.empty()) j["split"] = split;
    if (seed) j["seed"] = *seed;
    if (difference) j["difference"] = true;
    if (multiple) j["multiple"] = true;
    if (online_start) j["online_start"] = *online_start;
    if (header || label_column || delimiter) {
      json& c = j["csv"];
      if (!c.is_object()) c = json::object();
      if (header) c["has_header"] = true;
      if (label_column) c["label_column"] = true;
      if (delimiter) c["delimiter"] = *delimiter;
    }
    return config_from_json(j);
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

// --- simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario = "dense-single-1";
  std::uint64_t seed = 1;
  std::uint64_t fixture_seed = 1;
  int prefix = 0;
  bool null = false;
  std::string out;
};

AnomalyScenario with_prefix(const AnomalyScenario& s, int prefix, bool null) {
  const int horizon = s.horizon() + prefix;
  if (null || s.is_null()) return AnomalyScenario::null(s.base(), horizon, s.burn_in());
  std::vector<AnomalySegment> segments;
  for (const auto& seg : s.segments()) {
    segments.push_back({{seg.window.start + prefix, seg.window.end + prefix}, seg.delta});
  }
  return AnomalyScenario(s.base(), std::move(segments), horizon, s.burn_in());
}

int run_simulate(const SimulateArgs& a) {
  if (a.prefix < 0) throw Error(ErrorKind::configuration, "--prefix must be >= 0");
  const AnomalyScenario scenario =
      with_prefix(named_scenario(a.scenario, a.fixture_seed), a.prefix, a.null);
  const TimeSeriesPanel panel = simulate_with_anomaly(scenario, a.seed);
  std::ostringstream csv;
  write_panel_csv(csv, panel);
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_file_atomic(a.out, csv.str());
  }
  json windows = json::array();
  for (const auto& w : scenario.windows()) windows.push_back({w.start, w.end});
  std::cerr << json{{"scenario", a.scenario},
                    {"rows", panel.length()},
                    {"dim", panel.dim()},
                    {"windows", windows},
                    {"seed", a.seed},
                    {"fixture_seed", a.fixture_seed}}
                   .dump()
            << '\n';
  return 0;
}

// --- evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> detections;
  std::vector<std::string> truth;  // "start-end"
  std::optional<double> empty;
};

Interval parse_window(const std::string& s) {
  int start = 0, end = 0;
  char dash = 0;
  std::istringstream in(s);
  if (!(in >> start >> dash >> end) || dash != '-' || !in.eof() || start > end) {
    throw Error(ErrorKind::configuration, "window '" + s + "' is not of the form start-end");
  }
  return {start, end};
}

int run_evaluate(const EvaluateArgs& a) {
  std::vector<Interval> truth;
  for (const auto& s : a.truth) truth.push_back(parse_window(s));
  std::vector<ScenarioOutcome> outcomes;
  json per_file = json::array();
  int horizon = 0;
  for (const auto& path : a.detections) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open detection file '" + path + "'");
    ScenarioOutcome o;
    o.truth = truth;
    for (const auto& row : read_detection_csv(in)) {
      horizon = std::max(horizon, row.interval.end);
      if (row.detected) o.estimate.push_back(row.interval);
    }
    outcomes.push_back(std::move(o));
  }
  const double empty = a.empty.value_or(static_cast<double>(horizon));
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    per_file.push_back({{"file", a.detections[i]},
                        {"detected", outcomes[i].estimate.size()},
                        {"hausdorff", hausdorff_distance(outcomes[i], empty)}});
  }
  const OutcomeSummary s = summarize(outcomes, empty);
  json counts = json::object();
  for (const auto& [k, v] : s.counts) counts[std::to_string(k)] = v;
  print_json({{"runs", s.runs},
              {"power", s.power},
              {"counts", counts},
              {"hausdorff_mean_detected", s.hausdorff_mean},
              {"hausdorff_sd_detected", s.hausdorff_sd},
              {"hausdorff_mean_all", s.hausdorff_mean_all},
              {"empty_runs", s.empty_runs},
              {"empty_convention", empty},
              {"files", per_file}});
  return 0;
}

// --- reproduce-tables ----------------------------------------------------------

struct TablesArgs {
  std::string scenario = "dense-single-1";
  std::uint64_t fixture_seed = 1;
  int runs = 100;
  int calibration_runs = 100;
  int count = 1000;
  double decay = 0.0;  // 0: pick the decay giving roughly `count` intervals
  int min_length = 0;
  double quantile = 0.99;
  double constant = 0.15;
  std::string penalty = "ridge";
  std::uint64_t seed = 2024;
  bool multiple = false;
  bool known_only = false;
  std::string out;
};

int run_tables(const TablesArgs& a) {
  ExperimentSpec spec{named_scenario(a.scenario, a.fixture_seed), {}};
  const int T = spec.scenario.horizon();
  const int p = spec.scenario.base().dim();
  const int L = a.min_length > 0 ? a.min_length : p + 1;
  const double decay = a.decay > 0.0 ? a.decay : seeded_decay_for_count(T, L, a.count);
  std::ostringstream random_label, seeded_label;
  random_label << "random (s=" << a.count << ")";
  const IntervalSet seeded = seeded_intervals(T, L, decay, 1);
  seeded_label << "seeded (a=" << decay << ", s=" << seeded.size() << ")";
  spec.schemes = {{random_label.str(), random_intervals(T, L, a.count, a.seed, 1)},
                  {seeded_label.str(), seeded}};
  spec.estimated_baseline = !a.known_only;
  spec.penalty.kind = parse_penalty_kind(a.penalty);
  spec.multiple = a.multiple;
  spec.runs = a.runs;
  spec.calibration_runs = a.calibration_runs;
  spec.quantile = a.quantile;
  spec.constant = a.constant;
  spec.seed = a.seed;

  const ExperimentResult result = run_experiment(spec);
  const auto rows = table_rows(spec, result);
  std::ostringstream power, hausdorff, counts;
  write_power_table(power, rows);
  write_hausdorff_table(hausdorff, rows, T);
  write_count_table(counts, rows, 4);

  json thresholds = json::array();
  for (const auto& [key, cal] : result.calibration) {
    thresholds.push_back({{"scheme", key.scheme},
                          {"method", to_string(key.method)},
                          {"baseline", to_string(key.baseline)},
                          {"threshold", cal.threshold}});
  }
  const json manifest = {{"scenario", a.scenario},      {"fixture_seed", a.fixture_seed},
                         {"runs", a.runs},              {"calibration_runs", a.calibration_runs},
                         {"min_length", L},             {"decay", decay},
                         {"quantile", a.quantile},      {"lambda_constant", a.constant},
                         {"baseline_penalty", a.penalty}, {"seed", a.seed},
                         {"multiple", a.multiple},      {"thresholds", thresholds}};
  if (a.out.empty()) {
    std::cout << "# power (%)\n" << power.str() << "\n# Hausdorff\n" << hausdorff.str()
              << "\n# detected counts\n" << counts.str();
  } else {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_file_atomic(dir / "power.csv", power.str());
    write_file_atomic(dir / "hausdorff.csv", hausdorff.str());
    write_file_atomic(dir / "counts.csv", counts.str());
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << power.str();
  }
  return 0;
}

json summary_of(const PipelineResult& r, bool with_detection) {
  json s = {{"threshold", r.calibration.threshold},
            {"intervals", r.intervals.size()},
            {"test_offset", r.test_offset}};
  if (with_detection) s["detections"] = r.manifest.at("detections");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic-change detection for VAR processes"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic panel as CSV");
  simulate->add_option("--scenario", sim.scenario, "scenario name")
      ->check(CLI::IsMember(named_scenario_names()));
  simulate->add_option("--seed", sim.seed, "noise seed");
  simulate->add_option("--fixture-seed", sim.fixture_seed, "coefficient draw seed");
  simulate->add_option("--prefix", sim.prefix, "null rows prepended (anomalies shift right)");
  simulate->add_flag("--null", sim.null, "drop the anomalies");
  simulate->add_option("--out", sim.out, "output CSV (stdout if omitted)");

  std::string data, out;
  Overrides cal_over, det_over, online_over;
  auto* calibrate = app.add_subcommand("calibrate", "fit the baseline and calibrate");
  auto* detect = app.add_subcommand("detect", "offline detection pipeline");
  auto* online = app.add_subcommand("detect-online", "sequential detection pipeline");
  for (auto* cmd : {calibrate, detect, online}) {
    cmd->add_option("--data", data, "input CSV panel")->required();
    cmd->add_option("--out", out, "output directory");
  }
  cal_over.attach(calibrate, false);
  det_over.attach(detect, false);
  online_over.attach(online, true);

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "score detection CSVs");
  evaluate->add_option("--detections", eval.detections, "detection CSV files (one per run)")
      ->required();
  evaluate->add_option("--truth", eval.truth, "true windows as start-end")->required();
  evaluate->add_option("--empty", eval.empty, "Hausdorff value for empty detections");

  TablesArgs tab;
  auto* tables = app.add_subcommand("reproduce-tables", "Monte-Carlo evaluation tables");
  tables->add_option("--scenario", tab.scenario, "scenario name")
      ->check(CLI::IsMember(named_scenario_names()));
  tables->add_option("--fixture-seed", tab.fixture_seed, "coefficient draw seed");
  tables->add_option("--runs", tab.runs, "anomalous runs");
  tables->add_option("--calibration-runs", tab.calibration_runs, "null runs per cell");
  tables->add_option("--count", tab.count, "random intervals s");
  tables->add_option("--decay", tab.decay, "seeded decay (default: matches --count)");
  tables->add_option("--min-length", tab.min_length, "minimum interval length (0 = p + 1)");
  tables->add_option("--quantile", tab.quantile, "threshold quantile");
  tables->add_option("--lambda-constant", tab.constant, "lambda constant C");
  tables->add_option("--penalty", tab.penalty, "baseline penalty for the estimated mode");
  tables->add_option("--seed", tab.seed, "master seed");
  tables->add_flag("--multiple", tab.multiple, "greedy multiple-anomaly selection");
  tables->add_flag("--known-only", tab.known_only, "skip the estimated-baseline mode");
  tables->add_option("--out", tab.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const std::optional<fs::path> out_dir =
      out.empty() ? std::nullopt : std::optional<fs::path>(out);
  try {
    if (*simulate) return run_simulate(sim);
    if (*calibrate) {
      const auto r = run_pipeline(cal_over.resolve(), data, out_dir,
                                  PipelineStop::after_calibration);
      print_json(summary_of(r, false));
      return 0;
    }
    if (*detect) {
      const auto r = run_pipeline(det_over.resolve(), data, out_dir);
      print_json(summary_of(r, true));
      return 0;
    }
    if (*online) {
      const auto r = run_online_pipeline(online_over.resolve(), data, out_dir);
      print_json({{"threshold", r.calibration.threshold},
                  {"alarm", r.manifest.at("alarm")},
                  {"last_time", r.report.last_time}});
      return 0;
    }
    if (*evaluate) return run_evaluate(eval);
    if (*tables) return run_tables(tab);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return is_input_error(e.kind()) ? 2 : 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << '\n';
    return 2;
  }
  return 0;
}
