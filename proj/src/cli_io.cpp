#include "epivar/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "epivar/parallel.hpp"

namespace epivar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& source, int row, int col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << source << ": row " << row << ", column " << col << ": non-numeric cell '" << cell
        << "'";
    throw Error(ErrorKind::parse, msg.str());
  }
  return value;
}

}  // namespace

TimeSeriesPanel read_panel(std::istream& in, const CsvOptions& opts, const std::string& source) {
  std::string line;
  int line_no = 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t width = 0;
  bool header_pending = opts.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    auto cells = split_line(line, opts.delimiter);
    if (opts.label_column) {
      if (cells.size() < 2) {
        std::ostringstream msg;
        msg << source << ": row " << line_no << " has no value columns";
        throw Error(ErrorKind::parse, msg.str());
      }
      labels.push_back(cells.front());
      cells.erase(cells.begin());
    }
    if (rows.empty()) {
      width = cells.size();
    } else if (cells.size() != width) {
      std::ostringstream msg;
      msg << source << ": row " << line_no << " has " << cells.size() << " values, expected "
          << width;
      throw Error(ErrorKind::parse, msg.str());
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      values.push_back(parse_cell(cells[c], source, line_no,
                                  static_cast<int>(c) + 1 + (opts.label_column ? 1 : 0)));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty() || width == 0) {
    throw Error(ErrorKind::parse, source + ": no data rows");
  }
  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return TimeSeriesPanel(std::move(values), std::move(labels));
}

TimeSeriesPanel load_panel(const fs::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open data file '" + path.string() + "'");
  }
  return read_panel(in, opts, path.string());
}

void write_panel_csv(std::ostream& os, const TimeSeriesPanel& panel) {
  if (panel.has_timestamps()) os << "time,";
  for (int j = 1; j <= panel.dim(); ++j) os << 'x' << j << (j < panel.dim() ? "," : "\n");
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int t = 1; t <= panel.length(); ++t) {
    if (panel.has_timestamps()) {
      os << panel.timestamps()[static_cast<std::size_t>(t - 1)] << ',';
    }
    for (int j = 0; j < panel.dim(); ++j) {
      os << panel.values()(t - 1, j) << (j + 1 < panel.dim() ? "," : "\n");
    }
  }
}

TimeSeriesPanel difference(const TimeSeriesPanel& panel) {
  if (panel.length() < 2) {
    throw Error(ErrorKind::contract, "differencing needs at least two rows");
  }
  const auto n = panel.length() - 1;
  Matrix diff = panel.values().bottomRows(n) - panel.values().topRows(n);
  std::vector<std::string> labels;
  if (panel.has_timestamps()) {
    labels.assign(panel.timestamps().begin() + 1, panel.timestamps().end());
  }
  return TimeSeriesPanel(std::move(diff), std::move(labels));
}

// --- configuration ----------------------------------------------------------

void RunConfig::validate() const {
  if (order < 1) throw Error(ErrorKind::configuration, "q must be at least 1");
  for (double f : split) {
    if (!(f > 0.0)) throw Error(ErrorKind::configuration, "split fractions must be positive");
  }
  if (split[0] + split[1] + split[2] > 1.0 + 1e-12) {
    throw Error(ErrorKind::configuration, "split fractions must sum to at most 1");
  }
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw Error(ErrorKind::configuration, "quantile must lie in (0, 1)");
  }
  if (calibration_runs < 1) {
    throw Error(ErrorKind::configuration, "calibration runs must be at least 1");
  }
  if (constant < 0.0) throw Error(ErrorKind::configuration, "lambda constant must be >= 0");
  if (min_length < 0) throw Error(ErrorKind::configuration, "min_length must be >= 0");
  if (noise == NoiseModel::Kind::known) {
    throw Error(ErrorKind::configuration,
                "noise mode 'known' is library-only; use 'identity' or 'estimated'");
  }
  if (scheme.kind == SchemeConfig::Kind::random && scheme.count < 1) {
    throw Error(ErrorKind::configuration, "random scheme needs count >= 1");
  }
  if (scheme.kind == SchemeConfig::Kind::seeded &&
      !(scheme.decay >= 0.5 && scheme.decay < 1.0)) {
    throw Error(ErrorKind::configuration, "seeded decay must lie in [1/2, 1)");
  }
}

namespace {

NoiseModel::Kind parse_noise(const std::string& s) {
  if (s == "identity") return NoiseModel::Kind::identity;
  if (s == "estimated") return NoiseModel::Kind::estimated;
  if (s == "known") return NoiseModel::Kind::known;
  throw Error(ErrorKind::configuration, "unknown sigma mode '" + s + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const json& j) {
  try {
    RunConfig c;
    read_opt(j, "q", c.order);
    if (j.contains("method")) c.method = parse_stat_method(j.at("method").get<std::string>());
    if (j.contains("intervals")) {
      const json& s = j.at("intervals");
      const auto kind = s.value("scheme", std::string("seeded"));
      if (kind == "random") {
        c.scheme.kind = SchemeConfig::Kind::random;
      } else if (kind == "seeded") {
        c.scheme.kind = SchemeConfig::Kind::seeded;
      } else {
        throw Error(ErrorKind::configuration, "unknown interval scheme '" + kind + "'");
      }
      read_opt(s, "count", c.scheme.count);
      read_opt(s, "seed", c.scheme.seed);
      read_opt(s, "decay", c.scheme.decay);
    }
    read_opt(j, "min_length", c.min_length);
    read_opt(j, "lambda_constant", c.constant);
    if (j.contains("sigma")) c.noise = parse_noise(j.at("sigma").get<std::string>());
    read_opt(j, "quantile", c.quantile);
    read_opt(j, "calibration_runs", c.calibration_runs);
    if (j.contains("calibration")) {
      const auto mode = j.at("calibration").get<std::string>();
      if (mode == "bootstrap") {
        c.calibration = CalibrationMode::bootstrap;
      } else if (mode == "empirical") {
        c.calibration = CalibrationMode::empirical;
      } else {
        throw Error(ErrorKind::configuration, "unknown calibration mode '" + mode + "'");
      }
    }
    if (j.contains("baseline_penalty")) {
      const json& b = j.at("baseline_penalty");
      c.penalty.kind = parse_penalty_kind(b.value("type", std::string("lasso")));
      if (b.contains("lambda") && !b.at("lambda").is_null()) {
        c.penalty.lambda = b.at("lambda").get<double>();
      }
      read_opt(b, "constant", c.penalty.constant);
    }
    if (j.contains("split")) {
      const auto v = j.at("split").get<std::vector<double>>();
      if (v.size() != 3) {
        throw Error(ErrorKind::configuration, "split must list three fractions");
      }
      c.split = {v[0], v[1], v[2]};
    }
    read_opt(j, "seed", c.seed);
    read_opt(j, "difference", c.difference);
    read_opt(j, "multiple", c.multiple);
    read_opt(j, "online_start", c.online_start);
    if (j.contains("csv")) {
      const json& f = j.at("csv");
      read_opt(f, "has_header", c.csv.has_header);
      read_opt(f, "label_column", c.csv.label_column);
      if (f.contains("delimiter")) {
        const auto d = f.at("delimiter").get<std::string>();
        if (d.size() != 1) throw Error(ErrorKind::configuration, "delimiter must be one char");
        c.csv.delimiter = d[0];
      }
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("config: ") + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json scheme;
  if (c.scheme.kind == SchemeConfig::Kind::random) {
    scheme = {{"scheme", "random"}, {"count", c.scheme.count}, {"seed", c.scheme.seed}};
  } else {
    scheme = {{"scheme", "seeded"}, {"decay", c.scheme.decay}};
  }
  json penalty = {{"type", to_string(c.penalty.kind)}, {"constant", c.penalty.constant}};
  penalty["lambda"] = c.penalty.lambda ? json(*c.penalty.lambda) : json(nullptr);
  return {
      {"q", c.order},
      {"method", to_string(c.method)},
      {"intervals", scheme},
      {"min_length", c.min_length},
      {"lambda_constant", c.constant},
      {"sigma", to_string(c.noise)},
      {"quantile", c.quantile},
      {"calibration_runs", c.calibration_runs},
      {"calibration", c.calibration == CalibrationMode::bootstrap ? "bootstrap" : "empirical"},
      {"baseline_penalty", penalty},
      {"split", {c.split[0], c.split[1], c.split[2]}},
      {"seed", c.seed},
      {"difference", c.difference},
      {"multiple", c.multiple},
      {"online_start", c.online_start},
      {"csv",
       {{"has_header", c.csv.has_header},
        {"label_column", c.csv.label_column},
        {"delimiter", std::string(1, c.csv.delimiter)}}},
  };
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::configuration, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

IntervalSet build_intervals(const SchemeConfig& scheme, int horizon, int min_length, int order) {
  if (scheme.kind == SchemeConfig::Kind::random) {
    return random_intervals(horizon, min_length, scheme.count, scheme.seed, order);
  }
  return seeded_intervals(horizon, min_length, scheme.decay, order);
}

SplitPanels split_panel(const TimeSeriesPanel& panel, const std::array<double, 3>& fractions) {
  const int n = panel.length();
  const int train = static_cast<int>(std::floor(fractions[0] * n));
  const int cal = static_cast<int>(std::floor(fractions[1] * n));
  const int test = static_cast<int>(std::floor(fractions[2] * n + 1e-9));
  if (train < 1 || cal < 1 || test < 1 || train + cal + test > n) {
    throw Error(ErrorKind::insufficient_data, "panel too short for the requested split");
  }
  return {panel.slice(1, train), panel.slice(train + 1, train + cal),
          panel.slice(train + cal + 1, train + cal + test), train + cal};
}

// --- outputs -----------------------------------------------------------------

void write_detection_csv(std::ostream& os, const DetectionResult& result) {
  os << "start,end,statistic,detected\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  std::vector<Interval> pending = result.detected;
  for (const auto& s : result.statistics) {
    const auto it = std::find(pending.begin(), pending.end(), s.interval);
    const bool hit = it != pending.end();
    if (hit) pending.erase(it);
    os << s.interval.start << ',' << s.interval.end << ',' << s.value << ',' << (hit ? 1 : 0)
       << '\n';
  }
}

void write_calibration_csv(std::ostream& os, const CalibrationResult& result) {
  os << "run,max_statistic\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < result.maxima.size(); ++i) {
    os << i + 1 << ',' << result.maxima[i] << '\n';
  }
}

std::vector<DetectionRow> read_detection_csv(std::istream& in) {
  std::vector<DetectionRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || trim(line).empty()) continue;
    const auto cells = split_line(line, ',');
    if (cells.size() != 4) {
      std::ostringstream msg;
      msg << "detection CSV row " << line_no << " has " << cells.size() << " columns";
      throw Error(ErrorKind::parse, msg.str());
    }
    DetectionRow r;
    r.interval.start = static_cast<int>(parse_cell(cells[0], "detection CSV", line_no, 1));
    r.interval.end = static_cast<int>(parse_cell(cells[1], "detection CSV", line_no, 2));
    r.statistic = parse_cell(cells[2], "detection CSV", line_no, 3);
    r.detected = parse_cell(cells[3], "detection CSV", line_no, 4) != 0.0;
    rows.push_back(r);
  }
  return rows;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::io, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot move '" + tmp.string() + "': " + ec.message());
}

// --- pipelines ----------------------------------------------------------------

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + name + "': " + e.what());
  }
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

struct Prepared {
  RunConfig config;
  SplitPanels split;
  Matrix baseline;
  std::optional<Matrix> noise_cov;
  Matrix law_cov;  // noise covariance of the bootstrap law
  json manifest;
};

Prepared prepare(const RunConfig& input, const fs::path& data) {
  Prepared prep;
  prep.config = input;
  RunConfig& config = prep.config;
  stage("config", [&] { config.validate(); });
  TimeSeriesPanel panel = stage("load", [&] { return load_panel(data, config.csv); });
  if (config.difference) {
    panel = stage("difference", [&] { return difference(panel); });
  }
  const int p = panel.dim();
  const int q = config.order;
  if (config.min_length == 0) config.min_length = p * q + 1;
  if (config.method == StatMethod::ols && config.min_length <= p * q) {
    throw Error(ErrorKind::configuration,
                "stage 'config': OLS needs min_length > pq so every interval is feasible");
  }
  prep.split = stage("split", [&] { return split_panel(panel, config.split); });
  prep.baseline =
      stage("estimate", [&] { return estimate_baseline(prep.split.train, q, config.penalty); });
  if (config.noise == NoiseModel::Kind::estimated) {
    prep.noise_cov = stage("estimate", [&] {
      return estimate_noise_covariance(prep.split.train, prep.baseline, q);
    });
  }
  prep.law_cov = stage("estimate", [&] {
    return estimate_noise_covariance(prep.split.calibrate, prep.baseline, q);
  });

  json& m = prep.manifest;
  m["data"] = data.string();
  m["config"] = config_to_json(config);
  m["panel"] = {{"length", panel.length()}, {"dim", p}, {"differenced", config.difference}};
  m["split"] = {{"train", prep.split.train.length()},
                {"calibrate", prep.split.calibrate.length()},
                {"test", prep.split.test.length()},
                {"test_offset", prep.split.test_offset}};
  m["baseline"] = {{"provenance", "estimated"},
                   {"penalty", to_string(config.penalty.kind)},
                   {"lambda", config.penalty.kind == BaselinePenalty::Kind::none
                                  ? json(nullptr)
                                  : json(baseline_lambda(config.penalty, p,
                                                         prep.split.train.length() - q))},
                   {"coefficients", matrix_json(prep.baseline)}};
  if (prep.noise_cov) m["noise_cov"] = matrix_json(*prep.noise_cov);
  return prep;
}

StatConfig stat_config(const Prepared& prep) {
  StatConfig cfg;
  cfg.method = prep.config.method;
  cfg.constant = prep.config.constant;
  if (prep.noise_cov) cfg.noise = NoiseModel::estimated(*prep.noise_cov);
  return cfg;
}

NullLaw bootstrap_law(const Prepared& prep, int length) {
  const RunConfig& c = prep.config;
  VarParams law = stage("calibrate", [&] {
    return VarParams::from_stacked(prep.baseline, prep.law_cov, c.order);
  });
  return NullLaw{std::move(law), length, 200,
                 Reestimation{prep.split.train.length(), c.penalty,
                              c.noise == NoiseModel::Kind::estimated}};
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

PipelineResult run_pipeline(const RunConfig& input, const fs::path& data,
                            const std::optional<fs::path>& out_dir, PipelineStop stop) {
  Prepared prep = prepare(input, data);
  const RunConfig& config = prep.config;
  const int q = config.order;
  const int p = prep.split.test.dim();
  const StatConfig cfg = stat_config(prep);

  PipelineResult out;
  out.intervals = stage("intervals", [&] {
    return build_intervals(config.scheme, prep.split.test.length(), config.min_length, q);
  });

  if (config.calibration == CalibrationMode::bootstrap) {
    const NullLaw null = bootstrap_law(prep, prep.split.test.length());
    out.calibration = stage("calibrate", [&] {
      return calibrate_threshold(null, out.intervals, cfg, config.calibration_runs,
                                 config.quantile, config.seed);
    });
  } else {
    out.calibration = stage("calibrate", [&] {
      const IntervalSet cal_set = build_intervals(
          config.scheme, prep.split.calibrate.length(), config.min_length, q);
      CalibrationResult c;
      c.quantile = config.quantile;
      for (const auto& s : scan_intervals(prep.split.calibrate, prep.baseline, q, cal_set, cfg)) {
        if (s.reliable) c.maxima.push_back(s.value);
      }
      c.runs = static_cast<int>(c.maxima.size());
      c.threshold = threshold_from_maxima(c.maxima, config.quantile);
      return c;
    });
  }

  json& m = prep.manifest;
  m["intervals"] = {{"provenance", out.intervals.describe()},
                    {"count", out.intervals.size()},
                    {"min_length", out.intervals.min_length}};
  m["lambda"] = resolve_lambda(cfg, out.intervals.min_length, p, prep.split.test.length(),
                               out.intervals.min_length);
  m["calibration"] = {{"mode", config.calibration == CalibrationMode::bootstrap ? "bootstrap"
                                                                                 : "empirical"},
                      {"runs", out.calibration.runs},
                      {"quantile", out.calibration.quantile},
                      {"threshold", out.calibration.threshold},
                      {"seed", config.seed}};

  if (stop == PipelineStop::after_detection) {
    out.detection = stage("detect", [&] {
      return config.multiple
                 ? detect_multiple(prep.split.test, prep.baseline, q, out.intervals, cfg,
                                   out.calibration.threshold, BaselineSource::estimated)
                 : detect_single(prep.split.test, prep.baseline, q, out.intervals, cfg,
                                 out.calibration.threshold, BaselineSource::estimated);
    });
    json detections = json::array();
    for (const auto& j : out.detection.detected) {
      json d = {{"start", j.start},
                {"end", j.end},
                {"panel_start", j.start + prep.split.test_offset + (config.difference ? 1 : 0)},
                {"panel_end", j.end + prep.split.test_offset + (config.difference ? 1 : 0)}};
      if (prep.split.test.has_timestamps()) {
        d["time_start"] = prep.split.test.timestamps()[static_cast<std::size_t>(j.start - 1)];
        d["time_end"] = prep.split.test.timestamps()[static_cast<std::size_t>(j.end - 1)];
      }
      detections.push_back(d);
    }
    m["detections"] = detections;
    m["unreliable_intervals"] = out.detection.unreliable.size();
  }

  if (out_dir) {
    stage("write", [&] {
      std::error_code ec;
      fs::create_directories(*out_dir, ec);
      if (ec) throw Error(ErrorKind::io, "cannot create '" + out_dir->string() + "'");
      std::ostringstream cal;
      write_calibration_csv(cal, out.calibration);
      write_file_atomic(*out_dir / "calibration.csv", cal.str());
      std::ostringstream iv;
      write_intervals_csv(iv, out.intervals);
      write_file_atomic(*out_dir / "intervals.csv", iv.str());
      if (stop == PipelineStop::after_detection) {
        std::ostringstream det;
        write_detection_csv(det, out.detection);
        write_file_atomic(*out_dir / "detection.csv", det.str());
      }
      write_file_atomic(*out_dir / "manifest.json", json_text(m));
    });
  }

  out.config = config;
  out.baseline = prep.baseline;
  out.noise_cov = prep.noise_cov;
  out.test_offset = prep.split.test_offset;
  out.manifest = std::move(m);
  return out;
}

OnlinePipelineResult run_online_pipeline(const RunConfig& input, const fs::path& data,
                                         const std::optional<fs::path>& out_dir) {
  Prepared prep = prepare(input, data);
  const RunConfig& config = prep.config;
  const int q = config.order;

  OnlineSettings settings;
  settings.stat = stat_config(prep);
  settings.stat.method = StatMethod::lasso;
  settings.start_time = config.online_start;
  settings.lambda_horizon = prep.split.test.length();

  OnlinePipelineResult out;
  const NullLaw null = bootstrap_law(prep, prep.split.test.length());
  out.calibration = stage("calibrate", [&] {
    return calibrate_online_threshold(null, settings, config.calibration_runs, config.quantile,
                                      config.seed);
  });
  out.report = stage("detect", [&] {
    return detect_online(prep.split.test, prep.baseline, q, settings,
                         out.calibration.threshold);
  });

  json& m = prep.manifest;
  m["online"] = {{"start_time", settings.start_time},
                 {"lambda_horizon", settings.lambda_horizon},
                 {"lambda_min_window", resolve_lambda(settings.stat, 2, prep.split.test.dim(),
                                                      settings.lambda_horizon, 2)}};
  m["calibration"] = {{"mode", "bootstrap"},
                      {"runs", out.calibration.runs},
                      {"quantile", out.calibration.quantile},
                      {"threshold", out.calibration.threshold},
                      {"seed", config.seed}};
  if (out.report.alarm) {
    const auto& a = *out.report.alarm;
    m["alarm"] = {{"time", a.time},
                  {"window_start", a.window.start},
                  {"window_end", a.window.end},
                  {"statistic", a.statistic},
                  {"panel_time", a.time + prep.split.test_offset + (config.difference ? 1 : 0)}};
  } else {
    m["alarm"] = nullptr;
  }
  m["last_time"] = out.report.last_time;

  if (out_dir) {
    stage("write", [&] {
      std::error_code ec;
      fs::create_directories(*out_dir, ec);
      if (ec) throw Error(ErrorKind::io, "cannot create '" + out_dir->string() + "'");
      std::ostringstream cal;
      write_calibration_csv(cal, out.calibration);
      write_file_atomic(*out_dir / "calibration.csv", cal.str());
      std::ostringstream trace;
      trace << "time,max_statistic\n"
            << std::setprecision(std::numeric_limits<double>::max_digits10);
      for (std::size_t i = 0; i < out.report.max_trace.size(); ++i) {
        trace << settings.start_time + 1 + static_cast<int>(i) << ','
              << out.report.max_trace[i] << '\n';
      }
      write_file_atomic(*out_dir / "online_trace.csv", trace.str());
      write_file_atomic(*out_dir / "manifest.json", json_text(m));
    });
  }
  out.config = config;
  out.baseline = prep.baseline;
  out.test_offset = prep.split.test_offset;
  out.manifest = std::move(m);
  return out;
}

}  // namespace epivar
