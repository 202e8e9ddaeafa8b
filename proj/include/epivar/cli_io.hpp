#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "epivar/detection.hpp"
#include "epivar/estimation.hpp"
#include "epivar/intervals.hpp"
#include "epivar/test_stats.hpp"
#include "epivar/var_model.hpp"

namespace epivar {

struct CsvOptions {
  bool has_header = false;
  char delimiter = ',';
  /// First column holds time labels rather than values.
  bool label_column = false;
};

TimeSeriesPanel load_panel(const std::filesystem::path& path, const CsvOptions& opts = {});
TimeSeriesPanel read_panel(std::istream& in, const CsvOptions& opts = {},
                           const std::string& source = "<stream>");

/// Header x1..xp (plus a leading `time` column when labels exist).
void write_panel_csv(std::ostream& os, const TimeSeriesPanel& panel);

/// Row t of the output is x_{t+1} - x_t; labels follow the later row.
TimeSeriesPanel difference(const TimeSeriesPanel& panel);

struct SchemeConfig {
  enum class Kind { random, seeded };
  Kind kind = Kind::seeded;
  int count = 1000;
  std::uint64_t seed = 1;
  double decay = 1.0 / 1.1;
};

enum class CalibrationMode { bootstrap, empirical };

struct RunConfig {
  int order = 1;
  StatMethod method = StatMethod::lasso;
  SchemeConfig scheme;
  int min_length = 0;  // 0 resolves to p * q + 1
  double constant = 0.15;
  NoiseModel::Kind noise = NoiseModel::Kind::identity;
  double quantile = 0.99;
  int calibration_runs = 100;
  CalibrationMode calibration = CalibrationMode::bootstrap;
  BaselinePenalty penalty = BaselinePenalty::lasso();
  std::array<double, 3> split{0.25, 0.25, 0.5};
  std::uint64_t seed = 1;
  bool difference = false;
  bool multiple = false;
  int online_start = 10;
  CsvOptions csv;

  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

IntervalSet build_intervals(const SchemeConfig& scheme, int horizon, int min_length, int order);

struct SplitPanels {
  TimeSeriesPanel train;
  TimeSeriesPanel calibrate;
  TimeSeriesPanel test;
  int test_offset = 0;  // rows preceding the test slice
};

SplitPanels split_panel(const TimeSeriesPanel& panel, const std::array<double, 3>& fractions);

struct PipelineResult {
  RunConfig config;  // with defaults resolved
  Matrix baseline;
  std::optional<Matrix> noise_cov;
  CalibrationResult calibration;
  DetectionResult detection;
  IntervalSet intervals;
  int test_offset = 0;
  nlohmann::json manifest;
};

enum class PipelineStop { after_calibration, after_detection };

/// Load, optionally difference, split, fit the baseline on the training
/// slice, calibrate the threshold, scan the test slice. Files are written to
/// `out_dir` when given. Errors are rethrown with the failing stage named.
PipelineResult run_pipeline(const RunConfig& config, const std::filesystem::path& data,
                            const std::optional<std::filesystem::path>& out_dir,
                            PipelineStop stop = PipelineStop::after_detection);

struct OnlinePipelineResult {
  RunConfig config;
  Matrix baseline;
  CalibrationResult calibration;
  OnlineReport report;
  int test_offset = 0;
  nlohmann::json manifest;
};

OnlinePipelineResult run_online_pipeline(const RunConfig& config,
                                         const std::filesystem::path& data,
                                         const std::optional<std::filesystem::path>& out_dir);

/// start,end,statistic,detected
void write_detection_csv(std::ostream& os, const DetectionResult& result);
/// run,max_statistic
void write_calibration_csv(std::ostream& os, const CalibrationResult& result);

struct DetectionRow {
  Interval interval;
  double statistic = 0.0;
  bool detected = false;
};
std::vector<DetectionRow> read_detection_csv(std::istream& in);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace epivar
