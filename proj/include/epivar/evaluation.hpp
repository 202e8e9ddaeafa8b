#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epivar/intervals.hpp"

namespace epivar {

struct ScenarioOutcome {
  std::vector<Interval> truth;
  std::vector<Interval> estimate;
  std::uint64_t seed = 0;
  std::string method;
  std::string intervals;
  std::string baseline;
};

/// {start, end} of every interval, in order.
std::vector<double> boundary_points(const std::vector<Interval>& intervals);

/// Symmetric Hausdorff distance between two point sets; `empty_convention`
/// is returned when the estimate is empty.
double hausdorff_distance(const std::vector<double>& truth, const std::vector<double>& estimate,
                          double empty_convention);

double hausdorff_distance(const ScenarioOutcome& outcome, double empty_convention);

/// Fraction of runs with at least one detection.
double empirical_power(const std::vector<ScenarioOutcome>& outcomes);

/// Number of detections -> number of runs.
std::map<int, int> count_distribution(const std::vector<ScenarioOutcome>& outcomes);

struct OutcomeSummary {
  int runs = 0;
  double power = 0.0;
  std::map<int, int> counts;
  /// Over runs with a detection only.
  double hausdorff_mean = 0.0;
  double hausdorff_sd = 0.0;
  int empty_runs = 0;
  /// Every run, empty estimates scored with the empty convention.
  double hausdorff_mean_all = 0.0;
};

OutcomeSummary summarize(const std::vector<ScenarioOutcome>& outcomes, double empty_convention);

struct TableRow {
  std::string scheme;  // e.g. "random (s = 1029)"
  std::string method;
  std::optional<OutcomeSummary> known;
  std::optional<OutcomeSummary> estimated;
};

/// Power in percent; columns known/estimated baseline.
void write_power_table(std::ostream& os, const std::vector<TableRow>& rows);

/// Mean (sd) Hausdorff distance in time-index units and as a percentage of
/// the horizon, with the count of empty runs.
void write_hausdorff_table(std::ostream& os, const std::vector<TableRow>& rows, int horizon);

/// Detected-count distribution, columns 0..max_count for each baseline mode.
void write_count_table(std::ostream& os, const std::vector<TableRow>& rows, int max_count);

}  // namespace epivar
