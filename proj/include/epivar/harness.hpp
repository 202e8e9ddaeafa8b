#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "epivar/detection.hpp"
#include "epivar/evaluation.hpp"
#include "epivar/intervals.hpp"
#include "epivar/var_model.hpp"

namespace epivar {

/// Change matrix adding `delta` to the `count` smallest strictly positive
/// entries of `a` (column-major order among equal values).
Matrix shift_smallest_positive(const Matrix& a, int count, double delta);

/// Named simulation settings:
///   dense-single-1/2  T=500, p=10, one window, +0.35 on 10 entries
///   dense-two-1/2     T=500, p=10, two windows, +0.6/+0.5 on 5 entries
///   sparse-single-1/2 T=500, p=20, upper off-diagonal 0.6 -> 0.05
/// Dense coefficients are drawn from `fixture_seed`, redrawing until both
/// regimes are stationary.
AnomalyScenario named_scenario(const std::string& name, std::uint64_t fixture_seed = 1);

std::vector<std::string> named_scenario_names();

struct SchemeSpec {
  std::string label;
  IntervalSet intervals;
};

struct ExperimentSpec {
  AnomalyScenario scenario;
  std::vector<SchemeSpec> schemes;
  std::vector<StatMethod> methods{StatMethod::ols, StatMethod::lasso};
  bool known_baseline = true;
  bool estimated_baseline = true;
  BaselinePenalty penalty = BaselinePenalty::ridge();
  int training_length = 0;  // defaults to the scenario horizon
  bool multiple = false;    // greedy multi-window selection
  int runs = 100;
  int calibration_runs = 100;
  double quantile = 0.99;
  double constant = 0.15;
  std::uint64_t seed = 2024;
};

struct CellKey {
  std::string scheme;
  StatMethod method;
  BaselineSource baseline;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct ExperimentResult {
  std::map<CellKey, std::vector<ScenarioOutcome>> outcomes;
  std::map<CellKey, CalibrationResult> calibration;
};

/// Monte-Carlo power/localisation study: calibrates one threshold per cell
/// from null runs (refitting the baseline inside each run for the estimated
/// mode), then scores `runs` anomalous panels. Run r uses the same panel in
/// every cell.
ExperimentResult run_experiment(const ExperimentSpec& spec);

std::vector<TableRow> table_rows(const ExperimentSpec& spec, const ExperimentResult& result);

}  // namespace epivar
