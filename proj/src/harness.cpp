#include "epivar/harness.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "epivar/parallel.hpp"

namespace epivar {

Matrix shift_smallest_positive(const Matrix& a, int count, double delta) {
  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> positives;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a(i, j) > 0.0) positives.emplace_back(a(i, j), j, i);
    }
  }
  if (static_cast<int>(positives.size()) < count) {
    throw Error(ErrorKind::construction, "not enough positive entries to shift");
  }
  std::sort(positives.begin(), positives.end());
  Matrix theta = Matrix::Zero(a.rows(), a.cols());
  for (int k = 0; k < count; ++k) {
    const auto& [value, j, i] = positives[static_cast<std::size_t>(k)];
    theta(i, j) = delta;
  }
  return theta;
}

namespace {

constexpr int kHorizon = 500;

Interval fraction_window(int horizon, int num_lo, int num_hi, int den) {
  return {horizon * num_lo / den, horizon * num_hi / den};
}

AnomalyScenario dense_scenario(const std::vector<Interval>& windows, int shifted, double delta,
                               std::uint64_t fixture_seed) {
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    const VarParams base = generate_dense_stationary(10, derive_seed(fixture_seed, attempt));
    const Matrix theta = shift_smallest_positive(base.coeffs()[0], shifted, delta);
    if (companion_spectral_radius(base.stacked() + theta, 1) >= 1.0) continue;
    std::vector<AnomalySegment> segments;
    for (const auto& w : windows) segments.push_back({w, theta});
    return AnomalyScenario(base, std::move(segments), kHorizon);
  }
  throw Error(ErrorKind::construction, "could not draw a stationary dense scenario");
}

AnomalyScenario sparse_scenario(const Interval& window) {
  const VarParams base = generate_sparse_offdiag(20, 0.6);
  const Matrix shifted = generate_sparse_offdiag(20, 0.05).stacked();
  return AnomalyScenario(base, shifted - base.stacked(), window, kHorizon);
}

}  // namespace

std::vector<std::string> named_scenario_names() {
  return {"dense-single-1", "dense-single-2", "dense-two-1",
          "dense-two-2",    "sparse-single-1", "sparse-single-2"};
}

AnomalyScenario named_scenario(const std::string& name, std::uint64_t fixture_seed) {
  if (name == "dense-single-1") {
    return dense_scenario({fraction_window(kHorizon, 5, 6, 11)}, 10, 0.35, fixture_seed);
  }
  if (name == "dense-single-2") {
    return dense_scenario({fraction_window(kHorizon, 7, 8, 15)}, 10, 0.35, fixture_seed);
  }
  if (name == "dense-two-1") {
    return dense_scenario({{133, 166}, {333, 366}}, 5, 0.6, fixture_seed);
  }
  if (name == "dense-two-2") {
    return dense_scenario({{33, 66}, {433, 466}}, 5, 0.5, fixture_seed);
  }
  if (name == "sparse-single-1") {
    return sparse_scenario(fraction_window(kHorizon, 4, 5, 9));
  }
  if (name == "sparse-single-2") {
    return sparse_scenario(fraction_window(kHorizon, 6, 7, 13));
  }
  throw Error(ErrorKind::configuration, "unknown scenario '" + name + "'");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const AnomalyScenario& scenario = spec.scenario;
  const VarParams& base = scenario.base();
  const int q = base.order();
  const int horizon = scenario.horizon();
  const int train_length = spec.training_length > 0 ? spec.training_length : horizon;
  const Matrix truth = base.stacked();

  std::vector<BaselineSource> sources;
  if (spec.known_baseline) sources.push_back(BaselineSource::known);
  if (spec.estimated_baseline) sources.push_back(BaselineSource::estimated);

  ExperimentResult result;
  std::vector<CellKey> cells;
  for (const auto& scheme : spec.schemes) {
    for (const auto method : spec.methods) {
      for (const auto source : sources) {
        const CellKey key{scheme.label, method, source};
        cells.push_back(key);
        StatConfig cfg;
        cfg.method = method;
        cfg.constant = spec.constant;
        NullLaw null{base, horizon, scenario.burn_in(), std::nullopt};
        if (source == BaselineSource::estimated) {
          null.reestimate = Reestimation{train_length, spec.penalty, false};
        }
        result.calibration[key] = calibrate_threshold(null, scheme.intervals, cfg,
                                                      spec.calibration_runs, spec.quantile,
                                                      derive_seed(spec.seed, 1));
        result.outcomes[key].resize(static_cast<std::size_t>(spec.runs));
      }
    }
  }

  parallel_for(spec.runs, [&](int r) {
    const auto run = static_cast<std::uint64_t>(r);
    const std::uint64_t panel_seed = derive_seed(spec.seed, 100000 + run);
    const TimeSeriesPanel panel = simulate_with_anomaly(scenario, panel_seed);
    std::map<BaselineSource, Matrix> baselines;
    baselines[BaselineSource::known] = truth;
    if (spec.estimated_baseline) {
      const TimeSeriesPanel train = simulate(base, train_length, scenario.burn_in(),
                                             derive_seed(spec.seed, 200000 + run));
      baselines[BaselineSource::estimated] = estimate_baseline(train, q, spec.penalty);
    }
    for (const auto source : sources) {
      const IntervalScanner scanner(panel, baselines[source], q);
      for (const auto& scheme : spec.schemes) {
        for (const auto method : spec.methods) {
          const CellKey key{scheme.label, method, source};
          StatConfig cfg;
          cfg.method = method;
          cfg.constant = spec.constant;
          std::vector<IntervalStatistic> stats;
          stats.reserve(scheme.intervals.size());
          for (const auto& j : scheme.intervals.intervals) {
            const double lambda = resolve_lambda(cfg, scheme.intervals.min_length, panel.dim(),
                                                 horizon, j.length());
            stats.push_back(scanner.statistic(j, cfg, lambda));
          }
          const double threshold = result.calibration.at(key).threshold;
          ScenarioOutcome outcome;
          outcome.truth = scenario.windows();
          outcome.seed = panel_seed;
          outcome.method = to_string(method);
          outcome.intervals = scheme.label;
          outcome.baseline = to_string(source);
          if (spec.multiple) {
            for (const auto& s : select_multiple(stats, threshold)) {
              outcome.estimate.push_back(s.interval);
            }
          } else if (const auto best = select_single(stats, threshold)) {
            outcome.estimate.push_back(best->interval);
          }
          result.outcomes.at(key)[static_cast<std::size_t>(r)] = std::move(outcome);
        }
      }
    }
  });
  return result;
}

std::vector<TableRow> table_rows(const ExperimentSpec& spec, const ExperimentResult& result) {
  std::vector<TableRow> rows;
  const double empty = spec.scenario.horizon();
  for (const auto& scheme : spec.schemes) {
    for (const auto method : spec.methods) {
      TableRow row{scheme.label, to_string(method), std::nullopt, std::nullopt};
      for (const auto source : {BaselineSource::known, BaselineSource::estimated}) {
        const auto it = result.outcomes.find({scheme.label, method, source});
        if (it == result.outcomes.end()) continue;
        auto summary = summarize(it->second, empty);
        (source == BaselineSource::known ? row.known : row.estimated) = std::move(summary);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace epivar
