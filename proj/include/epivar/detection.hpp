#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "epivar/estimation.hpp"
#include "epivar/intervals.hpp"
#include "epivar/test_stats.hpp"
#include "epivar/var_model.hpp"

namespace epivar {

enum class BaselineSource { known, estimated };

const char* to_string(BaselineSource source) noexcept;

/// Refit applied inside every calibration run: simulate a training stretch,
/// estimate the baseline (and optionally the noise covariance) from it, then
/// scan the following null stretch with the estimate.
struct Reestimation {
  int training_length = 0;
  BaselinePenalty penalty;
  bool estimate_noise = false;
};

/// Law used to generate null panels for threshold calibration.
struct NullLaw {
  VarParams law;
  int length = 0;  // rows scanned per run
  int burn_in = 200;
  std::optional<Reestimation> reestimate;
};

struct CalibrationResult {
  double threshold = 0.0;
  double quantile = 0.99;
  int runs = 0;
  std::vector<double> maxima;  // one per run, in run order
};

struct DetectionResult {
  std::vector<Interval> detected;
  std::vector<IntervalStatistic> statistics;
  std::vector<Interval> unreliable;
  double threshold = 0.0;
  double lambda = 0.0;
  BaselineSource baseline = BaselineSource::known;

  bool any() const noexcept { return !detected.empty(); }
};

/// ceil(B * level)-th smallest value, floored at 1e-12.
double threshold_from_maxima(std::vector<double> maxima, double quantile);

/// Statistic of every interval in the set on one panel.
std::vector<IntervalStatistic> scan_intervals(const TimeSeriesPanel& panel,
                                              const Matrix& baseline, int order,
                                              const IntervalSet& intervals,
                                              const StatConfig& config);

/// Largest statistic with ties broken by earlier start, then shorter length.
bool ranks_before(const IntervalStatistic& a, const IntervalStatistic& b) noexcept;

/// Argmax among reliable statistics strictly above the threshold.
std::optional<IntervalStatistic> select_single(const std::vector<IntervalStatistic>& stats,
                                               double threshold);

/// Greedy selection: take the best candidate, drop every candidate that
/// intersects it, repeat. Returned in selection order.
std::vector<IntervalStatistic> select_multiple(const std::vector<IntervalStatistic>& stats,
                                               double threshold);

CalibrationResult calibrate_threshold(const NullLaw& null, const IntervalSet& intervals,
                                      const StatConfig& config, int runs, double quantile,
                                      std::uint64_t seed);

DetectionResult detect_single(const TimeSeriesPanel& panel, const Matrix& baseline, int order,
                              const IntervalSet& intervals, const StatConfig& config,
                              double threshold,
                              BaselineSource source = BaselineSource::known);

DetectionResult detect_multiple(const TimeSeriesPanel& panel, const Matrix& baseline,
                                int order, const IntervalSet& intervals,
                                const StatConfig& config, double threshold,
                                BaselineSource source = BaselineSource::known);

// --- online ----------------------------------------------------------------

/// Windows [t - 2^(j-1), t], j = 1..floor(log2 t), in increasing j. Windows
/// that would need lags before t = 1 are skipped.
std::vector<Interval> online_windows(int t, int order);

struct OnlineSettings {
  StatConfig stat;
  int start_time = 10;  // t0: monitoring begins at t0 + 1
  /// Horizon entering the lambda formula (L is the length-2 window).
  int lambda_horizon = 500;
  /// Running sums instead of recomputing each window from the buffer.
  bool incremental = false;
};

struct OnlineAlarm {
  int time = 0;
  Interval window;
  double statistic = 0.0;
};

struct OnlineReport {
  std::optional<OnlineAlarm> alarm;
  int last_time = 0;
  /// Largest statistic seen at each monitored time (t0 + 1, t0 + 2, ...).
  std::vector<double> max_trace;
};

/// Sequential monitor: feed one observation at a time.
class OnlineDetector {
 public:
  OnlineDetector(int dim, Matrix baseline, int order, OnlineSettings settings,
                 double threshold);

  /// Appends x_t; returns the alarm if some window at this t exceeds the
  /// threshold. Monitoring continues after an alarm only if the caller
  /// keeps pushing.
  std::optional<OnlineAlarm> push(const Eigen::RowVectorXd& x);

  int time() const noexcept { return time_; }
  double lambda_for(int window_length) const;
  /// Max statistic over the windows examined at the latest time, or -inf.
  double last_max() const noexcept { return last_max_; }

 private:
  IntervalMoments direct_moments(const Interval& window) const;

  int dim_;
  int order_;
  Matrix baseline_;
  OnlineSettings settings_;
  double threshold_;
  std::optional<Matrix> whitener_;
  IntervalScanner scanner_;
  std::vector<Eigen::RowVectorXd> rows_;
  int time_ = 0;
  double last_max_ = 0.0;
};

/// Replays `stream` row by row until the first alarm or the end of the data.
OnlineReport detect_online(const TimeSeriesPanel& stream, const Matrix& baseline, int order,
                           const OnlineSettings& settings, double threshold);

/// Null-run calibration for the online monitor: per run, the maximum
/// statistic over every window examined up to `null.length`.
CalibrationResult calibrate_online_threshold(const NullLaw& null,
                                             const OnlineSettings& settings, int runs,
                                             double quantile, std::uint64_t seed);

}  // namespace epivar
