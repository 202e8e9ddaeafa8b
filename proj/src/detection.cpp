#include "epivar/detection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "epivar/parallel.hpp"

namespace epivar {

const char* to_string(BaselineSource source) noexcept {
  return source == BaselineSource::known ? "known" : "estimated";
}

double threshold_from_maxima(std::vector<double> maxima, double quantile) {
  if (maxima.empty()) {
    throw Error(ErrorKind::parameter, "calibration needs at least one run");
  }
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw Error(ErrorKind::parameter, "quantile level must lie in (0, 1)");
  }
  std::sort(maxima.begin(), maxima.end());
  const auto b = static_cast<double>(maxima.size());
  auto rank = static_cast<std::size_t>(std::ceil(b * quantile - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, maxima.size());
  return std::max(maxima[rank - 1], 1e-12);
}

std::vector<IntervalStatistic> scan_intervals(const TimeSeriesPanel& panel,
                                              const Matrix& baseline, int order,
                                              const IntervalSet& intervals,
                                              const StatConfig& config) {
  const IntervalScanner scanner(panel, baseline, order, config.noise);
  std::vector<IntervalStatistic> stats;
  stats.reserve(intervals.size());
  for (const auto& j : intervals.intervals) {
    const double lambda = resolve_lambda(config, intervals.min_length, panel.dim(),
                                         panel.length(), j.length());
    stats.push_back(scanner.statistic(j, config, lambda));
  }
  return stats;
}

bool ranks_before(const IntervalStatistic& a, const IntervalStatistic& b) noexcept {
  if (a.value != b.value) return a.value > b.value;
  if (a.interval.start != b.interval.start) return a.interval.start < b.interval.start;
  return a.interval.length() < b.interval.length();
}

std::optional<IntervalStatistic> select_single(const std::vector<IntervalStatistic>& stats,
                                               double threshold) {
  std::optional<IntervalStatistic> best;
  for (const auto& s : stats) {
    if (!s.reliable || !(s.value > threshold)) continue;
    if (!best || ranks_before(s, *best)) best = s;
  }
  return best;
}

std::vector<IntervalStatistic> select_multiple(const std::vector<IntervalStatistic>& stats,
                                               double threshold) {
  std::vector<IntervalStatistic> candidates;
  for (const auto& s : stats) {
    if (s.reliable && s.value > threshold) candidates.push_back(s);
  }
  std::sort(candidates.begin(), candidates.end(), ranks_before);
  std::vector<IntervalStatistic> picked;
  for (const auto& c : candidates) {
    const bool clashes = std::any_of(picked.begin(), picked.end(), [&](const auto& p) {
      return p.interval.overlaps(c.interval);
    });
    if (!clashes) picked.push_back(c);
  }
  return picked;
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0)) {
    throw Error(ErrorKind::parameter, "detection threshold must be positive");
  }
}

void check_intervals(const IntervalSet& set, int order, int length) {
  for (const auto& j : set.intervals) {
    if (j.start < order + 1) {
      std::ostringstream msg;
      msg << "interval " << j << " starts before t = " << order + 1;
      throw Error(ErrorKind::insufficient_lags, msg.str());
    }
    if (j.end > length) {
      std::ostringstream msg;
      msg << "interval " << j << " exceeds panel length " << length;
      throw Error(ErrorKind::contract, msg.str());
    }
  }
}

DetectionResult make_result(const TimeSeriesPanel& panel, const IntervalSet& intervals,
                            const StatConfig& config, double threshold, BaselineSource source,
                            std::vector<IntervalStatistic> stats) {
  DetectionResult result;
  result.threshold = threshold;
  result.baseline = source;
  result.lambda = resolve_lambda(config, intervals.min_length, panel.dim(), panel.length(),
                                 intervals.min_length);
  for (const auto& s : stats) {
    if (!s.reliable) result.unreliable.push_back(s.interval);
  }
  result.statistics = std::move(stats);
  return result;
}

}  // namespace

DetectionResult detect_single(const TimeSeriesPanel& panel, const Matrix& baseline, int order,
                              const IntervalSet& intervals, const StatConfig& config,
                              double threshold, BaselineSource source) {
  check_threshold(threshold);
  check_intervals(intervals, order, panel.length());
  auto stats = scan_intervals(panel, baseline, order, intervals, config);
  const auto best = select_single(stats, threshold);
  DetectionResult result =
      make_result(panel, intervals, config, threshold, source, std::move(stats));
  if (best) result.detected.push_back(best->interval);
  return result;
}

DetectionResult detect_multiple(const TimeSeriesPanel& panel, const Matrix& baseline,
                                int order, const IntervalSet& intervals,
                                const StatConfig& config, double threshold,
                                BaselineSource source) {
  check_threshold(threshold);
  check_intervals(intervals, order, panel.length());
  auto stats = scan_intervals(panel, baseline, order, intervals, config);
  const auto picked = select_multiple(stats, threshold);
  DetectionResult result =
      make_result(panel, intervals, config, threshold, source, std::move(stats));
  for (const auto& p : picked) result.detected.push_back(p.interval);
  return result;
}

namespace {

struct NullDraw {
  TimeSeriesPanel panel;
  Matrix baseline;
  NoiseModel noise;
};

NullDraw draw_null(const NullLaw& null, const NoiseModel& noise, std::uint64_t seed) {
  const int q = null.law.order();
  if (!null.reestimate) {
    return {simulate(null.law, null.length, null.burn_in, seed), null.law.stacked(), noise};
  }
  const Reestimation& re = *null.reestimate;
  const TimeSeriesPanel full =
      simulate(null.law, re.training_length + null.length, null.burn_in, seed);
  const TimeSeriesPanel train = full.slice(1, re.training_length);
  NullDraw draw{full.slice(re.training_length + 1, full.length()),
                estimate_baseline(train, q, re.penalty), noise};
  if (re.estimate_noise) {
    draw.noise = NoiseModel::estimated(estimate_noise_covariance(train, draw.baseline, q));
  }
  return draw;
}

void check_calibration(const NullLaw& null, int runs, double quantile) {
  if (runs < 1) {
    throw Error(ErrorKind::parameter, "calibration needs at least one run");
  }
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw Error(ErrorKind::parameter, "quantile level must lie in (0, 1)");
  }
  if (null.length < 1) {
    throw Error(ErrorKind::parameter, "null panel length must be positive");
  }
}

}  // namespace

CalibrationResult calibrate_threshold(const NullLaw& null, const IntervalSet& intervals,
                                      const StatConfig& config, int runs, double quantile,
                                      std::uint64_t seed) {
  check_calibration(null, runs, quantile);
  check_intervals(intervals, null.law.order(), null.length);
  CalibrationResult result;
  result.quantile = quantile;
  result.runs = runs;
  result.maxima.assign(static_cast<std::size_t>(runs), 0.0);
  parallel_for(runs, [&](int b) {
    const NullDraw draw = draw_null(null, config.noise, derive_seed(seed, static_cast<std::uint64_t>(b)));
    StatConfig cfg = config;
    cfg.noise = draw.noise;
    const auto stats =
        scan_intervals(draw.panel, draw.baseline, null.law.order(), intervals, cfg);
    double best = 0.0;
    for (const auto& s : stats) {
      if (s.reliable) best = std::max(best, s.value);
    }
    result.maxima[static_cast<std::size_t>(b)] = best;
  });
  result.threshold = threshold_from_maxima(result.maxima, quantile);
  return result;
}

// --- online ----------------------------------------------------------------

std::vector<Interval> online_windows(int t, int order) {
  std::vector<Interval> out;
  if (t < 2) return out;
  const int levels = static_cast<int>(std::bit_width(static_cast<unsigned>(t))) - 1;
  for (int j = 1; j <= levels; ++j) {
    const Interval w{t - (1 << (j - 1)), t};
    if (w.start >= order + 1) out.push_back(w);
  }
  return out;
}

OnlineDetector::OnlineDetector(int dim, Matrix baseline, int order, OnlineSettings settings,
                               double threshold)
    : dim_(dim), order_(order), baseline_(std::move(baseline)),
      settings_(std::move(settings)), threshold_(threshold),
      scanner_(dim, baseline_, order, settings_.stat.noise) {
  if (!(threshold_ > 0.0)) {
    throw Error(ErrorKind::parameter, "online threshold must be positive");
  }
  if (settings_.start_time < order_ + 1) {
    std::ostringstream msg;
    msg << "monitoring start t0 = " << settings_.start_time << " leaves fewer than q + 1 = "
        << order_ + 1 << " observations";
    throw Error(ErrorKind::configuration, msg.str());
  }
  if (settings_.stat.noise.cov && !settings_.stat.noise.cov->isIdentity(0.0)) {
    whitener_ = inverse_sqrt(*settings_.stat.noise.cov);
  }
}

double OnlineDetector::lambda_for(int window_length) const {
  return resolve_lambda(settings_.stat, 2, dim_, settings_.lambda_horizon, window_length);
}

IntervalMoments OnlineDetector::direct_moments(const Interval& window) const {
  const int width = dim_ * order_;
  IntervalMoments m;
  m.interval = window;
  m.gram = Matrix::Zero(width, width);
  m.cross = Matrix::Zero(width, dim_);
  m.response_gram = Matrix::Zero(dim_, dim_);
  Eigen::RowVectorXd z(width);
  for (int t = window.start; t <= window.end; ++t) {
    for (int k = 1; k <= order_; ++k) {
      z.segment((k - 1) * dim_, dim_) = rows_[static_cast<std::size_t>(t - k - 1)];
    }
    Eigen::RowVectorXd r = rows_[static_cast<std::size_t>(t - 1)] - z * baseline_.transpose();
    if (whitener_) r = r * *whitener_;
    m.gram.noalias() += z.transpose() * z;
    m.cross.noalias() += z.transpose() * r;
    m.response_gram.noalias() += r.transpose() * r;
  }
  m.mixing = whitener_;
  return m;
}

std::optional<OnlineAlarm> OnlineDetector::push(const Eigen::RowVectorXd& x) {
  ++time_;
  if (settings_.incremental) {
    scanner_.append(x);
  } else {
    rows_.push_back(x);
  }
  last_max_ = -std::numeric_limits<double>::infinity();
  if (time_ <= settings_.start_time) {
    return std::nullopt;
  }
  const int width = dim_ * order_;
  for (const auto& w : online_windows(time_, order_)) {
    if (settings_.stat.method == StatMethod::ols && w.length() < width) continue;
    const IntervalMoments m = settings_.incremental ? scanner_.moments(w) : direct_moments(w);
    const IntervalStatistic s = settings_.stat.method == StatMethod::ols
                                    ? ols_statistic(m)
                                    : lasso_statistic(m, lambda_for(w.length()),
                                                      settings_.stat.solver);
    last_max_ = std::max(last_max_, s.value);
    if (s.reliable && s.value > threshold_) {
      return OnlineAlarm{time_, w, s.value};
    }
  }
  return std::nullopt;
}

OnlineReport detect_online(const TimeSeriesPanel& stream, const Matrix& baseline, int order,
                           const OnlineSettings& settings, double threshold) {
  if (stream.length() < order + 1) {
    throw Error(ErrorKind::configuration, "stream shorter than q + 1 observations");
  }
  OnlineDetector detector(stream.dim(), baseline, order, settings, threshold);
  OnlineReport report;
  for (int t = 1; t <= stream.length(); ++t) {
    const auto alarm = detector.push(stream.at(t));
    report.last_time = t;
    if (t > settings.start_time) report.max_trace.push_back(detector.last_max());
    if (alarm) {
      report.alarm = alarm;
      break;
    }
  }
  return report;
}

CalibrationResult calibrate_online_threshold(const NullLaw& null,
                                             const OnlineSettings& settings, int runs,
                                             double quantile, std::uint64_t seed) {
  check_calibration(null, runs, quantile);
  CalibrationResult result;
  result.quantile = quantile;
  result.runs = runs;
  result.maxima.assign(static_cast<std::size_t>(runs), 0.0);
  parallel_for(runs, [&](int b) {
    const NullDraw draw =
        draw_null(null, settings.stat.noise, derive_seed(seed, static_cast<std::uint64_t>(b)));
    OnlineSettings s = settings;
    s.stat.noise = draw.noise;
    OnlineDetector detector(draw.panel.dim(), draw.baseline, null.law.order(), s,
                            std::numeric_limits<double>::infinity());
    double best = 0.0;
    for (int t = 1; t <= draw.panel.length(); ++t) {
      detector.push(draw.panel.at(t));
      if (t > s.start_time) best = std::max(best, detector.last_max());
    }
    result.maxima[static_cast<std::size_t>(b)] = best;
  });
  result.threshold = threshold_from_maxima(result.maxima, quantile);
  return result;
}

}  // namespace epivar
