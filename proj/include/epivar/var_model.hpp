#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epivar/error.hpp"
#include "epivar/intervals.hpp"

namespace epivar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Law of a zero-mean Gaussian VAR(q) process
///   x_t = A_1 x_{t-1} + ... + A_q x_{t-q} + e_t,  e_t ~ N(0, noise_cov).
///
/// Construction validates shapes, symmetry and positive definiteness of the
/// noise covariance, and stationarity (companion spectral radius < 1).
class VarParams {
 public:
  VarParams(std::vector<Matrix> coeffs, Matrix noise_cov);

  /// Convenience for VAR(1) with identity noise.
  static VarParams var1(const Matrix& coeff);

  /// Builds from a stacked p x pq matrix (A_1, ..., A_q).
  static VarParams from_stacked(const Matrix& stacked, Matrix noise_cov, int order);

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return static_cast<int>(coeffs_.size()); }
  const std::vector<Matrix>& coeffs() const noexcept { return coeffs_; }
  const Matrix& noise_cov() const noexcept { return noise_cov_; }

  /// (A_1, ..., A_q) as a p x pq matrix; this is the baseline theta used by
  /// the regression view.
  Matrix stacked() const;

  double spectral_radius() const;

 private:
  std::vector<Matrix> coeffs_;
  Matrix noise_cov_;
  int dim_ = 0;
};

/// Spectral radius of the VAR companion matrix built from a p x pq stack.
double companion_spectral_radius(const Matrix& stacked, int order);

/// One epidemic segment: coefficients shift by `delta` on the closed window.
struct AnomalySegment {
  Interval window;
  Matrix delta;  // p x pq
};

/// Baseline law plus zero or more anomalous windows on a horizon of T points.
///
/// Windows must satisfy 0 < start < end < T, be pairwise disjoint, and each
/// shifted law must itself be stationary. A scenario without segments is
/// only valid when built through `null`.
class AnomalyScenario {
 public:
  AnomalyScenario(VarParams base, Matrix delta, Interval window, int horizon,
                  int burn_in = 200);
  AnomalyScenario(VarParams base, std::vector<AnomalySegment> segments, int horizon,
                  int burn_in = 200);

  static AnomalyScenario null(VarParams base, int horizon, int burn_in = 200);

  const VarParams& base() const noexcept { return base_; }
  const std::vector<AnomalySegment>& segments() const noexcept { return segments_; }
  int horizon() const noexcept { return horizon_; }
  int burn_in() const noexcept { return burn_in_; }
  bool is_null() const noexcept { return segments_.empty(); }

  std::vector<Interval> windows() const;

  /// Coefficient stack in force at time t (1-based).
  const Matrix& stack_at(int t) const;

 private:
  AnomalyScenario(VarParams base, int horizon, int burn_in);
  void validate();

  VarParams base_;
  Matrix base_stack_;
  std::vector<AnomalySegment> segments_;
  std::vector<Matrix> shifted_stacks_;
  int horizon_ = 0;
  int burn_in_ = 0;
};

/// T x p observations, row t-1 holding x_t, with optional ordered labels.
class TimeSeriesPanel {
 public:
  TimeSeriesPanel() = default;
  explicit TimeSeriesPanel(Matrix values, std::vector<std::string> timestamps = {});

  int length() const noexcept { return static_cast<int>(values_.rows()); }
  int dim() const noexcept { return static_cast<int>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& timestamps() const noexcept { return timestamps_; }
  bool has_timestamps() const noexcept { return !timestamps_.empty(); }

  /// Observation x_t for 1-based t.
  Eigen::Ref<const Eigen::RowVectorXd> at(int t) const { return values_.row(t - 1); }

  /// Rows [first, last] (1-based, inclusive) as a new panel.
  TimeSeriesPanel slice(int first, int last) const;

 private:
  Matrix values_;
  std::vector<std::string> timestamps_;
};

/// Regression form of one candidate interval J:
///   Y_J = (M kron B_J) Theta + E_J
/// where B_J stacks the lag rows (x_{t-1}', ..., x_{t-q}') for t in J and the
/// response rows are x_t' minus the baseline prediction. `response` holds the
/// |J| x p matrix whose column-major vectorisation is Y_J. The mixing matrix M
/// is the identity unless the view has been whitened; the Kronecker design is
/// never formed.
struct RegressionView {
  Interval interval;
  Matrix response;    // |J| x p
  Matrix predictors;  // |J| x pq
  std::optional<Matrix> mixing;

  int dim() const noexcept { return static_cast<int>(response.cols()); }
  int length() const noexcept { return static_cast<int>(response.rows()); }
  Vector response_vector() const;
  /// Dense (|J| p) x (p^2 q) design; for tests and small problems only.
  Matrix dense_design() const;
};

/// Lag row z_t = (x_{t-1}', ..., x_{t-q}') for 1-based t > q.
Eigen::RowVectorXd lag_row(const TimeSeriesPanel& panel, int t, int order);

TimeSeriesPanel simulate(const VarParams& params, int length, int burn_in,
                         std::uint64_t seed);

TimeSeriesPanel simulate_with_anomaly(const AnomalyScenario& scenario, std::uint64_t seed);

RegressionView build_regression_view(const TimeSeriesPanel& panel, const Matrix& baseline,
                                     const Interval& interval, int order);

/// Dense coefficients with i.i.d. uniform(-1, 1) entries, rescaled so the
/// spectral radius equals `target_radius`. Identity noise covariance.
VarParams generate_dense_stationary(int dim, std::uint64_t seed, double target_radius = 0.7);

/// Strictly upper bidiagonal coefficients: `value` at (i, i+1) of A_1, any
/// higher lags zero. Identity noise covariance.
VarParams generate_sparse_offdiag(int dim, double value, int order = 1);

}  // namespace epivar
