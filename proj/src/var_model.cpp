#include "epivar/var_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace epivar {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::rejected_parameters: return "rejected-parameters";
    case ErrorKind::construction: return "construction";
    case ErrorKind::insufficient_lags: return "insufficient-lags";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::ill_posed_design: return "ill-posed-design";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::covariance: return "covariance";
    case ErrorKind::contract: return "contract";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

namespace {

Matrix stack_coeffs(const std::vector<Matrix>& coeffs) {
  const auto p = coeffs.front().rows();
  Matrix out(p, p * static_cast<Eigen::Index>(coeffs.size()));
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    out.middleCols(static_cast<Eigen::Index>(k) * p, p) = coeffs[k];
  }
  return out;
}

void check_positive_definite(const Matrix& cov, ErrorKind kind, const char* what) {
  if (cov.rows() != cov.cols()) {
    throw Error(kind, std::string(what) + " must be square");
  }
  if (!cov.allFinite()) {
    throw Error(kind, std::string(what) + " has non-finite entries");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(kind, std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error(kind, std::string(what) + " is not positive definite");
  }
}

}  // namespace

double companion_spectral_radius(const Matrix& stacked, int order) {
  const auto p = stacked.rows();
  const auto n = p * order;
  if (n == 0) {
    return 0.0;
  }
  Matrix companion = Matrix::Zero(n, n);
  companion.topRows(p) = stacked;
  if (order > 1) {
    companion.bottomLeftCorner(n - p, n - p).setIdentity();
  }
  Eigen::EigenSolver<Matrix> eig(companion, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

VarParams::VarParams(std::vector<Matrix> coeffs, Matrix noise_cov)
    : coeffs_(std::move(coeffs)), noise_cov_(std::move(noise_cov)) {
  if (coeffs_.empty()) {
    throw Error(ErrorKind::rejected_parameters, "VAR order must be at least 1");
  }
  dim_ = static_cast<int>(coeffs_.front().rows());
  if (dim_ < 1) {
    throw Error(ErrorKind::rejected_parameters, "VAR dimension must be at least 1");
  }
  for (const auto& a : coeffs_) {
    if (a.rows() != dim_ || a.cols() != dim_) {
      throw Error(ErrorKind::rejected_parameters, "coefficient matrices must all be p x p");
    }
    if (!a.allFinite()) {
      throw Error(ErrorKind::rejected_parameters, "coefficient matrix has non-finite entries");
    }
  }
  if (noise_cov_.rows() != dim_) {
    throw Error(ErrorKind::rejected_parameters, "noise covariance must be p x p");
  }
  check_positive_definite(noise_cov_, ErrorKind::rejected_parameters, "noise covariance");
  const double radius = spectral_radius();
  if (!(radius < 1.0)) {
    std::ostringstream msg;
    msg << "non-stationary coefficients (companion spectral radius " << radius << ")";
    throw Error(ErrorKind::rejected_parameters, msg.str());
  }
}

VarParams VarParams::var1(const Matrix& coeff) {
  return VarParams({coeff}, Matrix::Identity(coeff.rows(), coeff.rows()));
}

VarParams VarParams::from_stacked(const Matrix& stacked, Matrix noise_cov, int order) {
  if (order < 1 || stacked.cols() != stacked.rows() * order) {
    throw Error(ErrorKind::rejected_parameters, "stacked coefficients must be p x pq");
  }
  const auto p = stacked.rows();
  std::vector<Matrix> coeffs;
  coeffs.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    coeffs.emplace_back(stacked.middleCols(k * p, p));
  }
  return VarParams(std::move(coeffs), std::move(noise_cov));
}

Matrix VarParams::stacked() const { return stack_coeffs(coeffs_); }

double VarParams::spectral_radius() const {
  return companion_spectral_radius(stacked(), order());
}

// ---------------------------------------------------------------------------

AnomalyScenario::AnomalyScenario(VarParams base, int horizon, int burn_in)
    : base_(std::move(base)), base_stack_(base_.stacked()), horizon_(horizon),
      burn_in_(burn_in) {}

AnomalyScenario::AnomalyScenario(VarParams base, Matrix delta, Interval window, int horizon,
                                 int burn_in)
    : AnomalyScenario(std::move(base), std::vector<AnomalySegment>{{window, std::move(delta)}},
                      horizon, burn_in) {}

AnomalyScenario::AnomalyScenario(VarParams base, std::vector<AnomalySegment> segments,
                                 int horizon, int burn_in)
    : AnomalyScenario(std::move(base), horizon, burn_in) {
  segments_ = std::move(segments);
  if (segments_.empty()) {
    throw Error(ErrorKind::construction,
                "anomaly scenario needs at least one segment; use AnomalyScenario::null");
  }
  validate();
}

AnomalyScenario AnomalyScenario::null(VarParams base, int horizon, int burn_in) {
  AnomalyScenario s(std::move(base), horizon, burn_in);
  s.validate();
  return s;
}

void AnomalyScenario::validate() {
  if (horizon_ < 1) {
    throw Error(ErrorKind::construction, "horizon must be positive");
  }
  if (burn_in_ < 0) {
    throw Error(ErrorKind::construction, "burn-in must be non-negative");
  }
  std::sort(segments_.begin(), segments_.end(),
            [](const AnomalySegment& a, const AnomalySegment& b) {
              return a.window.start < b.window.start;
            });
  shifted_stacks_.clear();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    const auto& w = seg.window;
    if (!(0 < w.start && w.start < w.end && w.end < horizon_)) {
      std::ostringstream msg;
      msg << "anomaly window " << w << " must satisfy 0 < start < end < T = " << horizon_;
      throw Error(ErrorKind::construction, msg.str());
    }
    if (i > 0 && segments_[i - 1].window.overlaps(w)) {
      throw Error(ErrorKind::construction, "anomaly windows must be disjoint");
    }
    if (seg.delta.rows() != base_stack_.rows() || seg.delta.cols() != base_stack_.cols()) {
      throw Error(ErrorKind::construction, "change matrix must be p x pq");
    }
    if (seg.delta.isZero(0.0)) {
      throw Error(ErrorKind::construction,
                  "change matrix is zero; build a null scenario explicitly");
    }
    Matrix shifted = base_stack_ + seg.delta;
    // Validates stationarity of the anomalous regime.
    VarParams::from_stacked(shifted, base_.noise_cov(), base_.order());
    shifted_stacks_.push_back(std::move(shifted));
  }
}

std::vector<Interval> AnomalyScenario::windows() const {
  std::vector<Interval> out;
  out.reserve(segments_.size());
  for (const auto& s : segments_) {
    out.push_back(s.window);
  }
  return out;
}

const Matrix& AnomalyScenario::stack_at(int t) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].window.contains(t)) {
      return shifted_stacks_[i];
    }
  }
  return base_stack_;
}

// ---------------------------------------------------------------------------

TimeSeriesPanel::TimeSeriesPanel(Matrix values, std::vector<std::string> timestamps)
    : values_(std::move(values)), timestamps_(std::move(timestamps)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw Error(ErrorKind::contract, "panel must have at least one row and one column");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorKind::contract, "panel has non-finite entries");
  }
  if (!timestamps_.empty()) {
    if (static_cast<Eigen::Index>(timestamps_.size()) != values_.rows()) {
      throw Error(ErrorKind::contract, "timestamp count must equal panel length");
    }
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
      if (!(timestamps_[i - 1] < timestamps_[i])) {
        throw Error(ErrorKind::contract, "timestamps must be strictly increasing");
      }
    }
  }
}

TimeSeriesPanel TimeSeriesPanel::slice(int first, int last) const {
  if (first < 1 || last > length() || first > last) {
    throw Error(ErrorKind::contract, "panel slice out of range");
  }
  std::vector<std::string> stamps;
  if (has_timestamps()) {
    stamps.assign(timestamps_.begin() + (first - 1), timestamps_.begin() + last);
  }
  return TimeSeriesPanel(values_.middleRows(first - 1, last - first + 1), std::move(stamps));
}

Vector RegressionView::response_vector() const {
  return Eigen::Map<const Vector>(response.data(), response.size());
}

Matrix RegressionView::dense_design() const {
  const auto p = response.cols();
  const Matrix mix = mixing ? *mixing : Matrix::Identity(p, p);
  const auto n = predictors.rows();
  const auto m = predictors.cols();
  Matrix out(n * p, m * p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      out.block(i * n, j * m, n, m) = mix(i, j) * predictors;
    }
  }
  return out;
}

Eigen::RowVectorXd lag_row(const TimeSeriesPanel& panel, int t, int order) {
  const int p = panel.dim();
  Eigen::RowVectorXd z(p * order);
  for (int k = 1; k <= order; ++k) {
    z.segment((k - 1) * p, p) = panel.at(t - k);
  }
  return z;
}

// ---------------------------------------------------------------------------

namespace {

// Shared recursion so a null scenario and a plain simulation consume the RNG
// identically.
template <typename StackAt>
TimeSeriesPanel run_recursion(const VarParams& params, int length, int burn_in,
                              std::uint64_t seed, StackAt stack_at) {
  if (length < 1) {
    throw Error(ErrorKind::parameter, "simulation length must be positive");
  }
  if (burn_in < 0) {
    throw Error(ErrorKind::parameter, "burn-in must be non-negative");
  }
  const int p = params.dim();
  const int q = params.order();
  const Matrix chol = params.noise_cov().llt().matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int total = burn_in + length;
  // Column s + q holds the draw at step s; the first q columns are the zero
  // initial state.
  Matrix path = Matrix::Zero(p, total + q);
  Vector z(p);
  for (int s = 0; s < total; ++s) {
    const int t = s - burn_in + 1;  // retained time index, <= 0 during burn-in
    const Matrix& stack = stack_at(t);
    for (int i = 0; i < p; ++i) {
      z(i) = normal(rng);
    }
    Vector x = chol * z;
    for (int k = 1; k <= q; ++k) {
      x.noalias() += stack.middleCols((k - 1) * p, p) * path.col(s + q - k);
    }
    path.col(s + q) = x;
  }
  return TimeSeriesPanel(path.rightCols(length).transpose());
}

}  // namespace

TimeSeriesPanel simulate(const VarParams& params, int length, int burn_in,
                         std::uint64_t seed) {
  const Matrix stack = params.stacked();
  return run_recursion(params, length, burn_in, seed,
                       [&](int) -> const Matrix& { return stack; });
}

TimeSeriesPanel simulate_with_anomaly(const AnomalyScenario& scenario, std::uint64_t seed) {
  const Matrix& base = scenario.stack_at(0);
  return run_recursion(scenario.base(), scenario.horizon(), scenario.burn_in(), seed,
                       [&](int t) -> const Matrix& {
                         return t < 1 ? base : scenario.stack_at(t);
                       });
}

RegressionView build_regression_view(const TimeSeriesPanel& panel, const Matrix& baseline,
                                     const Interval& interval, int order) {
  const int p = panel.dim();
  if (order < 1) {
    throw Error(ErrorKind::parameter, "VAR order must be at least 1");
  }
  if (baseline.rows() != p || baseline.cols() != p * order) {
    throw Error(ErrorKind::parameter, "baseline must be p x pq");
  }
  if (interval.start < order + 1) {
    std::ostringstream msg;
    msg << "interval " << interval << " starts before t = " << order + 1
        << "; not enough lags";
    throw Error(ErrorKind::insufficient_lags, msg.str());
  }
  if (interval.end > panel.length() || interval.start > interval.end) {
    std::ostringstream msg;
    msg << "interval " << interval << " outside panel of length " << panel.length();
    throw Error(ErrorKind::contract, msg.str());
  }
  const int n = interval.length();
  RegressionView view{interval, Matrix(n, p), Matrix(n, p * order), std::nullopt};
  for (int i = 0; i < n; ++i) {
    const int t = interval.start + i;
    const Eigen::RowVectorXd z = lag_row(panel, t, order);
    view.predictors.row(i) = z;
    view.response.row(i) = panel.at(t) - z * baseline.transpose();
  }
  return view;
}

VarParams generate_dense_stationary(int dim, std::uint64_t seed, double target_radius) {
  if (dim < 1) {
    throw Error(ErrorKind::parameter, "dimension must be at least 1");
  }
  if (!(target_radius > 0.0 && target_radius < 1.0)) {
    throw Error(ErrorKind::parameter, "target spectral radius must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix a(dim, dim);
  double radius = 0.0;
  while (!(radius > 0.0)) {
    for (int j = 0; j < dim; ++j) {
      for (int i = 0; i < dim; ++i) {
        double v = 0.0;
        while (v == 0.0) {
          v = unif(rng);
        }
        a(i, j) = v;
      }
    }
    radius = companion_spectral_radius(a, 1);
  }
  a *= target_radius / radius;
  return VarParams::var1(a);
}

VarParams generate_sparse_offdiag(int dim, double value, int order) {
  if (dim < 1 || order < 1) {
    throw Error(ErrorKind::parameter, "dimension and order must be at least 1");
  }
  std::vector<Matrix> coeffs(static_cast<std::size_t>(order), Matrix::Zero(dim, dim));
  for (int i = 0; i + 1 < dim; ++i) {
    coeffs[0](i, i + 1) = value;
  }
  return VarParams(std::move(coeffs), Matrix::Identity(dim, dim));
}

}  // namespace epivar
