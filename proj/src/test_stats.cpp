#include "epivar/test_stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace epivar {

const char* to_string(StatMethod method) noexcept {
  return method == StatMethod::ols ? "ols" : "lasso";
}

StatMethod parse_stat_method(const std::string& name) {
  if (name == "ols") return StatMethod::ols;
  if (name == "lasso") return StatMethod::lasso;
  throw Error(ErrorKind::configuration, "unknown method '" + name + "'");
}

const char* to_string(NoiseModel::Kind kind) noexcept {
  switch (kind) {
    case NoiseModel::Kind::identity: return "identity";
    case NoiseModel::Kind::known: return "known";
    case NoiseModel::Kind::estimated: return "estimated";
  }
  return "unknown";
}

double default_lambda(int min_length, int dim, int horizon, double constant) {
  if (min_length < 1 || dim < 1 || horizon < 1) {
    throw Error(ErrorKind::parameter, "lambda needs L, p, T >= 1");
  }
  return constant * std::sqrt(min_length * (2.0 * std::log(static_cast<double>(dim)) +
                                            std::log(static_cast<double>(horizon))));
}

double resolve_lambda(const StatConfig& config, int min_length, int dim, int horizon,
                      int interval_length) {
  if (config.lambda_override) {
    return *config.lambda_override;
  }
  const int len = config.per_interval_lambda ? interval_length : min_length;
  return default_lambda(len, dim, horizon, config.constant);
}

Matrix inverse_sqrt(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || !sigma.allFinite()) {
    throw Error(ErrorKind::covariance, "covariance must be a finite square matrix");
  }
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::covariance, "covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error(ErrorKind::covariance, "covariance is not positive definite");
  }
  const Vector inv_root = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
}

RegressionView whiten(const RegressionView& view, const Matrix& sigma) {
  if (sigma.rows() != view.dim()) {
    throw Error(ErrorKind::covariance, "covariance dimension does not match the view");
  }
  if (sigma.isIdentity(0.0)) return view;
  const Matrix s = inverse_sqrt(sigma);
  RegressionView out = view;
  // Rows are time slices, so y_t <- S y_t is Y <- Y S' = Y S.
  out.response = view.response * s;
  if (view.mixing) {
    out.mixing.emplace(s * *view.mixing);
  } else {
    out.mixing.emplace(s);
  }
  return out;
}

IntervalMoments moments_of(const RegressionView& view) {
  IntervalMoments m;
  m.interval = view.interval;
  m.gram = view.predictors.transpose() * view.predictors;
  m.cross = view.predictors.transpose() * view.response;
  m.response_gram = view.response.transpose() * view.response;
  m.mixing = view.mixing;
  return m;
}

IntervalStatistic ols_statistic(const RegressionView& view) {
  return ols_statistic(moments_of(view));
}

IntervalStatistic ols_statistic(const IntervalMoments& m) {
  const auto width = m.gram.rows();
  if (m.interval.length() < width) {
    std::ostringstream msg;
    msg << "OLS statistic on " << m.interval << " needs |J| >= pq = " << width;
    throw Error(ErrorKind::ill_posed_design, msg.str());
  }
  IntervalStatistic stat;
  stat.interval = m.interval;
  stat.method = StatMethod::ols;
  if (m.cross.isZero(0.0)) {
    return stat;
  }
  Eigen::LDLT<Matrix> ldlt(m.gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.rcond() > 1e-14)) {
    std::ostringstream msg;
    msg << "lag block on " << m.interval << " is rank deficient";
    throw Error(ErrorKind::ill_posed_design, msg.str());
  }
  // ||P_B W||_F^2; unchanged by the mixing matrix because M kron B spans the
  // same column space as I kron B.
  const Matrix coef = ldlt.solve(m.cross);
  stat.value = std::max(0.0, (m.cross.array() * coef.array()).sum());
  stat.support = static_cast<int>(width * m.cross.cols());
  return stat;
}

IntervalStatistic lasso_statistic(const RegressionView& view, double lambda,
                                  const SolverOptions& opts) {
  return lasso_statistic(moments_of(view), lambda, opts);
}

IntervalStatistic lasso_statistic(const IntervalMoments& m, double lambda,
                                  const SolverOptions& opts) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorKind::parameter, "lambda must be non-negative");
  }
  IntervalStatistic stat;
  stat.interval = m.interval;
  stat.method = StatMethod::lasso;
  stat.lambda = lambda;

  const auto p = m.cross.cols();
  double value = 0.0;
  if (!m.mixing) {
    // I_p kron B decouples into p independent problems sharing one gram.
    for (Eigen::Index j = 0; j < p; ++j) {
      const double yty = m.response_gram(j, j);
      const FitResult fit = lasso_solve_gram(m.gram, m.cross.col(j), yty, lambda, opts);
      value += yty - fit.objective;
      stat.support += static_cast<int>((fit.coefficients.array() != 0.0).count());
      stat.reliable = stat.reliable && fit.converged;
    }
  } else {
    const Matrix& mix = *m.mixing;
    const Matrix precision = mix.transpose() * mix;
    const auto w = m.gram.rows();
    Matrix gram(w * p, w * p);
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        gram.block(i * w, j * w, w, w) = precision(i, j) * m.gram;
      }
    }
    const Matrix linear = m.cross * mix;
    const Vector xty = Eigen::Map<const Vector>(linear.data(), linear.size());
    const double yty = m.response_gram.trace();
    const FitResult fit = lasso_solve_gram(gram, xty, yty, lambda, opts);
    value = yty - fit.objective;
    stat.support = static_cast<int>((fit.coefficients.array() != 0.0).count());
    stat.reliable = fit.converged;
  }
  stat.value = std::max(0.0, value);
  return stat;
}

// ---------------------------------------------------------------------------

IntervalScanner::IntervalScanner(int dim, Matrix baseline, int order, const NoiseModel& noise)
    : dim_(dim), order_(order), width_(dim * order), baseline_(std::move(baseline)) {
  if (dim < 1 || order < 1) {
    throw Error(ErrorKind::parameter, "scanner needs p >= 1 and q >= 1");
  }
  if (baseline_.rows() != dim_ || baseline_.cols() != width_) {
    throw Error(ErrorKind::parameter, "baseline must be p x pq");
  }
  if (noise.cov) {
    if (noise.cov->rows() != dim_) {
      throw Error(ErrorKind::covariance, "covariance dimension does not match the panel");
    }
    if (!noise.cov->isIdentity(0.0)) {
      whitener_ = inverse_sqrt(*noise.cov);
    }
  }
  gram_sums_.assign(static_cast<std::size_t>(width_ * width_), 0.0);
  cross_sums_.assign(static_cast<std::size_t>(width_ * dim_), 0.0);
  resp_sums_.assign(static_cast<std::size_t>(dim_ * dim_), 0.0);
}

IntervalScanner::IntervalScanner(const TimeSeriesPanel& panel, Matrix baseline, int order,
                                 const NoiseModel& noise)
    : IntervalScanner(panel.dim(), std::move(baseline), order, noise) {
  const auto n = static_cast<std::size_t>(panel.length()) + 1;
  gram_sums_.reserve(n * static_cast<std::size_t>(width_ * width_));
  cross_sums_.reserve(n * static_cast<std::size_t>(width_ * dim_));
  resp_sums_.reserve(n * static_cast<std::size_t>(dim_ * dim_));
  for (int t = 1; t <= panel.length(); ++t) {
    append(panel.at(t));
  }
}

void IntervalScanner::append(const Eigen::RowVectorXd& x) {
  if (x.size() != dim_) {
    throw Error(ErrorKind::parameter, "observation has the wrong dimension");
  }
  ++length_;
  const auto gsz = static_cast<std::size_t>(width_ * width_);
  const auto csz = static_cast<std::size_t>(width_ * dim_);
  const auto rsz = static_cast<std::size_t>(dim_ * dim_);
  const std::size_t prev = static_cast<std::size_t>(length_ - 1);

  gram_sums_.resize(gram_sums_.size() + gsz);
  cross_sums_.resize(cross_sums_.size() + csz);
  resp_sums_.resize(resp_sums_.size() + rsz);
  Eigen::Map<Matrix> gram(gram_sums_.data() + (prev + 1) * gsz, width_, width_);
  Eigen::Map<Matrix> cross(cross_sums_.data() + (prev + 1) * csz, width_, dim_);
  Eigen::Map<Matrix> resp(resp_sums_.data() + (prev + 1) * rsz, dim_, dim_);
  gram = Eigen::Map<const Matrix>(gram_sums_.data() + prev * gsz, width_, width_);
  cross = Eigen::Map<const Matrix>(cross_sums_.data() + prev * csz, width_, dim_);
  resp = Eigen::Map<const Matrix>(resp_sums_.data() + prev * rsz, dim_, dim_);

  if (length_ > order_) {
    Eigen::RowVectorXd z(width_);
    for (int k = 0; k < order_; ++k) {
      z.segment(k * dim_, dim_) = history_[static_cast<std::size_t>(k)];
    }
    Eigen::RowVectorXd r = x - z * baseline_.transpose();
    if (whitener_) {
      r = r * *whitener_;
    }
    gram.noalias() += z.transpose() * z;
    cross.noalias() += z.transpose() * r;
    resp.noalias() += r.transpose() * r;
  }
  history_.insert(history_.begin(), x);
  if (static_cast<int>(history_.size()) > order_) {
    history_.pop_back();
  }
}

IntervalMoments IntervalScanner::moments(const Interval& interval) const {
  if (interval.start < order_ + 1) {
    std::ostringstream msg;
    msg << "interval " << interval << " starts before t = " << order_ + 1
        << "; not enough lags";
    throw Error(ErrorKind::insufficient_lags, msg.str());
  }
  if (interval.end > length_ || interval.start > interval.end) {
    std::ostringstream msg;
    msg << "interval " << interval << " outside panel of length " << length_;
    throw Error(ErrorKind::contract, msg.str());
  }
  const auto hi = static_cast<std::size_t>(interval.end);
  const auto lo = static_cast<std::size_t>(interval.start - 1);
  const auto gsz = static_cast<std::size_t>(width_ * width_);
  const auto csz = static_cast<std::size_t>(width_ * dim_);
  const auto rsz = static_cast<std::size_t>(dim_ * dim_);
  IntervalMoments m;
  m.interval = interval;
  m.gram = Eigen::Map<const Matrix>(gram_sums_.data() + hi * gsz, width_, width_) -
           Eigen::Map<const Matrix>(gram_sums_.data() + lo * gsz, width_, width_);
  m.cross = Eigen::Map<const Matrix>(cross_sums_.data() + hi * csz, width_, dim_) -
            Eigen::Map<const Matrix>(cross_sums_.data() + lo * csz, width_, dim_);
  m.response_gram = Eigen::Map<const Matrix>(resp_sums_.data() + hi * rsz, dim_, dim_) -
                    Eigen::Map<const Matrix>(resp_sums_.data() + lo * rsz, dim_, dim_);
  m.mixing = whitener_;
  return m;
}

IntervalStatistic IntervalScanner::statistic(const Interval& interval,
                                             const StatConfig& config, double lambda) const {
  const IntervalMoments m = moments(interval);
  if (config.method == StatMethod::ols) {
    return ols_statistic(m);
  }
  return lasso_statistic(m, lambda, config.solver);
}

}  // namespace epivar
