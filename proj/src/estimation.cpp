#include "epivar/estimation.hpp"

#include <cmath>
#include <sstream>

#include "epivar/test_stats.hpp"

namespace epivar {

namespace {

void check_lasso_inputs(double lambda, const SolverOptions& opts, Eigen::Index m) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::parameter, "lasso penalty must be finite and non-negative");
  }
  if (!(opts.tolerance >= 0.0) || opts.max_iterations < 1) {
    throw Error(ErrorKind::parameter, "solver tolerance must be >= 0 and iterations >= 1");
  }
  if (opts.warm_start && opts.warm_start->size() != m) {
    throw Error(ErrorKind::parameter, "warm start has the wrong length");
  }
}

double gram_objective(const Matrix& gram, const Vector& xty, double yty, double lambda,
                      const Vector& beta) {
  return yty - 2.0 * beta.dot(xty) + beta.dot(gram * beta) + lambda * beta.lpNorm<1>();
}

}  // namespace

FitResult lasso_solve(const Matrix& x, const Vector& y, double lambda,
                      const SolverOptions& opts) {
  const auto m = x.cols();
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::parameter, "design and response lengths differ");
  }
  check_lasso_inputs(lambda, opts, m);

  const Vector col_sq = x.colwise().squaredNorm();
  FitResult fit;
  fit.coefficients = opts.warm_start ? *opts.warm_start : Vector::Zero(m);
  Vector& beta = fit.coefficients;
  Vector resid = y - x * beta;
  const double half = 0.5 * lambda;

  auto objective = [&] { return resid.squaredNorm() + lambda * beta.lpNorm<1>(); };

  for (fit.iterations = 1; fit.iterations <= opts.max_iterations; ++fit.iterations) {
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (col_sq(k) <= 0.0) {
        beta(k) = 0.0;
        continue;
      }
      const double rho = x.col(k).dot(resid) + col_sq(k) * beta(k);
      const double next = soft_threshold(rho, half) / col_sq(k);
      const double delta = next - beta(k);
      if (delta != 0.0) {
        resid.noalias() -= delta * x.col(k);
        beta(k) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (opts.record_objective) {
      fit.objective_trace.push_back(objective());
    }
    if (max_change <= opts.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, opts.max_iterations);
  resid = y - x * beta;
  fit.objective = objective();
  return fit;
}

FitResult lasso_solve_gram(const Matrix& gram, const Vector& xty, double yty, double lambda,
                           const SolverOptions& opts) {
  const auto m = gram.rows();
  if (gram.cols() != m || xty.size() != m) {
    throw Error(ErrorKind::parameter, "gram matrix and cross-product shapes disagree");
  }
  check_lasso_inputs(lambda, opts, m);

  FitResult fit;
  fit.coefficients = opts.warm_start ? *opts.warm_start : Vector::Zero(m);
  Vector& beta = fit.coefficients;
  // grad = X'(y - X beta)
  Vector grad = xty - gram * beta;
  const double half = 0.5 * lambda;

  auto objective = [&] {
    return yty - beta.dot(xty) - beta.dot(grad) + lambda * beta.lpNorm<1>();
  };

  for (fit.iterations = 1; fit.iterations <= opts.max_iterations; ++fit.iterations) {
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double gkk = gram(k, k);
      if (gkk <= 0.0) {
        beta(k) = 0.0;
        continue;
      }
      const double rho = grad(k) + gkk * beta(k);
      const double next = soft_threshold(rho, half) / gkk;
      const double delta = next - beta(k);
      if (delta != 0.0) {
        grad.noalias() -= delta * gram.col(k);
        beta(k) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (opts.record_objective) {
      fit.objective_trace.push_back(objective());
    }
    if (max_change <= opts.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, opts.max_iterations);
  fit.objective = gram_objective(gram, xty, yty, lambda, beta);
  return fit;
}

FitResult ols_solve(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::parameter, "design and response lengths differ");
  }
  if (x.rows() < x.cols()) {
    std::ostringstream msg;
    msg << "least squares needs n >= m (n = " << x.rows() << ", m = " << x.cols() << ")";
    throw Error(ErrorKind::ill_posed_design, msg.str());
  }
  FitResult fit;
  if (x.cols() == 0) {
    fit.coefficients = Vector::Zero(0);
  } else {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-10 * sv.maxCoeff())) {
      throw Error(ErrorKind::ill_posed_design, "design is rank deficient");
    }
    fit.coefficients = svd.solve(y);
  }
  fit.objective = (y - x * fit.coefficients).squaredNorm();
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

FitResult ridge_solve(const Matrix& x, const Vector& y, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::parameter, "ridge penalty must be positive");
  }
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::parameter, "design and response lengths differ");
  }
  Matrix a = x.transpose() * x;
  a.diagonal().array() += lambda;
  FitResult fit;
  fit.coefficients = a.ldlt().solve(x.transpose() * y);
  fit.objective = (y - x * fit.coefficients).squaredNorm() +
                  lambda * fit.coefficients.squaredNorm();
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

const char* to_string(BaselinePenalty::Kind kind) noexcept {
  switch (kind) {
    case BaselinePenalty::Kind::none: return "none";
    case BaselinePenalty::Kind::ridge: return "ridge";
    case BaselinePenalty::Kind::lasso: return "lasso";
  }
  return "unknown";
}

BaselinePenalty::Kind parse_penalty_kind(const std::string& name) {
  if (name == "none") return BaselinePenalty::Kind::none;
  if (name == "ridge") return BaselinePenalty::Kind::ridge;
  if (name == "lasso") return BaselinePenalty::Kind::lasso;
  throw Error(ErrorKind::configuration, "unknown baseline penalty '" + name + "'");
}

double baseline_lambda(const BaselinePenalty& penalty, int dim, int length) {
  if (penalty.lambda) {
    return *penalty.lambda;
  }
  return default_lambda(length, dim, length, penalty.constant);
}

Matrix estimate_baseline(const TimeSeriesPanel& training, int order,
                         const BaselinePenalty& penalty) {
  if (order < 1) {
    throw Error(ErrorKind::parameter, "VAR order must be at least 1");
  }
  const int p = training.dim();
  const int rows = training.length() - order;
  if (training.length() < order + 2) {
    std::ostringstream msg;
    msg << "baseline estimation needs at least q + 2 = " << order + 2 << " rows, got "
        << training.length();
    throw Error(ErrorKind::insufficient_data, msg.str());
  }
  const int m = p * order;
  Matrix design(rows, m);
  for (int i = 0; i < rows; ++i) {
    design.row(i) = lag_row(training, order + 1 + i, order);
  }
  const Matrix response = training.values().bottomRows(rows);

  Matrix theta(p, m);
  switch (penalty.kind) {
    case BaselinePenalty::Kind::none: {
      if (rows < m) {
        std::ostringstream msg;
        msg << "unpenalised baseline needs at least pq = " << m << " usable rows, got "
            << rows;
        throw Error(ErrorKind::insufficient_data, msg.str());
      }
      for (int i = 0; i < p; ++i) {
        theta.row(i) = ols_solve(design, response.col(i)).coefficients.transpose();
      }
      break;
    }
    case BaselinePenalty::Kind::ridge: {
      const double lambda = baseline_lambda(penalty, p, rows);
      if (!(lambda > 0.0)) {
        throw Error(ErrorKind::parameter, "ridge penalty must be positive");
      }
      Matrix a = design.transpose() * design;
      a.diagonal().array() += lambda;
      theta = a.ldlt().solve(design.transpose() * response).transpose();
      break;
    }
    case BaselinePenalty::Kind::lasso: {
      const double lambda = baseline_lambda(penalty, p, rows);
      const Matrix gram = design.transpose() * design;
      const Matrix cross = design.transpose() * response;
      for (int i = 0; i < p; ++i) {
        const FitResult fit =
            lasso_solve_gram(gram, cross.col(i), response.col(i).squaredNorm(), lambda);
        if (!fit.converged) {
          throw Error(ErrorKind::numerical, "baseline lasso did not converge");
        }
        theta.row(i) = fit.coefficients.transpose();
      }
      break;
    }
  }
  return theta;
}

Matrix estimate_noise_covariance(const TimeSeriesPanel& training, const Matrix& baseline,
                                 int order) {
  const int p = training.dim();
  if (order < 0 || baseline.rows() != p || baseline.cols() != p * order) {
    throw Error(ErrorKind::parameter, "baseline must be p x pq");
  }
  if (training.length() <= order) {
    throw Error(ErrorKind::insufficient_data, "noise covariance needs more rows than q");
  }
  const int rows = training.length() - order;
  Matrix resid = training.values().bottomRows(rows);
  if (order > 0) {
    Matrix design(rows, p * order);
    for (int i = 0; i < rows; ++i) {
      design.row(i) = lag_row(training, order + 1 + i, order);
    }
    resid.noalias() -= design * baseline.transpose();
  }
  Matrix cov = resid.transpose() * resid / static_cast<double>(rows);
  return 0.5 * (cov + cov.transpose());
}

}  // namespace epivar
