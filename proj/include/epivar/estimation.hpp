#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epivar/var_model.hpp"

namespace epivar {

struct SolverOptions {
  double tolerance = 1e-8;  // on the largest coordinate change in a sweep
  int max_iterations = 10000;
  std::optional<Vector> warm_start;
  bool record_objective = false;
};

struct FitResult {
  Vector coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after each sweep, when requested.
  std::vector<double> objective_trace;
};

inline double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// Minimises ||y - X b||^2 + lambda ||b||_1 by cyclic coordinate descent.
/// There is no 1/(2n) factor, so each update thresholds at lambda / 2.
FitResult lasso_solve(const Matrix& x, const Vector& y, double lambda,
                      const SolverOptions& opts = {});

/// Same objective in covariance form, given gram = X'X, xty = X'y and
/// yty = y'y. Cost per sweep is O(m^2) regardless of the sample size.
FitResult lasso_solve_gram(const Matrix& gram, const Vector& xty, double yty, double lambda,
                           const SolverOptions& opts = {});

/// Least squares; throws ill_posed_design when n < m or when the smallest
/// singular value falls below 1e-10 times the largest.
FitResult ols_solve(const Matrix& x, const Vector& y);

/// Minimises ||y - X b||^2 + lambda ||b||^2 for lambda > 0.
FitResult ridge_solve(const Matrix& x, const Vector& y, double lambda);

struct BaselinePenalty {
  enum class Kind { none, ridge, lasso };
  Kind kind = Kind::ridge;
  /// Explicit penalty weight. When absent, C * sqrt(n (2 log p + log n)) is
  /// used with n the number of training rows.
  std::optional<double> lambda;
  double constant = 0.15;

  static BaselinePenalty none() { return {Kind::none, std::nullopt, 0.15}; }
  static BaselinePenalty ridge(std::optional<double> l = std::nullopt) {
    return {Kind::ridge, l, 0.15};
  }
  static BaselinePenalty lasso(std::optional<double> l = std::nullopt) {
    return {Kind::lasso, l, 0.15};
  }
};

const char* to_string(BaselinePenalty::Kind kind) noexcept;
BaselinePenalty::Kind parse_penalty_kind(const std::string& name);

/// Resolved penalty weight for a training panel of the given length.
double baseline_lambda(const BaselinePenalty& penalty, int dim, int length);

/// Row-wise VAR(q) fit on a training panel; returns the p x pq stack.
Matrix estimate_baseline(const TimeSeriesPanel& training, int order,
                         const BaselinePenalty& penalty);

/// Residual covariance (1 / (T - q)) sum r_t r_t'. Order 0 is accepted and
/// treats the observations themselves as residuals.
Matrix estimate_noise_covariance(const TimeSeriesPanel& training, const Matrix& baseline,
                                 int order);

}  // namespace epivar
