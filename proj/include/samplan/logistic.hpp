#pragma once

#include <Eigen/Dense>

namespace samplan {

struct LogisticFit {
  Eigen::VectorXd coef;  // intercept first
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double max_score = 0.0;  // max_j |sum_i (y_i - p_i) x_ji| at exit
};

// Numerically safe log(1 + exp(x)).
double softplus(double x);

// Bernoulli log-likelihood of linear predictor eta against y.
double logistic_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y);

// Maximum-likelihood logistic regression by iteratively reweighted least
// squares with step halving. X excludes the intercept column (added
// internally); `offset`, when non-null, is added to the linear predictor.
// Convergence: max |score| < tol, score_j = sum_i (y_i - p_i) x_ji.
// Does not throw on separation; returns converged=false.
LogisticFit fit_logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd* offset = nullptr, int max_iter = 100,
                              double tol = 1e-9);

// Intercept-only logistic fit with offset: solves sum_i p_i = sum_i y_i by
// 1-D Newton. Used for shrinkage intercept re-estimation.
double fit_intercept_offset(const Eigen::VectorXd& offset, const Eigen::VectorXd& y,
                            int max_iter = 100, double tol = 1e-9);

}  // namespace samplan
