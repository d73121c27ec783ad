#include "samplan/logistic.hpp"

#include <cmath>

namespace samplan {

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double logistic_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
  return ll;
}

LogisticFit fit_logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd* offset, int max_iter, double tol) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols() + 1;

  Eigen::MatrixXd D(n, k);
  D.col(0).setOnes();
  if (X.cols() > 0) D.rightCols(X.cols()) = X;

  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(k);

  Eigen::VectorXd eta(n), p(n), w(n), score(k);
  auto update_eta = [&](const Eigen::VectorXd& beta) {
    eta = D * beta;
    if (offset) eta += *offset;
  };

  update_eta(fit.coef);
  double ll = logistic_loglik(eta, y);

  for (int it = 0; it < max_iter; ++it) {
    fit.iterations = it + 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-10);
    }
    score = D.transpose() * (y - p);
    fit.max_score = score.cwiseAbs().maxCoeff();
    if (fit.max_score < tol) {
      fit.converged = true;
      break;
    }
    Eigen::MatrixXd H = D.transpose() * w.asDiagonal() * D;
    Eigen::VectorXd step = H.ldlt().solve(score);
    if (!step.allFinite()) break;

    // Step halving keeps the likelihood non-decreasing.
    double scale = 1.0;
    Eigen::VectorXd candidate;
    double ll_new = ll;
    for (int half = 0; half < 30; ++half) {
      candidate = fit.coef + scale * step;
      update_eta(candidate);
      ll_new = logistic_loglik(eta, y);
      if (ll_new >= ll - 1e-12) break;
      scale *= 0.5;
    }
    fit.coef = candidate;
    ll = ll_new;
  }

  update_eta(fit.coef);
  fit.loglik = logistic_loglik(eta, y);
  if (!fit.converged) {
    for (Eigen::Index i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-eta[i]));
    fit.max_score = (D.transpose() * (y - p)).cwiseAbs().maxCoeff();
    fit.converged = fit.max_score < tol;
  }
  return fit;
}

double fit_intercept_offset(const Eigen::VectorXd& offset, const Eigen::VectorXd& y, int max_iter,
                            double tol) {
  const Eigen::Index n = offset.size();
  const double target = y.sum();
  double a = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    double s = 0.0, d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = 1.0 / (1.0 + std::exp(-(a + offset[i])));
      s += p;
      d += std::max(p * (1.0 - p), 1e-12);
    }
    double f = s - target;
    if (std::abs(f) < tol) return a;
    a -= f / d;
    a = std::min(std::max(a, -50.0), 50.0);
  }
  return a;
}

}  // namespace samplan
