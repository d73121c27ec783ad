#include "samplan/serial_ref.hpp"

#include <cmath>

namespace samplan::serial {

double c_statistic_allpairs(std::span<const double> risks,
                            std::span<const std::uint8_t> outcomes) {
  double concordant = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    if (!outcomes[i]) continue;
    for (std::size_t j = 0; j < risks.size(); ++j) {
      if (outcomes[j]) continue;
      pairs += 1.0;
      if (risks[i] > risks[j])
        concordant += 1.0;
      else if (risks[i] == risks[j])
        concordant += 0.5;
    }
  }
  return concordant / pairs;
}

double naive_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

std::vector<double> reference_risks_serial(const ReferenceModel& model, const CaseMix& casemix) {
  std::vector<double> out(static_cast<std::size_t>(casemix.n_rows()));
  for (Eigen::Index i = 0; i < casemix.n_rows(); ++i) {
    double eta = model.alpha;
    for (Eigen::Index j = 0; j < casemix.n_cols(); ++j)
      eta += model.delta * model.weights[static_cast<std::size_t>(j)] * casemix.rows(i, j);
    double p = 1.0 / (1.0 + std::exp(-eta));
    out[static_cast<std::size_t>(i)] = std::min(std::max(p, 1e-15), 1.0 - 1e-15);
  }
  return out;
}

Eigen::MatrixXd unit_information_serial(const CaseMix& casemix, const ReferenceModel& model) {
  const Eigen::Index dim = casemix.n_cols() + 1;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd x(dim);
  for (Eigen::Index i = 0; i < casemix.n_rows(); ++i) {
    x[0] = 1.0;
    double eta = model.alpha;
    for (Eigen::Index j = 0; j < casemix.n_cols(); ++j) {
      x[j + 1] = casemix.rows(i, j);
      eta += model.delta * model.weights[static_cast<std::size_t>(j)] * x[j + 1];
    }
    double p = 1.0 / (1.0 + std::exp(-eta));
    info += p * (1.0 - p) * x * x.transpose();
  }
  return info / static_cast<double>(casemix.n_rows());
}

Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_iter,
                                double tol) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      double eta = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) eta += beta[j] * X(i, j);
      double p = 1.0 / (1.0 + std::exp(-eta));
      for (Eigen::Index j = 0; j < k; ++j) {
        grad[j] += (y[i] - p) * X(i, j);
        for (Eigen::Index l = 0; l < k; ++l) hess(j, l) += p * (1.0 - p) * X(i, j) * X(i, l);
      }
    }
    if (grad.cwiseAbs().maxCoeff() < tol) break;
    beta += hess.ldlt().solve(grad);
  }
  return beta;
}

double net_benefit_counted(std::span<const double> risks, std::span<const std::uint8_t> outcomes,
                           double threshold) {
  long tp = 0, fp = 0;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    if (risks[i] >= threshold) {
      if (outcomes[i])
        ++tp;
      else
        ++fp;
    }
  }
  double n = static_cast<double>(risks.size());
  return (static_cast<double>(tp) - static_cast<double>(fp) * threshold / (1.0 - threshold)) / n;
}

}  // namespace samplan::serial
