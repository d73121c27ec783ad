#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "samplan/casemix.hpp"
#include "samplan/population.hpp"

// Serial reference implementations of the parallel kernels, written
// independently of the main code paths. Kept for testing (oracle
// comparisons) and for the benchmark target; never used by the engine.
namespace samplan::serial {

// All-pairs concordance, O(n^2), ties count 1/2.
double c_statistic_allpairs(std::span<const double> risks, std::span<const std::uint8_t> outcomes);

// Plain left-to-right accumulation.
double naive_mean(std::span<const double> x);

// Row-loop risk evaluation without OpenMP.
std::vector<double> reference_risks_serial(const ReferenceModel& model, const CaseMix& casemix);

// Row-loop unit Fisher information without OpenMP or blocking.
Eigen::MatrixXd unit_information_serial(const CaseMix& casemix, const ReferenceModel& model);

// Straightforward Newton maximum-likelihood logistic regression with explicit
// gradient/Hessian loops; independent of the IRLS core.
Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& X_with_intercept,
                                const Eigen::VectorXd& y, int max_iter = 200, double tol = 1e-12);

// NB by explicit TP/FP counting.
double net_benefit_counted(std::span<const double> risks, std::span<const std::uint8_t> outcomes,
                           double threshold);

}  // namespace samplan::serial
