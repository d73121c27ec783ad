#include "samplan/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "samplan/logistic.hpp"
#include "samplan/summation.hpp"

namespace samplan {

namespace {

constexpr double kPredClamp = 1e-10;

double clamp_pred(double p) { return std::min(std::max(p, kPredClamp), 1.0 - kPredClamp); }

double logit(double p) { return std::log(p / (1.0 - p)); }

void require_both_classes(const DevelopmentSample& sample) {
  auto events = sample.events();
  if (events == 0 || events == sample.size())
    throw DegenerateError("degenerate outcome: development sample has a single class");
}

Standardization standardize(const CaseMix& casemix) {
  const auto P = casemix.n_cols();
  Standardization s;
  s.mean.resize(static_cast<std::size_t>(P));
  s.sd.resize(static_cast<std::size_t>(P));
  s.used.resize(static_cast<std::size_t>(P));
  for (Eigen::Index j = 0; j < P; ++j) {
    double m = casemix.rows.col(j).mean();
    double var = (casemix.rows.col(j).array() - m).square().sum() /
                 std::max<double>(1.0, static_cast<double>(casemix.n_rows() - 1));
    double sd = std::sqrt(var);
    auto k = static_cast<std::size_t>(j);
    s.mean[k] = m;
    if (sd > 1e-12) {
      s.sd[k] = sd;
      s.used[k] = 1;
    } else {
      s.sd[k] = 1.0;
      s.used[k] = 0;
    }
  }
  return s;
}

// Standardised design over used columns only.
Eigen::MatrixXd design_used(const CaseMix& casemix, const Standardization& s,
                            std::vector<Eigen::Index>* used_cols = nullptr) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < casemix.n_cols(); ++j)
    if (s.used[static_cast<std::size_t>(j)]) cols.push_back(j);
  Eigen::MatrixXd Z(casemix.n_rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto j = cols[c];
    auto k = static_cast<std::size_t>(j);
    Z.col(static_cast<Eigen::Index>(c)) = (casemix.rows.col(j).array() - s.mean[k]) / s.sd[k];
  }
  if (used_cols) *used_cols = cols;
  return Z;
}

// Scatter a fit over used columns back to a full-length coefficient vector.
Eigen::VectorXd scatter_coefficients(const Eigen::VectorXd& fit_coef,
                                     const std::vector<Eigen::Index>& used_cols,
                                     Eigen::Index n_total) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_total + 1);
  full[0] = fit_coef[0];
  for (std::size_t c = 0; c < used_cols.size(); ++c)
    full[used_cols[c] + 1] = fit_coef[static_cast<Eigen::Index>(c) + 1];
  return full;
}

Eigen::VectorXd outcome_vector(const DevelopmentSample& sample) {
  Eigen::VectorXd y(sample.size());
  for (std::int64_t i = 0; i < sample.size(); ++i)
    y[static_cast<Eigen::Index>(i)] = sample.outcome[static_cast<std::size_t>(i)];
  return y;
}

void record_dropped(FittedModel& model, const CaseMix& casemix) {
  for (Eigen::Index j = 0; j < casemix.n_cols(); ++j)
    if (!model.standardization.used[static_cast<std::size_t>(j)])
      model.diagnostics.dropped_columns.push_back(casemix.columns[static_cast<std::size_t>(j)].name);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mle: return "mle";
    case ModelKind::shrunk: return "shrunk";
    case ModelKind::ridge_cv: return "ridge_cv";
    case ModelKind::lasso_cv: return "lasso_cv";
    case ModelKind::bayes_ridge: return "bayes_ridge";
    case ModelKind::bayes_lasso: return "bayes_lasso";
    case ModelKind::forest: return "forest";
  }
  return "unknown";
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].split_column >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = row[nd.split_column] <= nd.split_value ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].leaf_probability;
}

int Tree::depth() const {
  // Iterative depth over the node array.
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int max_depth = 0;
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    max_depth = std::max(max_depth, d);
    const auto& nd = nodes[static_cast<std::size_t>(idx)];
    if (nd.split_column >= 0) {
      stack.push_back({nd.left, d + 1});
      stack.push_back({nd.right, d + 1});
    }
  }
  return max_depth;
}

FittedModel fit_mle_logistic(const DevelopmentSample& sample, int max_iter, double tol) {
  require_both_classes(sample);

  FittedModel model;
  model.kind = ModelKind::mle;
  for (const auto& c : sample.casemix.columns) model.column_names.push_back(c.name);
  model.standardization = standardize(sample.casemix);
  record_dropped(model, sample.casemix);

  std::vector<Eigen::Index> used_cols;
  Eigen::MatrixXd Z = design_used(sample.casemix, model.standardization, &used_cols);
  Eigen::VectorXd y = outcome_vector(sample);

  auto fit = fit_logistic_irls(Z, y, nullptr, max_iter, tol);
  model.coefficients = scatter_coefficients(fit.coef, used_cols, sample.casemix.n_cols());
  model.diagnostics.converged = fit.converged;
  // Separation: the score can vanish while coefficients diverge. A
  // standardised slope beyond 20 has no finite-MLE interpretation.
  if (fit.coef.size() > 1 && fit.coef.tail(fit.coef.size() - 1).cwiseAbs().maxCoeff() > 20.0) {
    model.diagnostics.converged = false;
    model.diagnostics.notes.push_back("separation suspected: |standardised coefficient| > 20");
  }
  return model;
}

FittedModel shrink_uniform(const FittedModel& fitted, const DevelopmentSample& sample) {
  if (fitted.kind != ModelKind::mle)
    throw ConfigError("shrink_uniform: expects an unpenalised MLE model");
  if (!fitted.diagnostics.converged)
    throw ConvergenceError("shrink_uniform: MLE fit did not converge");
  require_both_classes(sample);

  const Eigen::VectorXd& coef = *fitted.coefficients;
  std::vector<Eigen::Index> used_cols;
  Eigen::MatrixXd Z = design_used(sample.casemix, fitted.standardization, &used_cols);
  Eigen::VectorXd y = outcome_vector(sample);

  Eigen::VectorXd eta = Eigen::VectorXd::Constant(Z.rows(), coef[0]);
  for (std::size_t c = 0; c < used_cols.size(); ++c)
    eta += Z.col(static_cast<Eigen::Index>(c)) * coef[used_cols[c] + 1];
  double ll_model = logistic_loglik(eta, y);

  double prev = sample.prevalence();
  double ll_null = static_cast<double>(sample.size()) *
                   (prev * std::log(prev) + (1.0 - prev) * std::log(1.0 - prev));
  double lr = 2.0 * (ll_model - ll_null);
  double p_params = static_cast<double>(used_cols.size());
  double shrinkage = lr > 0.0 ? (lr - p_params) / lr : 0.0;

  FittedModel model = fitted;
  model.kind = ModelKind::shrunk;
  model.diagnostics.shrinkage_factor = shrinkage;

  Eigen::VectorXd out = coef;
  if (shrinkage <= 0.0) {
    out.setZero();
    out[0] = logit(prev);
  } else {
    out.tail(out.size() - 1) *= shrinkage;
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(Z.rows());
    for (std::size_t c = 0; c < used_cols.size(); ++c)
      offset += Z.col(static_cast<Eigen::Index>(c)) * out[used_cols[c] + 1];
    out[0] = fit_intercept_offset(offset, y);
  }
  model.coefficients = out;
  return model;
}

// ---------------------------------------------------------------------------
// Penalised logistic regression: glmnet-style IRLS + coordinate descent.
// Objective: f(b) = -(1/n) loglik(b) + lambda * pen(slopes), intercept
// unpenalised; pen = sum|b| (lasso) or 0.5*sum b^2 (ridge).
// ---------------------------------------------------------------------------

namespace {

struct PenalizedProblem {
  const Eigen::MatrixXd& Z;
  const Eigen::VectorXd& y;
  PriorFamily family;
};

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Coordinate descent at one lambda from a warm start; coef = (b0, slopes).
void fit_at_lambda(const PenalizedProblem& prob, double lambda, Eigen::VectorXd& coef,
                   double tol) {
  const Eigen::Index n = prob.Z.rows();
  const Eigen::Index k = prob.Z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, coef[0]);
  for (Eigen::Index j = 0; j < k; ++j)
    if (coef[j + 1] != 0.0) eta += prob.Z.col(j) * coef[j + 1];

  Eigen::VectorXd w(n), r(n);
  for (int outer = 0; outer < 200; ++outer) {
    // Quadratic approximation at the current coefficients.
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = 1.0 / (1.0 + std::exp(-eta[i]));
      p = std::min(std::max(p, 1e-5), 1.0 - 1e-5);
      w[i] = p * (1.0 - p);
      r[i] = (prob.y[i] - p) / w[i];  // working residual u - eta, eta part folded below
    }
    Eigen::VectorXd wz2(k);
    for (Eigen::Index j = 0; j < k; ++j)
      wz2[j] = inv_n * prob.Z.col(j).cwiseProduct(prob.Z.col(j)).dot(w);
    double w_sum = w.sum() * inv_n;

    double max_delta_outer = 0.0;
    for (int inner = 0; inner < 1000; ++inner) {
      double max_delta = 0.0;
      // Intercept (unpenalised).
      {
        double num = inv_n * w.dot(r);
        double step = num / w_sum;
        if (step != 0.0) {
          coef[0] += step;
          r.array() -= step;
          max_delta = std::max(max_delta, std::abs(step));
        }
      }
      for (Eigen::Index j = 0; j < k; ++j) {
        double bj = coef[j + 1];
        double num = inv_n * prob.Z.col(j).cwiseProduct(w).dot(r) + wz2[j] * bj;
        double bj_new;
        if (prob.family == PriorFamily::lasso)
          bj_new = soft_threshold(num, lambda) / wz2[j];
        else
          bj_new = num / (wz2[j] + lambda);
        double step = bj_new - bj;
        if (step != 0.0) {
          coef[j + 1] = bj_new;
          r -= prob.Z.col(j) * step;
          max_delta = std::max(max_delta, std::abs(step));
        }
      }
      max_delta_outer = std::max(max_delta_outer, max_delta);
      if (max_delta < tol * 1e-2) break;
    }

    eta = Eigen::VectorXd::Constant(n, coef[0]);
    for (Eigen::Index j = 0; j < k; ++j)
      if (coef[j + 1] != 0.0) eta += prob.Z.col(j) * coef[j + 1];
    if (max_delta_outer < tol * 1e-1) break;
  }
}

double kkt_residual_used(const PenalizedProblem& prob, double lambda, const Eigen::VectorXd& coef) {
  const Eigen::Index n = prob.Z.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, coef[0]);
  for (Eigen::Index j = 0; j < prob.Z.cols(); ++j)
    if (coef[j + 1] != 0.0) eta += prob.Z.col(j) * coef[j + 1];
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i)
    resid[i] = 1.0 / (1.0 + std::exp(-eta[i])) - prob.y[i];

  double worst = std::abs(inv_n * resid.sum());  // intercept stationarity
  for (Eigen::Index j = 0; j < prob.Z.cols(); ++j) {
    double g = inv_n * prob.Z.col(j).dot(resid);
    double bj = coef[j + 1];
    double v;
    if (prob.family == PriorFamily::lasso)
      v = bj == 0.0 ? std::max(0.0, std::abs(g) - lambda) : std::abs(g + lambda * (bj > 0 ? 1.0 : -1.0));
    else
      v = std::abs(g + lambda * bj);
    worst = std::max(worst, v);
  }
  return worst;
}

double cv_deviance(std::span<const double> risks, std::span<const std::uint8_t> outcomes) {
  double dev = 0.0;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    double p = clamp_pred(risks[i]);
    dev += outcomes[i] ? -2.0 * std::log(p) : -2.0 * std::log(1.0 - p);
  }
  return dev;
}

}  // namespace

FittedModel fit_penalized_cv(const DevelopmentSample& sample, PriorFamily family,
                             const PenalizedConfig& config, std::uint64_t rng_seed) {
  require_both_classes(sample);
  if (sample.size() < config.folds)
    throw ConfigError("fit_penalized_cv: fewer rows than folds");

  FittedModel model;
  model.kind = family == PriorFamily::lasso ? ModelKind::lasso_cv : ModelKind::ridge_cv;
  for (const auto& c : sample.casemix.columns) model.column_names.push_back(c.name);
  model.standardization = standardize(sample.casemix);
  record_dropped(model, sample.casemix);

  std::vector<Eigen::Index> used_cols;
  Eigen::MatrixXd Z = design_used(sample.casemix, model.standardization, &used_cols);
  Eigen::VectorXd y = outcome_vector(sample);
  const Eigen::Index n = Z.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Lambda grid: log-spaced from lambda_max down.
  std::vector<double> grid;
  if (config.lambda_grid) {
    grid = *config.lambda_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());
  } else {
    double ybar = y.mean();
    Eigen::VectorXd yc = y.array() - ybar;
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < Z.cols(); ++j)
      lmax = std::max(lmax, std::abs(inv_n * Z.col(j).dot(yc)));
    if (family == PriorFamily::ridge) lmax *= 100.0;
    if (lmax <= 0.0) lmax = 1.0;
    double lmin = lmax * config.lambda_min_ratio;
    for (int g = 0; g < config.n_lambda; ++g) {
      double f = static_cast<double>(g) / (config.n_lambda - 1);
      grid.push_back(std::exp(std::log(lmax) + f * (std::log(lmin) - std::log(lmax))));
    }
  }

  // Stratified fold assignment derived from the seed.
  auto stream = make_stream(rng_seed, 0, Role::fit);
  std::vector<std::int64_t> events, nonevents;
  for (std::int64_t i = 0; i < n; ++i)
    (sample.outcome[static_cast<std::size_t>(i)] ? events : nonevents).push_back(i);
  auto shuffle = [&stream](std::vector<std::int64_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(stream.below(i))]);
  };
  shuffle(events);
  shuffle(nonevents);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < events.size(); ++i)
    fold[static_cast<std::size_t>(events[i])] = static_cast<int>(i % static_cast<std::size_t>(config.folds));
  for (std::size_t i = 0; i < nonevents.size(); ++i)
    fold[static_cast<std::size_t>(nonevents[i])] = static_cast<int>(i % static_cast<std::size_t>(config.folds));

  // Cross-validated deviance along the path.
  std::vector<double> fold_mean_dev(grid.size(), 0.0);
  for (int f = 0; f < config.folds; ++f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);
    if (test_rows.empty()) continue;

    Eigen::MatrixXd Zt(static_cast<Eigen::Index>(train_rows.size()), Z.cols());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      Zt.row(static_cast<Eigen::Index>(i)) = Z.row(train_rows[i]);
      yt[static_cast<Eigen::Index>(i)] = y[train_rows[i]];
    }
    double yt_mean = yt.mean();
    bool degenerate_train = yt_mean <= 0.0 || yt_mean >= 1.0;

    PenalizedProblem prob{Zt, yt, family};
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(Z.cols() + 1);
    coef[0] = degenerate_train ? logit(clamp_pred(yt_mean)) : logit(yt_mean);

    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!degenerate_train) fit_at_lambda(prob, grid[g], coef, config.tol);
      std::vector<double> risks;
      std::vector<std::uint8_t> outs;
      risks.reserve(test_rows.size());
      for (auto i : test_rows) {
        double eta = coef[0] + Z.row(i).dot(coef.tail(Z.cols()));
        risks.push_back(clamp_pred(1.0 / (1.0 + std::exp(-eta))));
        outs.push_back(sample.outcome[static_cast<std::size_t>(i)]);
      }
      fold_mean_dev[g] += cv_deviance(risks, outs) / static_cast<double>(test_rows.size());
    }
  }

  // First minimiser scanning from the largest lambda.
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (fold_mean_dev[g] < fold_mean_dev[best]) best = g;
  double lambda = grid[best];

  // Final fit on the full sample, warm-started along the path down to lambda.
  PenalizedProblem prob{Z, y, family};
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(Z.cols() + 1);
  coef[0] = logit(y.mean());
  for (std::size_t g = 0; g <= best; ++g) fit_at_lambda(prob, grid[g], coef, config.tol);
  // Polish until the KKT residual clears the tolerance.
  double kkt = kkt_residual_used(prob, lambda, coef);
  for (int polish = 0; polish < 20 && kkt >= config.tol; ++polish) {
    fit_at_lambda(prob, lambda, coef, config.tol * 1e-2);
    kkt = kkt_residual_used(prob, lambda, coef);
  }

  model.coefficients = scatter_coefficients(coef, used_cols, sample.casemix.n_cols());
  model.diagnostics.selected_lambda = lambda;
  model.diagnostics.converged = kkt < config.tol;
  if (!model.diagnostics.converged)
    model.diagnostics.notes.push_back("KKT residual " + std::to_string(kkt) + " above tol");
  return model;
}

double penalized_objective(const FittedModel& model, const DevelopmentSample& sample,
                           PriorFamily family, double lambda) {
  std::vector<Eigen::Index> used_cols;
  Eigen::MatrixXd Z = design_used(sample.casemix, model.standardization, &used_cols);
  Eigen::VectorXd y = outcome_vector(sample);
  const Eigen::VectorXd& full = *model.coefficients;
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(Z.rows(), full[0]);
  double pen = 0.0;
  for (std::size_t c = 0; c < used_cols.size(); ++c) {
    double b = full[used_cols[c] + 1];
    eta += Z.col(static_cast<Eigen::Index>(c)) * b;
    pen += family == PriorFamily::lasso ? std::abs(b) : 0.5 * b * b;
  }
  return -logistic_loglik(eta, y) / static_cast<double>(Z.rows()) + lambda * pen;
}

double kkt_residual(const FittedModel& model, const DevelopmentSample& sample, PriorFamily family,
                    double lambda) {
  std::vector<Eigen::Index> used_cols;
  Eigen::MatrixXd Z = design_used(sample.casemix, model.standardization, &used_cols);
  Eigen::VectorXd y = outcome_vector(sample);
  const Eigen::VectorXd& full = *model.coefficients;
  Eigen::VectorXd coef(Z.cols() + 1);
  coef[0] = full[0];
  for (std::size_t c = 0; c < used_cols.size(); ++c)
    coef[static_cast<Eigen::Index>(c) + 1] = full[used_cols[c] + 1];
  PenalizedProblem prob{Z, y, family};
  return kkt_residual_used(prob, lambda, coef);
}

FittedModel fit_bayes_penalized(const DevelopmentSample& sample, const PriorSpec& prior,
                                const McmcConfig& mcmc, std::uint64_t rng_seed) {
  require_both_classes(sample);

  FittedModel model;
  model.kind = prior.family == PriorFamily::lasso ? ModelKind::bayes_lasso : ModelKind::bayes_ridge;
  for (const auto& c : sample.casemix.columns) model.column_names.push_back(c.name);
  model.standardization = standardize(sample.casemix);
  record_dropped(model, sample.casemix);

  std::vector<Eigen::Index> used_cols;
  Eigen::MatrixXd Z = design_used(sample.casemix, model.standardization, &used_cols);
  Eigen::VectorXd y = outcome_vector(sample);
  const auto k = Z.cols();
  const bool sample_lambda = !prior.fixed_lambda2.has_value();

  // State: (intercept, slopes..., [log lambda2]).
  auto log_target = [&](const std::vector<double>& state) {
    double lambda2 = sample_lambda ? std::exp(state[static_cast<std::size_t>(k) + 1])
                                   : *prior.fixed_lambda2;
    std::vector<double> coef(state.begin(), state.begin() + k + 1);
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(Z.rows(), coef[0]);
    for (Eigen::Index j = 0; j < k; ++j)
      eta += Z.col(j) * coef[static_cast<std::size_t>(j) + 1];
    double lt = logistic_loglik(eta, y) + log_prior_coefficients(coef, lambda2, prior);
    if (sample_lambda)
      // log-scale update: density in lambda2 plus the Jacobian lambda2.
      lt += log_hyperprior_lambda2(lambda2, prior) + std::log(lambda2);
    return lt;
  };

  std::vector<double> init(static_cast<std::size_t>(k) + 1 + (sample_lambda ? 1 : 0), 0.0);
  init[0] = logit(std::min(std::max(sample.prevalence(), 0.01), 0.99));
  auto result = run_metropolis(log_target, init, mcmc, rng_seed, static_cast<int>(k) + 1);

  // Point model: posterior mean coefficient vector.
  Eigen::VectorXd post_mean = Eigen::VectorXd::Zero(k + 1);
  for (const auto& s : result.samples)
    for (Eigen::Index j = 0; j <= k; ++j) post_mean[j] += s[static_cast<std::size_t>(j)];
  post_mean /= static_cast<double>(result.samples.size());

  model.coefficients = scatter_coefficients(post_mean, used_cols, sample.casemix.n_cols());
  model.diagnostics.mcmc_acceptance = result.acceptance;
  model.diagnostics.converged = !result.low_acceptance;
  if (result.low_acceptance)
    model.diagnostics.notes.push_back("MCMC acceptance below 0.05 after adaptation");
  if (result.split_chain_flag)
    model.diagnostics.notes.push_back("split-chain halves differ by > 4 MC-SE");
  return model;
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

namespace {

struct SplitChoice {
  int column = -1;
  double value = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

double gini(double events, double total) {
  if (total <= 0.0) return 0.0;
  double p = events / total;
  return 2.0 * p * (1.0 - p);
}

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const std::vector<std::uint8_t>& y;
  const ForestConfig& cfg;
  RngStream& stream;
  int mtry;
  Tree tree;

  int build(std::vector<std::int64_t>& rows, int begin, int end, int depth) {
    double total = static_cast<double>(end - begin);
    double events = 0.0;
    for (int i = begin; i < end; ++i) events += y[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];

    int node_idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.back().leaf_probability = events / total;

    bool pure = events == 0.0 || events == total;
    if (depth >= cfg.max_depth || pure || end - begin < 2 * cfg.min_leaf) return node_idx;

    // mtry candidate columns without replacement.
    std::vector<int> candidates(static_cast<std::size_t>(X.cols()));
    std::iota(candidates.begin(), candidates.end(), 0);
    for (int c = 0; c < mtry; ++c) {
      auto j = c + static_cast<int>(stream.below(static_cast<std::uint64_t>(X.cols() - c)));
      std::swap(candidates[static_cast<std::size_t>(c)], candidates[static_cast<std::size_t>(j)]);
    }

    SplitChoice best;
    std::vector<std::pair<double, std::uint8_t>> vals(static_cast<std::size_t>(end - begin));
    for (int c = 0; c < mtry; ++c) {
      int col = candidates[static_cast<std::size_t>(c)];
      for (int i = begin; i < end; ++i) {
        auto r = rows[static_cast<std::size_t>(i)];
        vals[static_cast<std::size_t>(i - begin)] = {X(r, col), y[static_cast<std::size_t>(r)]};
      }
      std::sort(vals.begin(), vals.end());
      double left_n = 0.0, left_e = 0.0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left_n += 1.0;
        left_e += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        double right_n = total - left_n;
        double right_e = events - left_e;
        if (left_n < cfg.min_leaf || right_n < cfg.min_leaf) continue;
        double imp = left_n * gini(left_e, left_n) + right_n * gini(right_e, right_n);
        if (imp < best.impurity) {
          best.impurity = imp;
          best.column = col;
          best.value = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best.column < 0) return node_idx;

    // Partition rows[begin,end) by the chosen split.
    auto mid_it = std::partition(rows.begin() + begin, rows.begin() + end, [&](std::int64_t r) {
      return X(r, best.column) <= best.value;
    });
    int mid = static_cast<int>(mid_it - rows.begin());
    if (mid == begin || mid == end) return node_idx;

    tree.nodes[static_cast<std::size_t>(node_idx)].split_column = best.column;
    tree.nodes[static_cast<std::size_t>(node_idx)].split_value = best.value;
    int left = build(rows, begin, mid, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_idx)].left = left;
    int right = build(rows, mid, end, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_idx)].right = right;
    return node_idx;
  }
};

}  // namespace

FittedModel fit_random_forest(const DevelopmentSample& sample, const ForestConfig& config,
                              std::uint64_t rng_seed) {
  FittedModel model;
  model.kind = ModelKind::forest;
  for (const auto& c : sample.casemix.columns) model.column_names.push_back(c.name);
  model.standardization = standardize(sample.casemix);

  const auto n = sample.size();
  const auto P = sample.casemix.n_cols();
  int mtry = config.mtry > 0 ? config.mtry
                             : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(P))));
  mtry = std::min<int>(mtry, static_cast<int>(P));

  model.forest.resize(static_cast<std::size_t>(config.n_trees));
  for (int t = 0; t < config.n_trees; ++t) {
    auto stream = make_stream(rng_seed, static_cast<std::uint64_t>(t), Role::tree);
    std::vector<std::int64_t> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<std::int64_t>(stream.below(static_cast<std::uint64_t>(n)));
    TreeBuilder builder{sample.casemix.rows, sample.outcome, config, stream, mtry, Tree{}};
    builder.build(rows, 0, static_cast<int>(n), 0);
    model.forest[static_cast<std::size_t>(t)] = std::move(builder.tree);
  }
  return model;
}

std::vector<double> predict_risks(const FittedModel& model, const CaseMix& casemix) {
  // Column alignment by name; training columns must all exist.
  std::vector<Eigen::Index> map(model.column_names.size());
  for (std::size_t j = 0; j < model.column_names.size(); ++j) {
    int idx = casemix.column_index(model.column_names[j]);
    if (idx < 0)
      throw AlignmentError("predict_risks: case-mix lacks column '" + model.column_names[j] + "'");
    map[j] = idx;
  }

  const std::int64_t n = casemix.n_rows();
  std::vector<double> out(static_cast<std::size_t>(n));

  if (model.kind == ModelKind::forest) {
    const double inv_trees = 1.0 / static_cast<double>(model.forest.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      Eigen::RowVectorXd row(static_cast<Eigen::Index>(map.size()));
      for (std::size_t j = 0; j < map.size(); ++j)
        row[static_cast<Eigen::Index>(j)] = casemix.rows(i, map[j]);
      double acc = 0.0;
      for (const auto& tree : model.forest) acc += tree.predict(row);
      out[static_cast<std::size_t>(i)] = clamp_pred(acc * inv_trees);
    }
    return out;
  }

  if (!model.coefficients) throw ConfigError("predict_risks: model has no coefficients");
  const Eigen::VectorXd& coef = *model.coefficients;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double eta = coef[0];
    for (std::size_t j = 0; j < map.size(); ++j) {
      if (!model.standardization.used[j]) continue;
      double z = (casemix.rows(i, map[j]) - model.standardization.mean[j]) /
                 model.standardization.sd[j];
      eta += coef[static_cast<Eigen::Index>(j) + 1] * z;
    }
    out[static_cast<std::size_t>(i)] = clamp_pred(1.0 / (1.0 + std::exp(-eta)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON serialisation (audit format, documented in the README)
// ---------------------------------------------------------------------------

nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json j;
  j["kind"] = to_string(model.kind);
  j["columns"] = model.column_names;
  j["standardization"] = {{"mean", model.standardization.mean},
                          {"sd", model.standardization.sd},
                          {"used", model.standardization.used}};
  if (model.coefficients) {
    std::vector<double> c(model.coefficients->data(),
                          model.coefficients->data() + model.coefficients->size());
    j["coefficients"] = c;
  }
  if (!model.forest.empty()) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.forest) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& nd : tree.nodes)
        nodes.push_back({{"split_column", nd.split_column},
                         {"split_value", nd.split_value},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"leaf_probability", nd.leaf_probability}});
      trees.push_back(std::move(nodes));
    }
    j["forest"] = std::move(trees);
  }
  nlohmann::json d;
  d["converged"] = model.diagnostics.converged;
  if (model.diagnostics.selected_lambda) d["selected_lambda"] = *model.diagnostics.selected_lambda;
  if (model.diagnostics.shrinkage_factor)
    d["shrinkage_factor"] = *model.diagnostics.shrinkage_factor;
  if (model.diagnostics.mcmc_acceptance) d["mcmc_acceptance"] = *model.diagnostics.mcmc_acceptance;
  if (!model.diagnostics.dropped_columns.empty())
    d["dropped_columns"] = model.diagnostics.dropped_columns;
  if (!model.diagnostics.notes.empty()) d["notes"] = model.diagnostics.notes;
  j["diagnostics"] = std::move(d);
  return j;
}

FittedModel model_from_json(const nlohmann::json& j) {
  FittedModel model;
  std::string kind = j.at("kind");
  if (kind == "mle") model.kind = ModelKind::mle;
  else if (kind == "shrunk") model.kind = ModelKind::shrunk;
  else if (kind == "ridge_cv") model.kind = ModelKind::ridge_cv;
  else if (kind == "lasso_cv") model.kind = ModelKind::lasso_cv;
  else if (kind == "bayes_ridge") model.kind = ModelKind::bayes_ridge;
  else if (kind == "bayes_lasso") model.kind = ModelKind::bayes_lasso;
  else if (kind == "forest") model.kind = ModelKind::forest;
  else throw ConfigError("model_from_json: unknown kind '" + kind + "'");

  model.column_names = j.at("columns").get<std::vector<std::string>>();
  const auto& s = j.at("standardization");
  model.standardization.mean = s.at("mean").get<std::vector<double>>();
  model.standardization.sd = s.at("sd").get<std::vector<double>>();
  model.standardization.used = s.at("used").get<std::vector<std::uint8_t>>();
  if (j.contains("coefficients")) {
    auto c = j.at("coefficients").get<std::vector<double>>();
    Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<Eigen::Index>(i)] = c[i];
    model.coefficients = v;
  }
  if (j.contains("forest")) {
    for (const auto& tj : j.at("forest")) {
      Tree tree;
      for (const auto& nj : tj)
        tree.nodes.push_back(TreeNode{nj.at("split_column").get<int>(),
                                      nj.at("split_value").get<double>(), nj.at("left").get<int>(),
                                      nj.at("right").get<int>(),
                                      nj.at("leaf_probability").get<double>()});
      model.forest.push_back(std::move(tree));
    }
  }
  const auto& d = j.at("diagnostics");
  model.diagnostics.converged = d.at("converged");
  if (d.contains("selected_lambda")) model.diagnostics.selected_lambda = d["selected_lambda"];
  if (d.contains("shrinkage_factor")) model.diagnostics.shrinkage_factor = d["shrinkage_factor"];
  if (d.contains("mcmc_acceptance")) model.diagnostics.mcmc_acceptance = d["mcmc_acceptance"];
  return model;
}

}  // namespace samplan
