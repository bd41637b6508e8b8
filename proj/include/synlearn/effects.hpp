#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <vector>

#include "synlearn/aggregation.hpp"
#include "synlearn/learners.hpp"
#include "synlearn/panel.hpp"

// Average treatment effect estimation with bias correction, and
// heterogeneous effects via T- and X-learning.

namespace synlearn {

struct AteReport {
  double ate = 0.0;            // post_mean_gap - pre_bias, exactly
  double post_mean_gap = 0.0;  // mean over eval of (Y - Yhat0)
  double pre_bias = 0.0;       // mean over the correction block of (Y - Yhat0)
  Eigen::VectorXd weights;
  int eval_lo = 0;
  int eval_hi = 0;
};

// Counterfactual ensemble: weights fit on the weight block, bias measured on
// the correction block, gap on the eval block.
AteReport estimate_ate(const PanelSeries& panel, const std::vector<FittedLearner>& learners,
                       WeightScheme scheme);

// A fitted weighted ensemble over one training/weighting split; predicts a
// bounded value from a covariate row.
struct EnsembleModel {
  std::vector<FittedLearner> learners;
  Eigen::VectorXd weights;
  int train_end_time = 0;

  double predict(const Eigen::RowVectorXd& row, int time) const;
};

struct CateModel {
  enum class Mode { T, X };
  Mode mode = Mode::T;
  EnsembleModel control;    // (w0, g0) from the pre-treatment split
  EnsembleModel treated;    // (w1, g1) from the post-treatment split
  EnsembleModel tau_pre;    // X only: residual fit on the pre period
  EnsembleModel tau_post;   // X only: residual fit on the post period
  double mix_pre = 0.0;     // X only: convex weight on tau_pre
  bool sign_fix = true;

  // tau_hat at one covariate row (time feeds time-aware learners)
  double predict(const Eigen::RowVectorXd& row, int time) const;
};

struct CateOptions {
  std::vector<LearnerSpec> residual_specs;  // X-learner second stage
  bool sign_fix = true;   // negate the pre-period residuals so both fits target +tau
  std::uint64_t seed = 1;
};

CateModel fit_t_learner(const PanelSeries& panel, const std::vector<LearnerSpec>& specs,
                        WeightScheme scheme, std::uint64_t seed = 1);

CateModel fit_x_learner(const PanelSeries& panel, const std::vector<LearnerSpec>& specs,
                        WeightScheme scheme, const CateOptions& options);

// sqrt((1/T) sum_t (tau_hat(X_t) - tau(X_t))^2) over all panel rows outside
// the carryover window.
double cate_mse(const CateModel& model, const PanelSeries& panel,
                const std::function<double(const Eigen::RowVectorXd&)>& truth);

// S(T) = log sqrt(MSE(T)/MSE(T - step)) for consecutive keys.
std::map<int, double> rate_diagnostic(const std::map<int, double>& mse_by_T, int step = 200);

}  // namespace synlearn
