#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

// Potential-function weighting over experts. Weights are the normalized
// gradient of a potential of the cumulative regret vector; the exponential,
// polynomial and follow-the-leader instances are built in, plus a
// least-squares stacking comparator.

namespace synlearn {

enum class LossKind { quadratic, absolute };

inline double quadratic_loss(double y, double yhat) {
  double d = y - yhat;
  return d * d;
}

inline double loss_value(LossKind kind, double y, double yhat) {
  return kind == LossKind::quadratic ? quadratic_loss(y, yhat) : std::abs(y - yhat);
}

struct WeightScheme {
  enum class Kind { exponential, polynomial, follow_leader, least_squares };
  Kind kind = Kind::exponential;
  double eta = 0.0;   // exponential; 0 -> default 1/T+ resolved by the caller
  double q = 2.0;     // polynomial; must be > 1
  LossKind loss = LossKind::quadratic;

  void validate() const;
  static WeightScheme exponential(double eta, LossKind loss = LossKind::quadratic);
  static WeightScheme polynomial(double q, LossKind loss = LossKind::quadratic);
  static WeightScheme follow_leader(LossKind loss = LossKind::quadratic);
  static WeightScheme least_squares(LossKind loss = LossKind::quadratic);
};

// w_j proportional to exp(-eta * cumloss_j), computed with a max shift.
// Degenerate all-equal losses yield the uniform vector.
Eigen::VectorXd exp_weights(const Eigen::VectorXd& cumloss, double eta);

// w_j proportional to (regret_j)_+^(q-1); all-nonpositive regrets -> uniform.
Eigen::VectorXd poly_weights(const Eigen::VectorXd& regret, double q);

// one-hot on the argmin of cumulative loss; ties break to the lowest index.
Eigen::VectorXd ftl_weights(const Eigen::VectorXd& cumloss);

// Unconstrained least-squares stack of expert predictions (comparator only;
// coefficients need not be nonnegative nor sum to one). Singular designs
// fall back to ridge 1e-8.
Eigen::VectorXd ls_weights(const Eigen::MatrixXd& preds, const Eigen::VectorXd& y);

double ensemble_predict(const Eigen::VectorXd& w, const Eigen::VectorXd& expert_preds);

// One-step-ahead weight path: entry t holds the weights available before
// observing row t of the loss matrix (entry 0 is uniform). The polynomial
// scheme accumulates regret against the weighted-average expert loss, the
// only form derivable from losses alone.
std::vector<Eigen::VectorXd> online_weight_path(const Eigen::MatrixXd& losses,
                                                const WeightScheme& scheme);

// Batch weights used by the test/ATE pipelines: exponential weights of the
// block's cumulative losses, the final polynomial/FTL potential weights, or
// the least-squares stack.
Eigen::VectorXd final_weights(const Eigen::VectorXd& y, const Eigen::MatrixXd& preds,
                              const WeightScheme& scheme);

struct RegretReport {
  Eigen::VectorXd regret_vector;  // per expert: ensemble cum. loss - expert cum. loss
  double ensemble_loss = 0.0;     // (1/T) sum_t l(y_t, yhat_t(F_{t-1}))
  double best_expert_loss = 0.0;  // min_j (1/T) sum_t l(y_t, g_j_t)
  double regret = 0.0;            // ensemble_loss - best_expert_loss
  double bound = 0.0;             // C sqrt(log p / (2 T)), C = 2M(max|y| + M)
  bool within_bound = false;
};

// One-step-ahead regret of the weighted ensemble against the best expert.
// The bound is checked for the exponential scheme with the regret-mode
// eta = sqrt(8 log p / (M^2 T)); pass that eta in `scheme`.
RegretReport regret_report(const Eigen::VectorXd& y, const Eigen::MatrixXd& preds,
                           const WeightScheme& scheme, double M);

// eta defaults: 1/T+ for testing/ATE, sqrt(8 log p / (M^2 T0)) for regret.
double default_eta_testing(int t_max);
double regret_eta(int p, int t0, double M);

}  // namespace synlearn
