#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synlearn/panel.hpp"

// The expert pool. Each learner is fit once on the training block and then
// only queried for point predictions; fitted models are immutable and cheap
// to copy (shared internals). Every prediction is clamped to [-M, M].

namespace synlearn {

struct LearnerSpec {
  std::string kind;  // sc-constrained | ridge | knn | ar | honest-forest | noninformative
  std::map<std::string, double> params;
  std::optional<double> clip;  // default: 10 * max|y| over the training block

  double param(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
  }
};

// Everything a learner may look at when predicting one row. `time` is the
// absolute panel time; `train_y`/`train_end_time` describe the block the
// learner was fit on (AR forecasts run recursively from that origin).
struct PredictContext {
  Eigen::RowVectorXd row;
  int time = 0;
  int train_end_time = 0;
};

namespace detail {
class LearnerImpl {
 public:
  virtual ~LearnerImpl() = default;
  virtual double raw_predict(const PredictContext& ctx) const = 0;
};
}  // namespace detail

class FittedLearner {
 public:
  FittedLearner() = default;
  FittedLearner(std::string kind, std::shared_ptr<const detail::LearnerImpl> impl, double clip);

  // clamped to [-clip, clip]
  double predict(const PredictContext& ctx) const;

  const std::string& kind() const { return kind_; }
  double clip_bound() const { return clip_; }
  const detail::LearnerImpl* impl() const { return impl_.get(); }

 private:
  std::string kind_;
  std::shared_ptr<const detail::LearnerImpl> impl_;
  double clip_ = 0.0;
};

// Simplex-constrained least squares (synthetic-control weights):
//   beta = argmin ||y - X beta||^2  s.t.  beta >= 0, sum beta = 1,
// solved by projected gradient descent with step 1/L, L = lambda_max(X'X).
// Stops when the objective change drops below 1e-10 (10,000 iteration cap).
struct SCWeights {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  bool has_intercept = false;
};

SCWeights solve_sc_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           bool with_intercept = false);

FittedLearner fit_sc(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const LearnerSpec& spec);

// Ridge: minimizes ||y - X beta||^2 + lambda ||beta||^2 via the normal
// equations; a singular system at lambda = 0 falls back to lambda = 1e-8.
// params: lambda (>= 0), intercept (0/1, unpenalized when present).
FittedLearner fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const LearnerSpec& spec);

// k nearest neighbours in Euclidean distance; ties broken by earlier row.
FittedLearner fit_knn(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const LearnerSpec& spec);

// AR(p) with intercept fitted on the training outcomes by least squares
// (ridge fallback 1e-8 on a near-singular lag design). Predicts by applying
// the recursion from the end of the training block to the requested time,
// clipping every step; covariates are ignored.
FittedLearner fit_ar(const std::vector<double>& train_y, int train_end_time,
                     const LearnerSpec& spec);

// Pure-noise experts: prediction at (learner index, time) is a standard
// normal draw pinned by (seed, index, time), clipped to [-M, M].
std::vector<FittedLearner> make_noninformative(std::uint64_t seed, int count, double clip);

// Fits one learner spec on the training block of `panel` (rows [t_min, 1]).
// `pool_index` feeds the noninformative stream; `seed` feeds the forest.
FittedLearner fit_learner(const LearnerSpec& spec, const PanelSeries& panel,
                          std::uint64_t seed, int pool_index);

std::vector<FittedLearner> fit_pool(const std::vector<LearnerSpec>& specs,
                                    const PanelSeries& panel, std::uint64_t seed);

// Default prediction clamp: 10 * max|y| over the block a learner trains on.
double default_clip(const Eigen::VectorXd& train_y);

// Convenience: prediction matrix G with G(i, j) = learner j at times[i].
Eigen::MatrixXd prediction_matrix(const std::vector<FittedLearner>& pool,
                                  const PanelSeries& panel, const std::vector<int>& times);

}  // namespace synlearn
