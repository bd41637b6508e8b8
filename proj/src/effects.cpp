#include "synlearn/effects.hpp"

#include <cmath>
#include <stdexcept>

#include "synlearn/forest.hpp"
#include "synlearn/rng.hpp"

namespace synlearn {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

WeightScheme resolve_eta(WeightScheme scheme, int t_max) {
  if (scheme.kind == WeightScheme::Kind::exponential && scheme.eta == 0.0)
    scheme.eta = default_eta_testing(t_max);
  return scheme;
}

// Fits a weighted ensemble on (X, y) rows ordered by time: learners on the
// first `n_train` rows, weights on the remainder.
EnsembleModel fit_ensemble_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<int>& times, int n_train,
                                const std::vector<LearnerSpec>& specs,
                                const WeightScheme& scheme, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  if (n_train < 2 || n - n_train < 2) fail("ensemble fit: splits too short");
  EnsembleModel model;
  model.train_end_time = times[static_cast<std::size_t>(n_train - 1)];

  Eigen::MatrixXd Xt = X.topRows(n_train);
  Eigen::VectorXd yt = y.head(n_train);
  int index = 0;
  for (const auto& spec : specs) {
    if (spec.kind == "sc-constrained")
      model.learners.push_back(fit_sc(Xt, yt, spec));
    else if (spec.kind == "ridge")
      model.learners.push_back(fit_ridge(Xt, yt, spec));
    else if (spec.kind == "knn")
      model.learners.push_back(fit_knn(Xt, yt, spec));
    else if (spec.kind == "ar") {
      std::vector<double> ty(yt.data(), yt.data() + n_train);
      model.learners.push_back(fit_ar(ty, model.train_end_time, spec));
    } else if (spec.kind == "honest-forest")
      model.learners.push_back(
          fit_honest_forest(Xt, yt, spec, mix_seed(seed, 0xf05e57ULL, index)));
    else if (spec.kind == "noninformative") {
      double clip = spec.clip.value_or(default_clip(yt));
      auto list = make_noninformative(mix_seed(seed, 0x4015eULL), index + 1, clip);
      model.learners.push_back(std::move(list.back()));
    } else
      fail("unknown learner kind: " + spec.kind);
    ++index;
  }

  const int n_weight = n - n_train;
  const int p = static_cast<int>(model.learners.size());
  Eigen::MatrixXd preds(n_weight, p);
  for (int i = 0; i < n_weight; ++i) {
    PredictContext ctx;
    ctx.row = X.row(n_train + i);
    ctx.time = times[static_cast<std::size_t>(n_train + i)];
    ctx.train_end_time = model.train_end_time;
    for (int j = 0; j < p; ++j) preds(i, j) = model.learners[static_cast<std::size_t>(j)].predict(ctx);
  }
  model.weights = final_weights(y.segment(n_train, n_weight), preds, scheme);
  return model;
}

}  // namespace

double EnsembleModel::predict(const Eigen::RowVectorXd& row, int time) const {
  PredictContext ctx;
  ctx.row = row;
  ctx.time = time;
  ctx.train_end_time = train_end_time;
  double v = 0.0;
  for (std::size_t j = 0; j < learners.size(); ++j)
    v += weights[static_cast<Eigen::Index>(j)] * learners[j].predict(ctx);
  return v;
}

AteReport estimate_ate(const PanelSeries& panel, const std::vector<FittedLearner>& learners,
                       WeightScheme scheme) {
  panel.validate();
  if (learners.empty()) fail("estimate_ate: empty learner pool");
  const SplitPlan splits = make_splits(panel);
  if (splits.correct.size() == 0) fail("estimate_ate: empty correction block");
  if (splits.eval.size() == 0) fail("estimate_ate: empty eval block");
  scheme = resolve_eta(scheme, panel.t_max);

  std::vector<int> weight_times;
  for (int t = splits.weight.lo; t <= splits.weight.hi; ++t) weight_times.push_back(t);
  Eigen::MatrixXd wp = prediction_matrix(learners, panel, weight_times);
  Eigen::VectorXd wy(static_cast<int>(weight_times.size()));
  for (int i = 0; i < wy.size(); ++i) wy[i] = panel.y_at(weight_times[static_cast<std::size_t>(i)]);
  Eigen::VectorXd w = final_weights(wy, wp, scheme);

  auto block_gap = [&](const TimeRange& r) {
    std::vector<int> times;
    for (int t = r.lo; t <= r.hi; ++t) times.push_back(t);
    Eigen::MatrixXd preds = prediction_matrix(learners, panel, times);
    double s = 0.0;
    for (int i = 0; i < static_cast<int>(times.size()); ++i)
      s += panel.y_at(times[static_cast<std::size_t>(i)]) - w.dot(preds.row(i).transpose());
    return s / static_cast<double>(times.size());
  };

  AteReport report;
  report.post_mean_gap = block_gap(splits.eval);
  report.pre_bias = block_gap(splits.correct);
  report.ate = report.post_mean_gap - report.pre_bias;
  report.weights = w;
  report.eval_lo = splits.eval.lo;
  report.eval_hi = splits.eval.hi;
  return report;
}

double CateModel::predict(const Eigen::RowVectorXd& row, int time) const {
  if (mode == Mode::T) return treated.predict(row, time) - control.predict(row, time);
  double pre = tau_pre.predict(row, time);
  double post = tau_post.predict(row, time);
  return mix_pre * pre + (1.0 - mix_pre) * post;
}

CateModel fit_t_learner(const PanelSeries& panel, const std::vector<LearnerSpec>& specs,
                        WeightScheme scheme, std::uint64_t seed) {
  panel.validate();
  const SplitPlan splits = make_splits(panel);
  scheme = resolve_eta(scheme, panel.t_max);
  const int post_lo = splits.eval.lo;
  const int post_hi = splits.eval.hi;
  if (post_hi - post_lo + 1 < 8) fail("t-learner: post period too short");

  CateModel model;
  model.mode = CateModel::Mode::T;

  // control ensemble: the usual pre-treatment split
  {
    std::vector<int> times;
    for (int t = panel.t_min; t <= panel.t0; ++t) times.push_back(t);
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd X(n, panel.cols());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X.row(i) = panel.row_at(times[static_cast<std::size_t>(i)]);
      y[i] = panel.y_at(times[static_cast<std::size_t>(i)]);
    }
    int n_train = splits.train.size();
    model.control = fit_ensemble_rows(X, y, times, n_train, specs, scheme,
                                      mix_seed(seed, 0));
  }

  // treated ensemble: train on the first post half, weights on the second
  {
    int half = (panel.t0 + panel.carryover + panel.t_max) / 2;
    std::vector<int> times;
    for (int t = post_lo; t <= post_hi; ++t) times.push_back(t);
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd X(n, panel.cols());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X.row(i) = panel.row_at(times[static_cast<std::size_t>(i)]);
      y[i] = panel.y_at(times[static_cast<std::size_t>(i)]);
    }
    int n_train = half - post_lo + 1;
    model.treated = fit_ensemble_rows(X, y, times, n_train, specs, scheme,
                                      mix_seed(seed, 1));
  }
  return model;
}

CateModel fit_x_learner(const PanelSeries& panel, const std::vector<LearnerSpec>& specs,
                        WeightScheme scheme, const CateOptions& options) {
  if (options.residual_specs.empty()) fail("x-learner: residual learner specs required");
  CateModel model = fit_t_learner(panel, specs, scheme, options.seed);
  model.mode = CateModel::Mode::X;
  model.sign_fix = options.sign_fix;
  scheme = resolve_eta(scheme, panel.t_max);
  const SplitPlan splits = make_splits(panel);

  // post-treatment residuals against the control counterfactual
  {
    std::vector<int> times;
    for (int t = splits.eval.lo; t <= splits.eval.hi; ++t) times.push_back(t);
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd X(n, panel.cols());
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      int t = times[static_cast<std::size_t>(i)];
      X.row(i) = panel.row_at(t);
      r[i] = panel.y_at(t) - model.control.predict(X.row(i), t);
    }
    model.tau_post = fit_ensemble_rows(X, r, times, n / 2, options.residual_specs, scheme,
                                       mix_seed(options.seed, 2));
  }

  // pre-treatment residuals against the treated ensemble; these estimate the
  // negated effect, so they are flipped when sign_fix is on
  {
    std::vector<int> times;
    for (int t = panel.t_min; t <= panel.t0; ++t) times.push_back(t);
    const int n = static_cast<int>(times.size());
    Eigen::MatrixXd X(n, panel.cols());
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      int t = times[static_cast<std::size_t>(i)];
      X.row(i) = panel.row_at(t);
      double w0 = panel.y_at(t) - model.treated.predict(X.row(i), t);
      r[i] = options.sign_fix ? -w0 : w0;
    }
    model.tau_pre = fit_ensemble_rows(X, r, times, n / 2, options.residual_specs, scheme,
                                      mix_seed(options.seed, 3));
  }

  const double n_pre = static_cast<double>(panel.t0 - panel.t_min + 1);
  const double n_post = static_cast<double>(panel.eval_len());
  model.mix_pre = n_pre / (n_pre + n_post);
  return model;
}

double cate_mse(const CateModel& model, const PanelSeries& panel,
                const std::function<double(const Eigen::RowVectorXd&)>& truth) {
  double s = 0.0;
  int n = 0;
  for (int t = panel.t_min; t <= panel.t_max; ++t) {
    if (t > panel.t0 && t <= panel.t0 + panel.carryover) continue;
    Eigen::RowVectorXd row = panel.row_at(t);
    double d = model.predict(row, t) - truth(row);
    s += d * d;
    ++n;
  }
  return std::sqrt(s / static_cast<double>(n));
}

std::map<int, double> rate_diagnostic(const std::map<int, double>& mse_by_T, int step) {
  std::map<int, double> out;
  for (const auto& [T, mse] : mse_by_T) {
    auto prev = mse_by_T.find(T - step);
    if (prev == mse_by_T.end()) continue;
    if (!(prev->second > 0.0)) fail("rate_diagnostic: MSE must be positive");
    out[T] = std::log(std::sqrt(mse / prev->second));
  }
  return out;
}

}  // namespace synlearn
