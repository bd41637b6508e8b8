#include "synlearn/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "synlearn/forest.hpp"
#include "synlearn/rng.hpp"

namespace synlearn {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double clamp_to(double v, double m) { return std::min(m, std::max(-m, v)); }

// Euclidean projection onto the probability simplex (Duchi et al. 2008).
Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  for (int i = 0; i < n; ++i) {
    css += u[static_cast<std::size_t>(i)];
    double cand = (css - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - cand > 0.0) theta = cand;
  }
  for (int i = 0; i < n; ++i) v[i] = std::max(0.0, v[i] - theta);
  return v;
}

double spectral_norm_sq(const Eigen::MatrixXd& X) {
  // power iteration on X'X; a slight inflation keeps the step conservative
  Eigen::VectorXd v = Eigen::VectorXd::Ones(X.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd w = X.transpose() * (X * v);
    double norm = w.norm();
    if (norm <= 0.0) return 1.0;
    v = w / norm;
    lambda = norm;
  }
  return lambda * 1.001;
}

// Solves (X'X + lambda I) b = X'y, retrying with lambda = 1e-8 when the
// system is singular or the solution is garbage.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            double lambda) {
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::VectorXd rhs = X.transpose() * y;
  auto attempt = [&](double lam) {
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += lam;
    Eigen::VectorXd b = A.ldlt().solve(rhs);
    bool ok = b.allFinite();
    if (ok) {
      double resid = (A * b - rhs).norm();
      double scale = rhs.norm() + 1.0;
      ok = resid <= 1e-6 * scale;
    }
    return std::pair<bool, Eigen::VectorXd>(ok, std::move(b));
  };
  (void)p;
  auto [ok, b] = attempt(lambda);
  if (!ok) {
    auto [ok2, b2] = attempt(std::max(lambda, 1e-8));
    if (!ok2) fail("ridge solve failed even with fallback regularization");
    return b2;
  }
  return b;
}

class ScImpl final : public detail::LearnerImpl {
 public:
  explicit ScImpl(SCWeights w) : w_(std::move(w)) {}
  double raw_predict(const PredictContext& ctx) const override {
    if (ctx.row.size() != w_.beta.size()) fail("sc predict: covariate dimension mismatch");
    return ctx.row.dot(w_.beta) + w_.intercept;
  }
  const SCWeights& weights() const { return w_; }

 private:
  SCWeights w_;
};

class RidgeImpl final : public detail::LearnerImpl {
 public:
  RidgeImpl(Eigen::VectorXd beta, double intercept)
      : beta_(std::move(beta)), intercept_(intercept) {}
  double raw_predict(const PredictContext& ctx) const override {
    if (ctx.row.size() != beta_.size()) fail("ridge predict: covariate dimension mismatch");
    return ctx.row.dot(beta_) + intercept_;
  }

 private:
  Eigen::VectorXd beta_;
  double intercept_;
};

class KnnImpl final : public detail::LearnerImpl {
 public:
  KnnImpl(Eigen::MatrixXd X, Eigen::VectorXd y, int k)
      : X_(std::move(X)), y_(std::move(y)), k_(k) {}
  double raw_predict(const PredictContext& ctx) const override {
    if (ctx.row.size() != X_.cols()) fail("knn predict: covariate dimension mismatch");
    const int n = static_cast<int>(X_.rows());
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      dist[static_cast<std::size_t>(i)] = {(X_.row(i) - ctx.row).squaredNorm(), i};
    // earlier training row wins ties
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double sum = 0.0;
    for (int i = 0; i < k_; ++i) sum += y_[dist[static_cast<std::size_t>(i)].second];
    return sum / static_cast<double>(k_);
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  int k_;
};

class ArImpl final : public detail::LearnerImpl {
 public:
  ArImpl(std::vector<double> tail, Eigen::VectorXd coef, int order, double clip, int origin)
      : tail_(std::move(tail)), coef_(std::move(coef)), order_(order), clip_(clip),
        origin_(origin) {}
  // coef_ = (intercept, phi_1..phi_p); forecasts recursively from the end of
  // the training block, clipping each step. Horizons before it collapse to 1.
  double raw_predict(const PredictContext& ctx) const override {
    int horizon = std::max(1, ctx.time - origin_);
    std::vector<double> state = tail_;  // most recent last
    double value = state.back();
    for (int h = 0; h < horizon; ++h) {
      double next = coef_[0];
      for (int i = 1; i <= order_; ++i)
        next += coef_[i] * state[state.size() - static_cast<std::size_t>(i)];
      next = clamp_to(next, clip_);
      state.erase(state.begin());
      state.push_back(next);
      value = next;
    }
    return value;
  }

 private:
  std::vector<double> tail_;
  Eigen::VectorXd coef_;
  int order_;
  double clip_;
  int origin_;
};

class NoiseImpl final : public detail::LearnerImpl {
 public:
  NoiseImpl(std::uint64_t seed, int index) : seed_(seed), index_(index) {}
  double raw_predict(const PredictContext& ctx) const override {
    return normal_at(seed_, static_cast<std::uint64_t>(index_),
                     static_cast<std::uint64_t>(static_cast<std::int64_t>(ctx.time)) +
                         0x8000000000000000ULL);
  }

 private:
  std::uint64_t seed_;
  int index_;
};

}  // namespace

FittedLearner::FittedLearner(std::string kind, std::shared_ptr<const detail::LearnerImpl> impl,
                             double clip)
    : kind_(std::move(kind)), impl_(std::move(impl)), clip_(clip) {
  if (!(clip > 0.0)) fail("prediction clamp M must be positive");
}

double FittedLearner::predict(const PredictContext& ctx) const {
  return clamp_to(impl_->raw_predict(ctx), clip_);
}

double default_clip(const Eigen::VectorXd& train_y) {
  double m = train_y.cwiseAbs().maxCoeff();
  return 10.0 * std::max(m, 1e-12);
}

SCWeights solve_sc_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           bool with_intercept) {
  if (X.rows() < 2) fail("sc fit needs at least 2 training rows");
  if (X.cols() < 1) fail("sc fit needs at least one column");
  const int p = static_cast<int>(X.cols());
  SCWeights w;
  w.has_intercept = with_intercept;
  w.beta = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  w.intercept = 0.0;
  double lmax = spectral_norm_sq(X);
  if (!(lmax > 0.0) || !std::isfinite(lmax)) lmax = 1.0;
  const double step = 1.0 / lmax;
  auto objective = [&](const Eigen::VectorXd& beta, double c) {
    return (y.array() - (X * beta).array() - c).matrix().squaredNorm();
  };
  if (with_intercept) w.intercept = (y - X * w.beta).mean();
  double prev = objective(w.beta, w.intercept);
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd resid = X * w.beta;
    resid.array() += w.intercept;
    resid -= y;
    Eigen::VectorXd grad = X.transpose() * resid;  // gradient of (1/2)||.||^2
    w.beta = project_simplex(w.beta - step * grad);
    if (with_intercept) w.intercept = (y - X * w.beta).mean();
    double obj = objective(w.beta, w.intercept);
    if (std::abs(prev - obj) < 1e-10) break;
    prev = obj;
  }
  return w;
}

FittedLearner fit_sc(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const LearnerSpec& spec) {
  SCWeights w = solve_sc_weights(X, y, spec.param("intercept", 0.0) != 0.0);
  double clip = spec.clip.value_or(default_clip(y));
  return FittedLearner("sc-constrained", std::make_shared<ScImpl>(std::move(w)), clip);
}

FittedLearner fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const LearnerSpec& spec) {
  double lambda = spec.param("lambda", 0.0);
  if (lambda < 0.0) fail("ridge: lambda must be nonnegative");
  bool intercept = spec.param("intercept", 0.0) != 0.0;
  Eigen::VectorXd beta;
  double b0 = 0.0;
  if (intercept) {
    // unpenalized intercept: center, solve, restore
    Eigen::RowVectorXd xm = X.colwise().mean();
    double ym = y.mean();
    Eigen::MatrixXd Xc = X.rowwise() - xm;
    Eigen::VectorXd yc = y.array() - ym;
    beta = ridge_solve(Xc, yc, lambda);
    b0 = ym - xm * beta;
  } else {
    beta = ridge_solve(X, y, lambda);
  }
  double clip = spec.clip.value_or(default_clip(y));
  return FittedLearner("ridge", std::make_shared<RidgeImpl>(std::move(beta), b0), clip);
}

FittedLearner fit_knn(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const LearnerSpec& spec) {
  int k = static_cast<int>(spec.param("k", 5.0));
  if (k < 1 || k > X.rows()) fail("knn: k must lie in [1, train size]");
  double clip = spec.clip.value_or(default_clip(y));
  return FittedLearner("knn", std::make_shared<KnnImpl>(X, y, k), clip);
}

FittedLearner fit_ar(const std::vector<double>& train_y, int train_end_time,
                     const LearnerSpec& spec) {
  int order = static_cast<int>(spec.param("p", 3.0));
  if (order < 1) fail("ar: lag order must be >= 1");
  const int n = static_cast<int>(train_y.size());
  if (n <= order + 1) fail("ar: training block must be longer than p + 1");
  const int rows = n - order;
  Eigen::MatrixXd D(rows, order + 1);
  Eigen::VectorXd target(rows);
  for (int r = 0; r < rows; ++r) {
    D(r, 0) = 1.0;
    for (int i = 1; i <= order; ++i)
      D(r, i) = train_y[static_cast<std::size_t>(r + order - i)];
    target[r] = train_y[static_cast<std::size_t>(r + order)];
  }
  Eigen::VectorXd coef = ridge_solve(D, target, 0.0);
  Eigen::VectorXd ys = Eigen::Map<const Eigen::VectorXd>(train_y.data(), n);
  double clip = spec.clip.value_or(default_clip(ys));
  std::vector<double> tail(train_y.end() - order, train_y.end());
  return FittedLearner("ar", std::make_shared<ArImpl>(std::move(tail), std::move(coef),
                                                      order, clip, train_end_time),
                       clip);
}

std::vector<FittedLearner> make_noninformative(std::uint64_t seed, int count, double clip) {
  if (count < 0) fail("noninformative: count must be >= 0");
  std::vector<FittedLearner> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j)
    out.emplace_back("noninformative", std::make_shared<NoiseImpl>(seed, j), clip);
  return out;
}

FittedLearner fit_learner(const LearnerSpec& spec, const PanelSeries& panel,
                          std::uint64_t seed, int pool_index) {
  const int n_train = 1 - panel.t_min + 1;
  Eigen::MatrixXd X = panel.X.topRows(n_train);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(panel.y.data(), n_train);
  if (spec.kind == "sc-constrained") return fit_sc(X, y, spec);
  if (spec.kind == "ridge") return fit_ridge(X, y, spec);
  if (spec.kind == "knn") return fit_knn(X, y, spec);
  if (spec.kind == "ar") {
    std::vector<double> ty(panel.y.begin(), panel.y.begin() + n_train);
    return fit_ar(ty, 1, spec);
  }
  if (spec.kind == "honest-forest")
    return fit_honest_forest(X, y, spec,
                             mix_seed(seed, 0xf05e57ULL, static_cast<std::uint64_t>(pool_index)));
  if (spec.kind == "noninformative") {
    double clip = spec.clip.value_or(default_clip(y));
    std::uint64_t s = seed;
    if (auto it = spec.params.find("seed"); it != spec.params.end())
      s = static_cast<std::uint64_t>(it->second);
    int index = static_cast<int>(spec.param("index", static_cast<double>(pool_index)));
    return FittedLearner("noninformative", std::make_shared<NoiseImpl>(s, index), clip);
  }
  fail("unknown learner kind: " + spec.kind);
}

std::vector<FittedLearner> fit_pool(const std::vector<LearnerSpec>& specs,
                                    const PanelSeries& panel, std::uint64_t seed) {
  std::vector<FittedLearner> pool;
  pool.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i)
    pool.push_back(fit_learner(specs[i], panel, seed, static_cast<int>(i)));
  return pool;
}

Eigen::MatrixXd prediction_matrix(const std::vector<FittedLearner>& pool,
                                  const PanelSeries& panel, const std::vector<int>& times) {
  Eigen::MatrixXd G(static_cast<int>(times.size()), static_cast<int>(pool.size()));
  for (int i = 0; i < static_cast<int>(times.size()); ++i) {
    PredictContext ctx;
    ctx.time = times[static_cast<std::size_t>(i)];
    ctx.train_end_time = 1;
    ctx.row = panel.row_at(ctx.time);
    for (int j = 0; j < static_cast<int>(pool.size()); ++j)
      G(i, j) = pool[static_cast<std::size_t>(j)].predict(ctx);
  }
  return G;
}

}  // namespace synlearn
