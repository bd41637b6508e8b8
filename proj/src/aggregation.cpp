#include "synlearn/aggregation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace synlearn {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Eigen::VectorXd uniform_weights(int p) {
  return Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
}

}  // namespace

void WeightScheme::validate() const {
  if (kind == Kind::exponential && eta < 0.0) fail("exponential scheme requires eta >= 0");
  if (kind == Kind::polynomial && !(q > 1.0)) fail("polynomial scheme requires q > 1");
}

WeightScheme WeightScheme::exponential(double eta, LossKind loss) {
  WeightScheme s;
  s.kind = Kind::exponential;
  s.eta = eta;
  s.loss = loss;
  return s;
}

WeightScheme WeightScheme::polynomial(double q, LossKind loss) {
  WeightScheme s;
  s.kind = Kind::polynomial;
  s.q = q;
  s.loss = loss;
  return s;
}

WeightScheme WeightScheme::follow_leader(LossKind loss) {
  WeightScheme s;
  s.kind = Kind::follow_leader;
  s.loss = loss;
  return s;
}

WeightScheme WeightScheme::least_squares(LossKind loss) {
  WeightScheme s;
  s.kind = Kind::least_squares;
  s.loss = loss;
  return s;
}

Eigen::VectorXd exp_weights(const Eigen::VectorXd& cumloss, double eta) {
  if (cumloss.size() == 0) fail("exp_weights: empty loss vector");
  if (!cumloss.allFinite()) fail("exp_weights: non-finite cumulative loss");
  // shift by the minimum so the largest exponent is zero
  double shift = cumloss.minCoeff();
  Eigen::VectorXd w = (-eta * (cumloss.array() - shift)).exp();
  double s = w.sum();
  if (!(s > 0.0) || !std::isfinite(s)) return uniform_weights(static_cast<int>(cumloss.size()));
  return w / s;
}

Eigen::VectorXd poly_weights(const Eigen::VectorXd& regret, double q) {
  if (!(q > 1.0)) fail("poly_weights: q must exceed 1");
  if (regret.size() == 0) fail("poly_weights: empty regret vector");
  Eigen::VectorXd w = regret.cwiseMax(0.0).array().pow(q - 1.0);
  double s = w.sum();
  if (!(s > 0.0)) return uniform_weights(static_cast<int>(regret.size()));
  return w / s;
}

Eigen::VectorXd ftl_weights(const Eigen::VectorXd& cumloss) {
  if (cumloss.size() == 0) fail("ftl_weights: empty loss vector");
  int best = 0;
  for (int j = 1; j < cumloss.size(); ++j)
    if (cumloss[j] < cumloss[best]) best = j;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(cumloss.size());
  w[best] = 1.0;
  return w;
}

Eigen::VectorXd ls_weights(const Eigen::MatrixXd& preds, const Eigen::VectorXd& y) {
  if (preds.rows() != y.size()) fail("ls_weights: row count mismatch");
  if (preds.rows() == 0) fail("ls_weights: empty block");
  Eigen::MatrixXd gram = preds.transpose() * preds;
  Eigen::VectorXd rhs = preds.transpose() * y;
  auto attempt = [&](double lam) {
    Eigen::MatrixXd A = gram;
    A.diagonal().array() += lam;
    Eigen::VectorXd b = A.ldlt().solve(rhs);
    bool ok = b.allFinite() && (A * b - rhs).norm() <= 1e-6 * (rhs.norm() + 1.0);
    return std::pair<bool, Eigen::VectorXd>(ok, std::move(b));
  };
  // p > block length (or collinear experts) engages the ridge fallback
  if (preds.rows() < preds.cols()) return attempt(1e-8).second;
  auto [ok, b] = attempt(0.0);
  return ok ? b : attempt(1e-8).second;
}

double ensemble_predict(const Eigen::VectorXd& w, const Eigen::VectorXd& expert_preds) {
  if (w.size() != expert_preds.size()) fail("ensemble_predict: length mismatch");
  return w.dot(expert_preds);
}

std::vector<Eigen::VectorXd> online_weight_path(const Eigen::MatrixXd& losses,
                                                const WeightScheme& scheme) {
  scheme.validate();
  const int T = static_cast<int>(losses.rows());
  const int p = static_cast<int>(losses.cols());
  if (T == 0 || p == 0) fail("online_weight_path: empty block");
  if (scheme.kind == WeightScheme::Kind::least_squares)
    fail("online_weight_path: least-squares weights are batch-only");

  std::vector<Eigen::VectorXd> path;
  path.reserve(static_cast<std::size_t>(T));
  Eigen::VectorXd cumloss = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd regret = Eigen::VectorXd::Zero(p);  // vs the mixture loss
  for (int t = 0; t < T; ++t) {
    switch (scheme.kind) {
      case WeightScheme::Kind::exponential:
        path.push_back(t == 0 ? uniform_weights(p) : exp_weights(cumloss, scheme.eta));
        break;
      case WeightScheme::Kind::polynomial:
        path.push_back(t == 0 ? uniform_weights(p) : poly_weights(regret, scheme.q));
        break;
      case WeightScheme::Kind::follow_leader:
        path.push_back(t == 0 ? uniform_weights(p) : ftl_weights(cumloss));
        break;
      default:
        break;
    }
    const Eigen::VectorXd& w = path.back();
    double mixture = w.dot(losses.row(t).transpose());
    cumloss += losses.row(t).transpose();
    regret.array() += mixture - losses.row(t).transpose().array();
  }
  return path;
}

Eigen::VectorXd final_weights(const Eigen::VectorXd& y, const Eigen::MatrixXd& preds,
                              const WeightScheme& scheme) {
  scheme.validate();
  const int T = static_cast<int>(preds.rows());
  const int p = static_cast<int>(preds.cols());
  if (T == 0 || p == 0) fail("final_weights: empty block");
  if (y.size() != T) fail("final_weights: y/preds row mismatch");

  if (scheme.kind == WeightScheme::Kind::least_squares) return ls_weights(preds, y);

  Eigen::MatrixXd losses(T, p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) losses(t, j) = loss_value(scheme.loss, y[t], preds(t, j));

  if (scheme.kind == WeightScheme::Kind::exponential)
    return exp_weights(losses.colwise().sum().transpose(), scheme.eta);
  if (scheme.kind == WeightScheme::Kind::follow_leader)
    return ftl_weights(losses.colwise().sum().transpose());

  // polynomial: gradient of the potential at the block's final regret vector
  Eigen::VectorXd regret = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd w = t == 0 ? uniform_weights(p) : poly_weights(regret, scheme.q);
    double mixture = w.dot(losses.row(t).transpose());
    regret.array() += mixture - losses.row(t).transpose().array();
  }
  return poly_weights(regret, scheme.q);
}

RegretReport regret_report(const Eigen::VectorXd& y, const Eigen::MatrixXd& preds,
                           const WeightScheme& scheme, double M) {
  scheme.validate();
  // the guarantee is stated for the exponential scheme under quadratic loss
  if (scheme.kind != WeightScheme::Kind::exponential)
    fail("regret_report: regret accounting requires the exponential scheme");
  if (scheme.loss != LossKind::quadratic)
    fail("regret_report: regret accounting requires quadratic loss");
  const int T = static_cast<int>(preds.rows());
  const int p = static_cast<int>(preds.cols());
  if (T == 0 || p == 0) fail("regret_report: empty block");
  if (y.size() != T) fail("regret_report: y/preds row mismatch");
  if (!(M > 0.0)) fail("regret_report: M must be positive");

  Eigen::MatrixXd losses(T, p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) losses(t, j) = loss_value(scheme.loss, y[t], preds(t, j));

  std::vector<Eigen::VectorXd> path = online_weight_path(losses, scheme);
  RegretReport report;
  report.regret_vector = Eigen::VectorXd::Zero(p);
  double ens_cum = 0.0;
  for (int t = 0; t < T; ++t) {
    double yhat = path[static_cast<std::size_t>(t)].dot(preds.row(t).transpose());
    double l_ens = loss_value(scheme.loss, y[t], yhat);
    ens_cum += l_ens;
    report.regret_vector.array() += l_ens - losses.row(t).transpose().array();
  }
  report.ensemble_loss = ens_cum / static_cast<double>(T);
  report.best_expert_loss = losses.colwise().sum().minCoeff() / static_cast<double>(T);
  report.regret = report.ensemble_loss - report.best_expert_loss;
  double C = 2.0 * M * (y.cwiseAbs().maxCoeff() + M);
  report.bound = C * std::sqrt(std::log(static_cast<double>(p)) /
                               (2.0 * static_cast<double>(T)));
  report.within_bound = report.regret <= report.bound + 1e-12;
  return report;
}

double default_eta_testing(int t_max) {
  if (t_max <= 0) fail("default_eta_testing: t_max must be positive");
  return 1.0 / static_cast<double>(t_max);
}

double regret_eta(int p, int t0, double M) {
  if (p < 1 || t0 < 1 || !(M > 0.0)) fail("regret_eta: bad arguments");
  if (p == 1) return 1.0;  // weights are degenerate anyway
  return std::sqrt(8.0 * std::log(static_cast<double>(p)) /
                   (M * M * static_cast<double>(t0)));
}

}  // namespace synlearn
