#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "synlearn/aggregation.hpp"
#include "synlearn/rng.hpp"

using namespace synlearn;

TEST_CASE("quadratic_loss: forced arithmetic") {
  CHECK(quadratic_loss(2, 2) == 0.0);
  CHECK(quadratic_loss(3, 1) == 4.0);
  CHECK(quadratic_loss(-1, 2) == 9.0);
}

TEST_CASE("exp_weights: symmetry, softmax value, one-hot limit") {
  Eigen::VectorXd equal = Eigen::VectorXd::Constant(4, 2.5);
  Eigen::VectorXd w = exp_weights(equal, 3.0);
  for (int j = 0; j < 4; ++j) CHECK(w[j] == doctest::Approx(0.25).epsilon(1e-15));

  // frozen high-precision softmax of cumlosses (1, 2) at eta = 1
  Eigen::VectorXd two(2);
  two << 1.0, 2.0;
  Eigen::VectorXd s = exp_weights(two, 1.0);
  CHECK(s[0] == doctest::Approx(0.7310585786300049).epsilon(1e-6));
  CHECK(s[1] == doctest::Approx(0.2689414213699951).epsilon(1e-6));

  // eta -> infinity concentrates on the argmin (index 1 here)
  Eigen::VectorXd three(3);
  three << 2.0, 1.0, 2.0;
  Eigen::VectorXd hot = exp_weights(three, 1e6);
  CHECK(hot[1] > 1.0 - 1e-9);

  // eta -> 0 approaches uniform
  Eigen::VectorXd flat = exp_weights(three, 1e-9);
  for (int j = 0; j < 3; ++j) CHECK(flat[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("exp_weights: invariant to adding a constant to all losses") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    int p = 2 + rng.uniform_int(8);
    Eigen::VectorXd base(p);
    for (int j = 0; j < p; ++j) base[j] = 10.0 * rng.normal();
    double c = 100.0 * rng.normal();
    double eta = 0.01 + rng.uniform();
    Eigen::VectorXd w1 = exp_weights(base, eta);
    Eigen::VectorXd w2 = exp_weights((base.array() + c).matrix(), eta);
    for (int j = 0; j < p; ++j) CHECK(w1[j] == doctest::Approx(w2[j]).epsilon(1e-12));
  }
}

TEST_CASE("poly_weights: hand-evaluated normalization and fallbacks") {
  Eigen::VectorXd r(3);
  r << 3.0, 1.0, -2.0;
  Eigen::VectorXd w = poly_weights(r, 2.0);
  CHECK(w[0] == doctest::Approx(0.75));
  CHECK(w[1] == doctest::Approx(0.25));
  CHECK(w[2] == doctest::Approx(0.0));

  Eigen::VectorXd neg(3);
  neg << -1.0, -0.5, -3.0;
  Eigen::VectorXd u = poly_weights(neg, 2.0);
  for (int j = 0; j < 3; ++j) CHECK(u[j] == doctest::Approx(1.0 / 3.0));

  Eigen::VectorXd single(3);
  single << -1.0, 4.0, 0.0;
  Eigen::VectorXd hot = poly_weights(single, 3.0);
  CHECK(hot[1] == doctest::Approx(1.0));
}

TEST_CASE("ftl_weights: argmin with lowest-index tie break") {
  Eigen::VectorXd tie(3);
  tie << 2.0, 1.5, 1.5;
  Eigen::VectorXd w = ftl_weights(tie);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 0.0);

  Eigen::VectorXd inc(4);
  inc << 1.0, 2.0, 3.0, 4.0;
  Eigen::VectorXd first = ftl_weights(inc);
  CHECK(first[0] == 1.0);

  Eigen::VectorXd lone(1);
  lone << 5.0;
  CHECK(ftl_weights(lone)[0] == 1.0);
}

TEST_CASE("ls_weights: exact stack, orthogonal noise, fallback path") {
  Rng rng(17);
  const int n = 50;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal() + 0.5;

  // single expert predicting y exactly -> coefficient 1
  Eigen::MatrixXd one(n, 1);
  one.col(0) = y;
  Eigen::VectorXd w1 = ls_weights(one, y);
  CHECK(w1[0] == doctest::Approx(1.0).epsilon(1e-10));

  // expert 2 is noise orthogonalized against y in-sample -> (1, 0)
  Eigen::VectorXd noise(n);
  for (int i = 0; i < n; ++i) noise[i] = rng.normal();
  noise -= (noise.dot(y) / y.squaredNorm()) * y;
  Eigen::MatrixXd two(n, 2);
  two.col(0) = y;
  two.col(1) = noise;
  Eigen::VectorXd w2 = ls_weights(two, y);
  CHECK(w2[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(w2[1] == doctest::Approx(0.0).epsilon(1e-6));

  // p > block length engages the ridge fallback without failing
  Eigen::MatrixXd wide(3, 5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) wide(i, j) = rng.normal();
  Eigen::VectorXd ytiny(3);
  ytiny << 1, 2, 3;
  Eigen::VectorXd w3 = ls_weights(wide, ytiny);
  CHECK(w3.allFinite());
}

TEST_CASE("ensemble_predict: convex combination") {
  Eigen::VectorXd w(3);
  w << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  Eigen::VectorXd preds(3);
  preds << 1, 2, 3;
  CHECK(ensemble_predict(w, preds) == doctest::Approx(2.0));

  Eigen::VectorXd hot(3);
  hot << 0, 0, 1;
  CHECK(ensemble_predict(hot, preds) == doctest::Approx(3.0));

  Eigen::VectorXd mix(2);
  mix << 0.25, 0.75;
  Eigen::VectorXd pv(2);
  pv << 0, 4;
  CHECK(ensemble_predict(mix, pv) == doctest::Approx(3.0));

  CHECK_THROWS(ensemble_predict(w, pv));
}

TEST_CASE("online_weight_path: first element uniform; shift invariance; monotone winner") {
  Rng rng(21);
  Eigen::MatrixXd losses(10, 3);
  for (int t = 0; t < 10; ++t)
    for (int j = 0; j < 3; ++j) losses(t, j) = rng.uniform();

  auto path = online_weight_path(losses, WeightScheme::exponential(0.7));
  for (int j = 0; j < 3; ++j) CHECK(path[0][j] == doctest::Approx(1.0 / 3.0));

  // adding a constant at every (t, j) leaves the exponential path unchanged
  Eigen::MatrixXd shifted = losses.array() + 5.0;
  auto path2 = online_weight_path(shifted, WeightScheme::exponential(0.7));
  for (std::size_t t = 0; t < path.size(); ++t)
    for (int j = 0; j < 3; ++j)
      CHECK(path[t][j] == doctest::Approx(path2[t][j]).epsilon(1e-12));

  // fixed 10-step table where expert 0 is strictly better each period:
  // its weight is strictly increasing along the path
  Eigen::MatrixXd table(10, 2);
  for (int t = 0; t < 10; ++t) {
    table(t, 0) = 0.1;
    table(t, 1) = 0.9;
  }
  auto path3 = online_weight_path(table, WeightScheme::exponential(0.5));
  for (std::size_t t = 1; t < path3.size(); ++t) CHECK(path3[t][0] > path3[t - 1][0]);
}

TEST_CASE("exp/ftl agreement: argmax of exp_weights equals the ftl index") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    int p = 2 + rng.uniform_int(10);
    Eigen::VectorXd cum(p);
    for (int j = 0; j < p; ++j) cum[j] = rng.normal() * 3.0;
    Eigen::VectorXd we = exp_weights(cum, 0.5 + rng.uniform());
    Eigen::VectorXd wf = ftl_weights(cum);
    int arg_exp = 0, arg_ftl = 0;
    we.maxCoeff(&arg_exp);
    wf.maxCoeff(&arg_ftl);
    CHECK(arg_exp == arg_ftl);
  }
}

TEST_CASE("weight vectors are simplex points within 1e-12") {
  Rng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    int p = 1 + rng.uniform_int(12);
    Eigen::VectorXd cum(p);
    Eigen::VectorXd reg(p);
    for (int j = 0; j < p; ++j) {
      cum[j] = rng.normal() * 2.0;
      reg[j] = rng.normal();
    }
    for (const Eigen::VectorXd& w :
         {exp_weights(cum, 0.3), poly_weights(reg, 1.7), ftl_weights(cum)}) {
      CHECK(w.minCoeff() >= 0.0);
      CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("regret_report: degenerate cases are exactly zero") {
  // all experts identical
  Eigen::VectorXd y(6);
  y << 1, 2, 1, 0, 2, 1;
  Eigen::MatrixXd preds(6, 3);
  for (int j = 0; j < 3; ++j) preds.col(j) = y * 0.5;
  WeightScheme scheme = WeightScheme::exponential(regret_eta(3, 6, 2.0));
  RegretReport r = regret_report(y, preds, scheme, 2.0);
  CHECK(r.regret == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.within_bound);

  // single expert
  Eigen::MatrixXd lone = preds.leftCols(1);
  RegretReport r1 = regret_report(y, lone, WeightScheme::exponential(1.0), 2.0);
  CHECK(r1.regret == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("regret_report: bounded instance satisfies the exponential-scheme bound") {
  // brute-force recomputation of both sides from the loss table
  Rng rng(55);
  const int T = 500;
  const int p = 3;
  const double M = 2.0;
  Eigen::VectorXd y(T);
  Eigen::MatrixXd preds(T, p);
  for (int t = 0; t < T; ++t) {
    y[t] = 2.0 * rng.uniform() - 1.0;
    for (int j = 0; j < p; ++j) preds(t, j) = (2.0 * rng.uniform() - 1.0) * (M / 2.0);
  }
  double eta = regret_eta(p, T, M);
  WeightScheme scheme = WeightScheme::exponential(eta);
  RegretReport r = regret_report(y, preds, scheme, M);

  // oracle: replay the exponential recursion by hand
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(p);
  double ens = 0.0;
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd w =
        t == 0 ? Eigen::VectorXd::Constant(p, 1.0 / p) : exp_weights(cum, eta);
    double yhat = w.dot(preds.row(t).transpose());
    ens += quadratic_loss(y[t], yhat);
    for (int j = 0; j < p; ++j) cum[j] += quadratic_loss(y[t], preds(t, j));
  }
  double regret = ens / T - cum.minCoeff() / T;
  CHECK(r.regret == doctest::Approx(regret).epsilon(1e-12));
  double C = 2.0 * M * (y.cwiseAbs().maxCoeff() + M);
  CHECK(r.bound == doctest::Approx(C * std::sqrt(std::log(3.0) / (2.0 * T))).epsilon(1e-12));
  CHECK(r.regret <= r.bound);
  CHECK(r.within_bound);
}

TEST_CASE("eta defaults follow the two regimes") {
  CHECK(default_eta_testing(200) == doctest::Approx(1.0 / 200.0));
  CHECK(regret_eta(10, 500, 2.0) ==
        doctest::Approx(std::sqrt(8.0 * std::log(10.0) / (4.0 * 500.0))));
}

TEST_CASE("final_weights matches exp_weights of block cumulative losses") {
  Rng rng(61);
  const int T = 40, p = 4;
  Eigen::VectorXd y(T);
  Eigen::MatrixXd preds(T, p);
  for (int t = 0; t < T; ++t) {
    y[t] = rng.normal();
    for (int j = 0; j < p; ++j) preds(t, j) = rng.normal();
  }
  Eigen::VectorXd w = final_weights(y, preds, WeightScheme::exponential(0.3));
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) cum[j] += quadratic_loss(y[t], preds(t, j));
  Eigen::VectorXd expect = exp_weights(cum, 0.3);
  for (int j = 0; j < p; ++j) CHECK(w[j] == doctest::Approx(expect[j]).epsilon(1e-12));

  // absolute loss is available for the ATE path
  Eigen::VectorXd wa = final_weights(y, preds,
                                     WeightScheme::exponential(0.3, LossKind::absolute));
  CHECK(wa.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

#include "synlearn/io.hpp"

TEST_CASE("regret path csv matches regret_report on its final row") {
  Rng rng(71);
  const int T = 50, p = 3;
  Eigen::VectorXd y(T);
  Eigen::MatrixXd preds(T, p);
  for (int t = 0; t < T; ++t) {
    y[t] = rng.uniform() - 0.5;
    for (int j = 0; j < p; ++j) preds(t, j) = 0.5 * (rng.uniform() - 0.5);
  }
  WeightScheme scheme = WeightScheme::exponential(regret_eta(p, T, 1.0));
  std::string csv = regret_path_csv(y, preds, scheme);
  CHECK(csv.rfind("time,ensemble_loss,best_expert_loss,regret", 0) == 0);

  // last row's regret equals the report's (parse the final line)
  std::istringstream in(csv);
  std::string line, last;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) {
      last = line;
      ++rows;
    }
  CHECK(rows == T);
  double ens = 0, best = 0, reg = 0;
  int tt = 0;
  std::replace(last.begin(), last.end(), ',', ' ');
  std::istringstream(last) >> tt >> ens >> best >> reg;
  RegretReport report = regret_report(y, preds, scheme, 1.0);
  CHECK(tt == T);
  CHECK(ens == doctest::Approx(report.ensemble_loss).epsilon(1e-9));
  CHECK(best == doctest::Approx(report.best_expert_loss).epsilon(1e-9));
  CHECK(reg == doctest::Approx(report.regret).epsilon(1e-9));
}

TEST_CASE("regret_report enforces its scheme and loss contract") {
  Eigen::VectorXd y(4);
  y << 1, 0, 1, 0;
  Eigen::MatrixXd preds = Eigen::MatrixXd::Constant(4, 2, 0.5);
  CHECK_THROWS(regret_report(y, preds, WeightScheme::follow_leader(), 1.0));
  CHECK_THROWS(regret_report(y, preds, WeightScheme::polynomial(2.0), 1.0));
  CHECK_THROWS(
      regret_report(y, preds, WeightScheme::exponential(0.5, LossKind::absolute), 1.0));
  CHECK_NOTHROW(regret_report(y, preds, WeightScheme::exponential(0.5), 1.0));
}

TEST_CASE("weight scheme json round trip") {
  for (WeightScheme s : {WeightScheme::exponential(0.25, LossKind::absolute),
                         WeightScheme::polynomial(3.0), WeightScheme::follow_leader(),
                         WeightScheme::least_squares()}) {
    WeightScheme back = scheme_from_json(scheme_to_json(s));
    CHECK(back.kind == s.kind);
    CHECK(back.eta == s.eta);
    CHECK(back.q == s.q);
    CHECK((back.loss == s.loss));
  }
}
