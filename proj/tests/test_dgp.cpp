#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synlearn/dgp.hpp"
#include "synlearn/effects.hpp"
#include "synlearn/rng.hpp"

using namespace synlearn;
using namespace synlearn::dgp;

namespace {

double mean_of(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i];
  return s / static_cast<double>(hi - lo);
}

double variance_of(const std::vector<double>& v) {
  double m = mean_of(v, 0, v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("gen_noise: degenerate ar1 is iid standard normal") {
  auto x = gen_noise(NoiseSpec::ar1(0.0, 1.0), 10000, 5);
  CHECK(variance_of(x) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(mean_of(x, 0, x.size()) == doctest::Approx(0.0).epsilon(0.05));
}

TEST_CASE("gen_noise: ar1 lag-1 autocorrelation matches the population value") {
  auto x = gen_noise(NoiseSpec::ar1(0.6, std::sqrt(1.0 - 0.36)), 20000, 8);
  double m = mean_of(x, 0, x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) num += (x[i] - m) * (x[i - 1] - m);
  for (double v : x) den += (v - m) * (v - m);
  CHECK(num / den == doctest::Approx(0.6).epsilon(0.05 / 0.6));
  CHECK(variance_of(x) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("gen_noise: determinism and validation") {
  auto a = gen_noise(NoiseSpec::arma11(0.5, 0.3, 0.1), 500, 42);
  auto b = gen_noise(NoiseSpec::arma11(0.5, 0.3, 0.1), 500, 42);
  CHECK(a == b);
  auto c = gen_noise(NoiseSpec::ararch(0.8, 0.001, 0.99), 300, 9);
  for (double v : c) CHECK(std::isfinite(v));
  CHECK_THROWS(gen_noise(NoiseSpec::ar1(1.2, 1.0), 10, 1));
  CHECK_THROWS(gen_noise(NoiseSpec::ar1(0.5, 1.0), 0, 1));
}

TEST_CASE("dgp_beta: 1/(1+j)^2 head, remainder tail, exact simplex") {
  Eigen::VectorXd beta = dgp_beta(50);
  for (int j = 0; j < 49; ++j)
    CHECK(beta[j] == doctest::Approx(1.0 / std::pow(2.0 + j, 2.0)).epsilon(1e-15));
  CHECK(beta.minCoeff() >= 0.0);
  CHECK(beta.sum() == doctest::Approx(1.0).epsilon(1e-15));
  Eigen::VectorXd b2 = dgp_beta(2);
  CHECK(b2[0] == doctest::Approx(0.25));
  CHECK(b2[1] == doctest::Approx(0.75));
}

TEST_CASE("simulate: degenerate dgp1 is exactly beta-weighted mu plus the effect") {
  DgpSpec spec;
  spec.id = "dgp1";
  spec.covariates = 7;
  spec.effect = 1.5;
  spec.total = 60;
  spec.treat_time = 40;
  spec.train_len = 20;
  spec.degenerate = true;
  SimulatedPanel sim = simulate(spec);

  Eigen::VectorXd beta = dgp_beta(7);
  double level = 0.0;
  for (int j = 0; j < 7; ++j) level += beta[j] * (2.0 + j) / (1.0 + j);
  for (int t = sim.panel.t_min; t <= sim.panel.t_max; ++t) {
    double expect = level + (t > sim.panel.t0 ? 1.5 : 0.0);
    CHECK(sim.panel.y_at(t) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("simulate: dgp2 control outcome lives in the logistic range") {
  for (const char* id : {"dgp2a", "dgp2b", "dgp2c"}) {
    DgpSpec spec;
    spec.id = id;
    spec.covariates = 10;
    spec.effect = 0.4;
    spec.total = 150;
    spec.treat_time = 100;
    spec.train_len = 50;
    spec.seed = 77;
    SimulatedPanel sim = simulate(spec);
    for (int t = sim.panel.t_min; t <= sim.panel.t_max; ++t) {
      int i = sim.panel.index_of(t);
      double control = sim.y_control[static_cast<std::size_t>(i)];
      CHECK(control > 0.0);
      CHECK(control < 1.0);
    }
  }
}

TEST_CASE("simulate: zero effect means pre and post come from the same process") {
  // two-sample mean gap shrinks like the standard error (3 SE check over 50 seeds)
  int fails = 0;
  for (int s = 0; s < 50; ++s) {
    DgpSpec spec;
    spec.id = "dgp1";
    spec.covariates = 5;
    spec.effect = 0.0;
    spec.total = 400;
    spec.treat_time = 200;
    spec.train_len = 50;
    spec.seed = 1000 + static_cast<std::uint64_t>(s);
    SimulatedPanel sim = simulate(spec);
    std::vector<double>& y = sim.panel.y;
    std::size_t cut = static_cast<std::size_t>(sim.panel.index_of(sim.panel.t0)) + 1;
    double pre = mean_of(y, 0, cut);
    double post = mean_of(y, cut, y.size());
    // AR(1) long-run variance of the mean: (1+rho)/(1-rho)/n per segment; the
    // factor/covariate terms add ~variance 1-2 per point; 3 SE with sd bound 3
    double se = 3.0 * std::sqrt(1.0 / 200.0 + 1.0 / 200.0);
    if (std::abs(post - pre) > 3.0 * se) ++fails;
  }
  CHECK(fails <= 5);
}

TEST_CASE("simulate: factor regression recovers (mu_j, lambda_j) on long series") {
  DgpSpec spec;
  spec.id = "dgp1";
  spec.covariates = 4;
  spec.total = 4000;
  spec.treat_time = 3000;
  spec.train_len = 1000;
  spec.seed = 31;
  SimulatedPanel sim = simulate(spec);
  REQUIRE(static_cast<int>(sim.factor.size()) == spec.total);
  const int n = spec.total;
  for (int j = 0; j < 4; ++j) {
    // OLS of X_j on (1, F): intercept ~ mu_j (theta and u average out),
    // slope ~ lambda_j
    double sf = 0, sff = 0, sx = 0, sxf = 0;
    for (int i = 0; i < n; ++i) {
      double f = sim.factor[static_cast<std::size_t>(i)];
      double x = sim.panel.X(i, j);
      sf += f;
      sff += f * f;
      sx += x;
      sxf += x * f;
    }
    double det = n * sff - sf * sf;
    double slope = (n * sxf - sf * sx) / det;
    double intercept = (sx * sff - sf * sxf) / det;
    double mu = (2.0 + j) / (1.0 + j);
    // residual sd ~ sqrt(2); 3 SE on slope/intercept ~ 3 sqrt(2/n)
    double band = 3.0 * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(slope - mu) <= band * 3.0);
    CHECK(std::abs(intercept - mu) <= band * 3.0);
  }
}

TEST_CASE("simulate: deterministic per (spec, seed)") {
  DgpSpec spec;
  spec.id = "dgp4c";
  spec.covariates = 8;
  spec.effect = 0.3;
  spec.total = 120;
  spec.treat_time = 90;
  spec.train_len = 40;
  spec.seed = 5;
  SimulatedPanel a = simulate(spec);
  SimulatedPanel b = simulate(spec);
  CHECK(a.panel.y == b.panel.y);
  CHECK(a.panel.X == b.panel.X);
  spec.seed = 6;
  SimulatedPanel c = simulate(spec);
  CHECK(a.panel.y != c.panel.y);
}

TEST_CASE("simulate_carryover: forced sums and zero-alpha identity") {
  DgpSpec base;
  base.id = "dgp1";
  base.covariates = 4;
  base.total = 40;
  base.treat_time = 30;
  base.train_len = 10;
  base.degenerate = true;

  SimulatedPanel with = simulate_carryover(base, {1.0, 1.0});
  const PanelSeries& p = with.panel;
  double level = with.y_control[0];
  CHECK(p.carryover == 1);
  CHECK(p.y_at(p.t0 + 1) == doctest::Approx(level + 1.0).epsilon(1e-12));
  for (int t = p.t0 + 2; t <= p.t_max; ++t)
    CHECK(p.y_at(t) == doctest::Approx(level + 2.0).epsilon(1e-12));

  SimulatedPanel zero = simulate_carryover(base, {0.0, 0.0});
  for (std::size_t i = 0; i < zero.panel.y.size(); ++i)
    CHECK(zero.panel.y[i] == doctest::Approx(zero.y_control[i]).epsilon(1e-15));
}

TEST_CASE("simulate_carryover: naive mean gap is biased by the derived formula") {
  DgpSpec base;
  base.id = "dgp1";
  base.covariates = 4;
  base.total = 50;
  base.treat_time = 40;
  base.train_len = 10;
  base.degenerate = true;
  std::vector<double> alphas{1.0, 1.0};
  SimulatedPanel sim = simulate_carryover(base, alphas);
  const PanelSeries& p = sim.panel;

  double pre = 0.0, post = 0.0;
  int n_pre = 0, n_post = 0;
  for (int t = p.t_min; t <= p.t_max; ++t) {
    if (t <= p.t0) {
      pre += p.y_at(t);
      ++n_pre;
    } else {
      post += p.y_at(t);
      ++n_post;
    }
  }
  double naive = post / n_post - pre / n_pre;
  double total_effect = std::accumulate(alphas.begin(), alphas.end(), 0.0);
  double bias = naive_carryover_bias(alphas, n_post);
  CHECK(bias == doctest::Approx(-1.0 / n_post).epsilon(1e-15));
  CHECK(naive == doctest::Approx(total_effect + bias).epsilon(1e-10));
  CHECK(naive != doctest::Approx(total_effect).epsilon(1e-6));
}

TEST_CASE("did_fit: constant series and parallel-shift recovery") {
  PanelSeries p;
  p.t_min = -5;
  p.t_max = 20;
  p.t0 = 10;
  p.carryover = 0;
  int n = p.rows();
  p.y.assign(static_cast<std::size_t>(n), 3.0);
  p.X = Eigen::MatrixXd::Constant(n, 3, 3.0);
  DiDModel flat = did_fit(p, p.y);
  for (int t = p.t_min; t <= p.t_max; ++t)
    CHECK(flat.predict(t, p.t0) == doctest::Approx(3.0).epsilon(1e-12));

  // treated shift c over parallel controls -> delta = c
  Rng rng(3);
  for (int t = p.t_min; t <= p.t_max; ++t) {
    int i = p.index_of(t);
    double base = std::sin(0.4 * t);
    for (int j = 0; j < 3; ++j) p.X(i, j) = base;
    p.y[static_cast<std::size_t>(i)] = base + 0.5 + (t > p.t0 ? 2.5 : 0.0);
  }
  DiDModel shifted = did_fit(p, p.y);
  CHECK(shifted.delta == doctest::Approx(2.5).epsilon(1e-12));
  (void)rng;
}

TEST_CASE("did_fit: coefficients match a hand group-mean solve on a noisy draw") {
  Rng rng(17);
  PanelSeries p;
  p.t_min = -4;
  p.t_max = 15;
  p.t0 = 7;
  p.carryover = 0;
  int n = p.rows();
  p.y.resize(static_cast<std::size_t>(n));
  p.X.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    p.y[static_cast<std::size_t>(i)] = rng.normal();
    p.X(i, 0) = rng.normal();
    p.X(i, 1) = rng.normal();
  }
  DiDModel m = did_fit(p, p.y);

  double yt_pre = 0, yt_post = 0, yc_pre = 0, yc_post = 0;
  int n_pre = 0, n_post = 0;
  for (int t = p.t_min; t <= p.t_max; ++t) {
    int i = p.index_of(t);
    double c = (p.X(i, 0) + p.X(i, 1)) / 2.0;
    if (t <= p.t0) {
      yt_pre += p.y[static_cast<std::size_t>(i)];
      yc_pre += c;
      ++n_pre;
    } else {
      yt_post += p.y[static_cast<std::size_t>(i)];
      yc_post += c;
      ++n_post;
    }
  }
  yt_pre /= n_pre;
  yc_pre /= n_pre;
  yt_post /= n_post;
  yc_post /= n_post;
  CHECK(m.alpha == doctest::Approx(yc_pre).epsilon(1e-12));
  CHECK(m.beta == doctest::Approx(yc_post - yc_pre).epsilon(1e-12));
  CHECK(m.delta ==
        doctest::Approx((yt_post - yt_pre) - (yc_post - yc_pre)).epsilon(1e-12));
}

TEST_CASE("permutation_test: comparator statistic matches the hand arithmetic") {
  // pre period: y == x1 exactly, so the pre-fit SC residual is zero there;
  // post residuals are (1, -1, 2) by construction -> 6/sqrt(3)
  PanelSeries p;
  p.t_min = -6;
  p.t_max = 13;
  p.t0 = 10;
  p.carryover = 0;
  int n = p.rows();
  p.y.resize(static_cast<std::size_t>(n));
  p.X.resize(n, 2);
  Rng rng(8);
  for (int t = p.t_min; t <= p.t_max; ++t) {
    int i = p.index_of(t);
    p.X(i, 0) = std::sin(0.5 * t) + 2.0;
    p.X(i, 1) = rng.normal();
    p.y[static_cast<std::size_t>(i)] = p.X(i, 0);
  }
  p.y[static_cast<std::size_t>(p.index_of(11))] += 1.0;
  p.y[static_cast<std::size_t>(p.index_of(12))] += -1.0;
  p.y[static_cast<std::size_t>(p.index_of(13))] += 2.0;

  NullSpec null = NullSpec::constant(NullKind::additive, 0.0, p);
  double stat = comparator_stat_pre_fit(p, ComparatorMethod::sc, null);
  CHECK(stat == doctest::Approx(6.0 / std::sqrt(3.0)).epsilon(1e-4));
}

TEST_CASE("permutation_test: huge effect reaches the minimum achievable p-value") {
  DgpSpec spec;
  spec.id = "dgp1";
  spec.covariates = 5;
  spec.effect = 50.0;
  spec.total = 80;
  spec.treat_time = 60;
  spec.train_len = 20;
  spec.seed = 3;
  SimulatedPanel sim = simulate(spec);
  NullSpec null = NullSpec::constant(NullKind::additive, 0.0, sim.panel);
  PermutationReport r = permutation_test(sim.panel, ComparatorMethod::sc, null);
  CHECK(r.p_value == doctest::Approx(1.0 / r.placements).epsilon(1e-12));
  CHECK(r.reject);
}

TEST_CASE("permutation_test: p-values are uniform on the achievable grid under the null") {
  // iid residual panel: every cyclic placement is exchangeable
  const int seeds = 500;
  std::vector<double> pvals;
  pvals.reserve(seeds);
  for (int s = 0; s < seeds; ++s) {
    Rng rng(9000 + static_cast<std::uint64_t>(s));
    PanelSeries p;
    p.t_min = -19;
    p.t_max = 60;
    p.t0 = 50;
    p.carryover = 0;
    int n = p.rows();
    p.y.resize(static_cast<std::size_t>(n));
    p.X.resize(n, 2);
    for (int i = 0; i < n; ++i) {
      p.y[static_cast<std::size_t>(i)] = rng.normal();
      p.X(i, 0) = rng.normal();
      p.X(i, 1) = rng.normal();
    }
    NullSpec null = NullSpec::constant(NullKind::additive, 0.0, p);
    pvals.push_back(permutation_test(p, ComparatorMethod::did, null).p_value);
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    double emp_hi = static_cast<double>(i + 1) / seeds;
    double emp_lo = static_cast<double>(i) / seeds;
    ks = std::max(ks, std::max(std::abs(emp_hi - pvals[i]), std::abs(pvals[i] - emp_lo)));
  }
  CHECK(ks < 0.1);
}

TEST_CASE("power_study: deterministic smoke run with monotone power") {
  DgpSpec spec;
  spec.id = "dgp1";
  spec.covariates = 5;
  spec.total = 90;
  spec.treat_time = 60;
  spec.train_len = 30;

  PowerConfig config;
  config.learners = {{"sc-constrained", {}, std::nullopt},
                     {"ridge", {{"lambda", 0.1}}, std::nullopt}};
  config.scheme = WeightScheme::exponential(0.0);
  config.replicates = 60;
  config.threads = 2;

  std::vector<double> effects{0.0, 2.0, 8.0};
  PowerCurve a = power_study({spec}, {"synthetic-learner", "sc-perm"}, effects, 60, 19,
                             config);
  PowerCurve b = power_study({spec}, {"synthetic-learner", "sc-perm"}, effects, 60, 19,
                             config);
  REQUIRE(a.cells.size() == 6);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].rejections == b.cells[i].rejections);
    CHECK(a.cells[i].reps == 60);
  }
  // rejection fraction nondecreasing in the effect (0.03 slack)
  for (const std::string& method : {std::string("synthetic-learner"), std::string("sc-perm")}) {
    std::vector<double> frac;
    for (const auto& cell : a.cells)
      if (cell.method == method)
        frac.push_back(static_cast<double>(cell.rejections) / cell.reps);
    REQUIRE(frac.size() == 3);
    CHECK(frac[1] >= frac[0] - 0.03);
    CHECK(frac[2] >= frac[1] - 0.03);
    CHECK(frac[2] > 0.5);  // effect 8 on unit noise must be detected
  }
}

TEST_CASE("oracle methods: zero-effect rejection is near the nominal level") {
  DgpSpec spec;
  spec.id = "dgp1";
  spec.covariates = 4;
  spec.total = 90;
  spec.treat_time = 60;
  spec.train_len = 30;

  PowerConfig config;
  config.learners = {{"ridge", {{"lambda", 0.1}}, std::nullopt}};
  config.scheme = WeightScheme::exponential(0.0);
  config.oracle_sims = 400;
  config.threads = 2;

  PowerCurve curve = power_study({spec}, {"oracle-sc", "oracle-did"}, {0.0, 6.0}, 100, 23,
                                 config);
  for (const auto& cell : curve.cells) {
    double frac = static_cast<double>(cell.rejections) / cell.reps;
    if (cell.effect == 0.0)
      CHECK(frac <= 0.15);  // size near 0.05 up to Monte Carlo noise
    else
      CHECK(frac > 0.5);  // large effects are detected
  }
}
