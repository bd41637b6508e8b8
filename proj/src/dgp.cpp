#include "synlearn/dgp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "synlearn/inference.hpp"
#include "synlearn/parallel.hpp"
#include "synlearn/rng.hpp"

namespace synlearn::dgp {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Cholesky factor of Sigma_{ij} = 0.5^|i-j|, cached per dimension.
const Eigen::MatrixXd& corr_chol(int J) {
  static std::mutex mu;
  static std::unordered_map<int, Eigen::MatrixXd> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(J);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd sigma(J, J);
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) sigma(i, j) = std::pow(0.5, std::abs(i - j));
  Eigen::MatrixXd L = sigma.llt().matrixL();
  return cache.emplace(J, std::move(L)).first->second;
}

std::vector<double> ar1_path(int n, double rho, double sigma, Rng& rng, bool degenerate) {
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (degenerate) return out;
  double stat_sd = sigma / std::sqrt(std::max(1e-12, 1.0 - rho * rho));
  double prev = stat_sd * rng.normal();
  for (int t = 0; t < n; ++t) {
    prev = rho * prev + sigma * rng.normal();
    out[static_cast<std::size_t>(t)] = prev;
  }
  return out;
}

}  // namespace

NoiseSpec NoiseSpec::ar1(double rho, double sigma) {
  NoiseSpec s;
  s.kind = Kind::ar1;
  s.rho = rho;
  s.sigma = sigma;
  return s;
}

NoiseSpec NoiseSpec::arma11(double rho, double theta, double sigma) {
  NoiseSpec s;
  s.kind = Kind::arma11;
  s.rho = rho;
  s.theta = theta;
  s.sigma = sigma;
  return s;
}

NoiseSpec NoiseSpec::ararch(double rho, double omega, double gamma) {
  NoiseSpec s;
  s.kind = Kind::ararch;
  s.rho = rho;
  s.omega = omega;
  s.gamma = gamma;
  return s;
}

std::vector<double> gen_noise(const NoiseSpec& spec, int length, std::uint64_t seed) {
  if (length < 1) fail("gen_noise: length must be >= 1");
  if (std::abs(spec.rho) >= 1.0) fail("gen_noise: |rho| must be < 1");
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(length));
  switch (spec.kind) {
    case NoiseSpec::Kind::ar1: {
      if (!(spec.sigma > 0.0)) fail("gen_noise: sigma must be positive");
      double stat_sd = spec.sigma / std::sqrt(1.0 - spec.rho * spec.rho);
      double prev = stat_sd * rng.normal();
      for (int t = 0; t < length; ++t) {
        prev = spec.rho * prev + spec.sigma * rng.normal();
        out[static_cast<std::size_t>(t)] = prev;
      }
      break;
    }
    case NoiseSpec::Kind::arma11: {
      if (!(spec.sigma > 0.0)) fail("gen_noise: sigma must be positive");
      const int burn = 100;
      double eps = 0.0, v_prev = 0.0;
      for (int t = 0; t < burn + length; ++t) {
        double v = spec.sigma * rng.normal();
        eps = spec.rho * eps + spec.theta * v_prev + v;
        v_prev = v;
        if (t >= burn) out[static_cast<std::size_t>(t - burn)] = eps;
      }
      break;
    }
    case NoiseSpec::Kind::ararch: {
      if (!(spec.omega > 0.0)) fail("gen_noise: omega must be positive");
      if (spec.gamma < 0.0 || spec.gamma >= 1.0) fail("gen_noise: gamma must be in [0,1)");
      const int burn = 200;
      double eps = 0.0, v_prev = 0.0;
      for (int t = 0; t < burn + length; ++t) {
        double h = spec.omega + spec.gamma * v_prev * v_prev;
        double v = std::sqrt(h) * rng.normal();
        eps = spec.rho * eps + v;
        v_prev = v;
        if (t >= burn) out[static_cast<std::size_t>(t - burn)] = eps;
      }
      break;
    }
  }
  return out;
}

Eigen::VectorXd dgp_beta(int J) {
  Eigen::VectorXd beta(J);
  double s = 0.0;
  for (int j = 0; j < J - 1; ++j) {
    beta[j] = 1.0 / std::pow(2.0 + j, 2.0);  // beta_j = 1/(1+j)^2, j = 1..J-1
    s += beta[j];
  }
  beta[J - 1] = 1.0 - s;  // last weight absorbs the remainder
  return beta;
}

void DgpSpec::validate() const {
  static const char* kIds[] = {"dgp1", "dgp2a", "dgp2b", "dgp2c", "dgp3",
                               "dgp4a", "dgp4b", "dgp4c", "dgp5"};
  bool known = false;
  for (const char* k : kIds) known = known || id == k;
  if (!known) fail("unknown dgp id: " + id);
  if (covariates < 1) fail("dgp: covariates must be >= 1");
  if (id == "dgp3" && covariates < 10) fail("dgp3 needs at least 10 covariates");
  if (!(1 <= train_len && train_len < treat_time && treat_time < total))
    fail("dgp: need 1 <= train_len < treat_time < total");
  if (carryover < 0 || treat_time + carryover >= total)
    fail("dgp: carryover window must end before the series does");
  if (effect_kind != "constant" && effect_kind != "linear" && effect_kind != "quadratic")
    fail("dgp: effect_kind must be constant, linear or quadratic");
  if (!(noise_scale > 0.0)) fail("dgp: noise_scale must be positive");
}

SimulatedPanel simulate(const DgpSpec& spec) {
  spec.validate();
  const int n = spec.total;
  const int J = spec.covariates;
  const bool deg = spec.degenerate;

  const bool factor_design = spec.id == "dgp1" || spec.id == "dgp5";

  Eigen::MatrixXd X(n, J);
  std::vector<double> theta_t, factor_t;
  if (factor_design) {
    Rng rng_theta(mix_seed(spec.seed, 11));
    Rng rng_factor(mix_seed(spec.seed, 12));
    Rng rng_u(mix_seed(spec.seed, 13));
    theta_t.resize(static_cast<std::size_t>(n), 0.0);
    factor_t.resize(static_cast<std::size_t>(n), 0.0);
    if (!deg)
      for (int t = 0; t < n; ++t) {
        theta_t[static_cast<std::size_t>(t)] = rng_theta.normal();
        factor_t[static_cast<std::size_t>(t)] = rng_factor.normal();
      }
    std::vector<double> u = ar1_path(n, 0.6, std::sqrt(1.0 - 0.36), rng_u, deg);
    for (int t = 0; t < n; ++t)
      for (int j = 0; j < J; ++j) {
        double mu = (2.0 + j) / (1.0 + j);  // (1+j)/j with 1-based j
        double lam = mu;
        X(t, j) = mu + theta_t[static_cast<std::size_t>(t)] +
                  lam * factor_t[static_cast<std::size_t>(t)] + u[static_cast<std::size_t>(t)];
      }
  } else {
    // h_t iid N(0, Sigma) plus a scalar AR(1) broadcast across columns
    Rng rng_h(mix_seed(spec.seed, 21));
    Rng rng_u(mix_seed(spec.seed, 22));
    const Eigen::MatrixXd& L = corr_chol(J);
    std::vector<double> u = ar1_path(n, 0.8, std::sqrt(1.0 - 0.64), rng_u, deg);
    Eigen::VectorXd z(J);
    for (int t = 0; t < n; ++t) {
      if (deg) {
        X.row(t).setConstant(0.0);
      } else {
        for (int j = 0; j < J; ++j) z[j] = rng_h.normal();
        X.row(t) = (L * z).transpose();
        X.row(t).array() += u[static_cast<std::size_t>(t)];
      }
    }
  }

  // outcome noise
  std::uint64_t eps_seed = mix_seed(spec.seed, 31);
  std::vector<double> eps(static_cast<std::size_t>(n), 0.0);
  const double ns = spec.noise_scale;
  if (!deg) {
    if (spec.id == "dgp1" || spec.id == "dgp5")
      eps = gen_noise(NoiseSpec::ar1(0.6, ns * std::sqrt(1.0 - 0.36)), n, eps_seed);
    else if (spec.id == "dgp2a" || spec.id == "dgp3" || spec.id == "dgp4a")
      eps = gen_noise(NoiseSpec::arma11(0.5, 0.3, ns * 0.1), n, eps_seed);
    else if (spec.id == "dgp2b" || spec.id == "dgp4b")
      eps = gen_noise(NoiseSpec::arma11(0.5, 0.3, ns * 1.0), n, eps_seed);
    else  // dgp2c, dgp4c: omega scales with the squared innovation scale
      eps = gen_noise(NoiseSpec::ararch(0.8, 0.001 * ns * ns, 0.99), n, eps_seed);
  }

  Eigen::VectorXd beta = dgp_beta(J);
  std::vector<double> y0(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    double xb = X.row(t).dot(beta);
    double e = eps[static_cast<std::size_t>(t)];
    double v = 0.0;
    if (spec.id == "dgp1") {
      v = xb + e;
    } else if (spec.id == "dgp2a" || spec.id == "dgp2b" || spec.id == "dgp2c") {
      double z = xb + e;
      v = std::exp(z) / (1.0 + std::exp(z));
    } else if (spec.id == "dgp3") {
      double s10 = X.row(t).head(10).sum();
      v = s10 * s10 + e;
    } else if (spec.id == "dgp4a" || spec.id == "dgp4b" || spec.id == "dgp4c") {
      v = std::cos(xb + e);
    } else {  // dgp5
      v = 0.5 + theta_t[static_cast<std::size_t>(t)] +
          0.5 * factor_t[static_cast<std::size_t>(t)] + e;
    }
    y0[static_cast<std::size_t>(t)] = v;
  }

  SimulatedPanel out;
  out.factor = factor_t;
  out.y_control = y0;
  out.tau.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> y = y0;
  for (int s = spec.treat_time + 1; s <= n; ++s) {
    double a = spec.effect;
    if (spec.effect_kind == "linear")
      a = X.row(s - 1).sum();
    else if (spec.effect_kind == "quadratic")
      a = X.row(s - 1).array().square().sum();
    y[static_cast<std::size_t>(s - 1)] += a;
    out.tau[static_cast<std::size_t>(s - 1)] = a;
  }

  PanelSeries panel;
  panel.t_min = 2 - spec.train_len;  // s = 1 maps to t = 2 - train_len
  panel.t_max = spec.total - spec.train_len + 1;
  panel.t0 = spec.treat_time - spec.train_len + 1;
  panel.carryover = spec.carryover;
  panel.y = std::move(y);
  panel.X = std::move(X);
  panel.validate();
  out.panel = std::move(panel);
  return out;
}

SimulatedPanel simulate_carryover(const DgpSpec& base, const std::vector<double>& alphas) {
  if (alphas.empty()) fail("simulate_carryover: needs at least one alpha");
  const int m = static_cast<int>(alphas.size()) - 1;
  if (m < 1) fail("simulate_carryover: m must be >= 1 (pass m+1 alphas)");
  DgpSpec spec = base;
  spec.effect = 0.0;
  spec.effect_kind = "constant";
  spec.carryover = m;
  SimulatedPanel sim = simulate(spec);
  // Y_t = Y_t(0) + sum_{s=0..m} alpha_{s+1} D_{t-s}
  for (int s = spec.treat_time + 1; s <= spec.total; ++s) {
    double add = 0.0;
    for (int lag = 0; lag <= m; ++lag)
      if (s - lag > spec.treat_time) add += alphas[static_cast<std::size_t>(lag)];
    sim.panel.y[static_cast<std::size_t>(s - 1)] =
        sim.y_control[static_cast<std::size_t>(s - 1)] + add;
    sim.tau[static_cast<std::size_t>(s - 1)] = add;
  }
  return sim;
}

double naive_carryover_bias(const std::vector<double>& alphas, int n_post) {
  const int m = static_cast<int>(alphas.size()) - 1;
  double s = 0.0;
  for (int lag = 1; lag <= m; ++lag) s += static_cast<double>(lag) * alphas[static_cast<std::size_t>(lag)];
  return -s / static_cast<double>(n_post);
}

DiDModel did_fit(const PanelSeries& panel, const std::vector<double>& outcome) {
  double yt_pre = 0.0, yt_post = 0.0, yc_pre = 0.0, yc_post = 0.0;
  int n_pre = 0, n_post = 0;
  for (int t = panel.t_min; t <= panel.t_max; ++t) {
    int i = panel.index_of(t);
    double v = outcome[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) continue;  // carryover window dropped
    double c = panel.X.row(i).mean();
    if (t <= panel.t0) {
      yt_pre += v;
      yc_pre += c;
      ++n_pre;
    } else {
      yt_post += v;
      yc_post += c;
      ++n_post;
    }
  }
  if (n_pre == 0 || n_post == 0) fail("did_fit: both periods must be nonempty");
  yt_pre /= n_pre;
  yc_pre /= n_pre;
  yt_post /= n_post;
  yc_post /= n_post;
  DiDModel model;
  model.alpha = yc_pre;
  model.beta = yc_post - yc_pre;
  model.delta = (yt_post - yt_pre) - (yc_post - yc_pre);
  return model;
}

namespace {

// residuals of the comparator fit over the eligible (non-carryover) timeline
std::vector<double> comparator_residuals(const PanelSeries& panel, ComparatorMethod method,
                                         const NulledSeries& yo, bool pre_only) {
  std::vector<int> times;
  for (int t = panel.t_min; t <= panel.t_max; ++t)
    if (!yo.excluded(t)) times.push_back(t);

  std::vector<double> fitted(times.size(), 0.0);
  if (method == ComparatorMethod::sc || method == ComparatorMethod::ls) {
    std::vector<int> fit_times;
    for (int t : times)
      if (!pre_only || t <= panel.t0) fit_times.push_back(t);
    Eigen::MatrixXd X(static_cast<int>(fit_times.size()), panel.cols());
    Eigen::VectorXd y(static_cast<int>(fit_times.size()));
    for (int i = 0; i < static_cast<int>(fit_times.size()); ++i) {
      X.row(i) = panel.row_at(fit_times[static_cast<std::size_t>(i)]);
      y[i] = yo.at(fit_times[static_cast<std::size_t>(i)]);
    }
    if (method == ComparatorMethod::sc) {
      SCWeights w = solve_sc_weights(X, y, /*with_intercept=*/true);
      for (std::size_t i = 0; i < times.size(); ++i)
        fitted[i] = panel.row_at(times[i]).dot(w.beta) + w.intercept;
    } else {
      // OLS with an unpenalized intercept via centering
      Eigen::RowVectorXd xm = X.colwise().mean();
      double ym = y.mean();
      Eigen::MatrixXd Xc = X.rowwise() - xm;
      Eigen::MatrixXd gram = Xc.transpose() * Xc;
      gram.diagonal().array() += 1e-10;
      Eigen::VectorXd beta = gram.ldlt().solve(Xc.transpose() * (y.array() - ym).matrix());
      double b0 = ym - xm * beta;
      for (std::size_t i = 0; i < times.size(); ++i)
        fitted[i] = panel.row_at(times[i]).dot(beta) + b0;
    }
  } else {
    std::vector<double> yv(panel.y.size());
    for (int t = panel.t_min; t <= panel.t_max; ++t)
      yv[static_cast<std::size_t>(panel.index_of(t))] =
          yo.excluded(t) ? std::numeric_limits<double>::quiet_NaN() : yo.at(t);
    DiDModel model = did_fit(panel, yv);
    if (!pre_only) {
      for (std::size_t i = 0; i < times.size(); ++i)
        fitted[i] = model.predict(times[i], panel.t0);
    } else {
      // oracle variant: parallel-trends counterfactual for the treated unit,
      // Yhat_t = treated pre mean + control trend (no treatment coefficient)
      double yt_pre = 0.0;
      int n_pre = 0;
      for (int t = panel.t_min; t <= panel.t0; ++t) {
        yt_pre += yo.at(t);
        ++n_pre;
      }
      yt_pre /= static_cast<double>(n_pre);
      for (std::size_t i = 0; i < times.size(); ++i)
        fitted[i] = yt_pre + (times[i] > panel.t0 ? model.beta : 0.0);
    }
  }
  std::vector<double> resid(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) resid[i] = yo.at(times[i]) - fitted[i];
  return resid;
}

double window_stat(const std::vector<double>& resid, int start, int len) {
  const int n = static_cast<int>(resid.size());
  double s = 0.0;
  for (int i = 0; i < len; ++i) {
    double r = resid[static_cast<std::size_t>((start + i) % n)];
    s += r * r;
  }
  return s / std::sqrt(static_cast<double>(len));
}

}  // namespace

PermutationReport permutation_test(const PanelSeries& panel, ComparatorMethod method,
                                   const NullSpec& null, double alpha) {
  panel.validate();
  const NulledSeries yo = apply_null(panel, null);
  std::vector<double> resid = comparator_residuals(panel, method, yo, /*pre_only=*/false);
  const int L = static_cast<int>(resid.size());
  const int n_post = panel.eval_len();
  if (L <= n_post) fail("permutation_test: series too short for the post window");

  const int observed_start = L - n_post;  // eval block sits at the end
  const double observed = window_stat(resid, observed_start, n_post);
  int ge = 0;
  for (int k = 0; k < L; ++k)
    if (window_stat(resid, k, n_post) >= observed) ++ge;

  PermutationReport report;
  report.statistic = observed;
  report.placements = L;
  report.p_value = static_cast<double>(ge) / static_cast<double>(L);
  report.reject = report.p_value <= alpha;
  return report;
}

double comparator_stat_pre_fit(const PanelSeries& panel, ComparatorMethod method,
                               const NullSpec& null) {
  const NulledSeries yo = apply_null(panel, null);
  std::vector<double> resid = comparator_residuals(panel, method, yo, /*pre_only=*/true);
  const int n_post = panel.eval_len();
  std::vector<double> tail(resid.end() - n_post, resid.end());
  double s = 0.0;
  for (double r : tail) s += r * r;
  return s / std::sqrt(static_cast<double>(n_post));
}

namespace {

double oracle_critical_value(const DgpSpec& base, const std::string& method,
                             const PowerConfig& config, std::uint64_t seed) {
  std::vector<double> stats(static_cast<std::size_t>(config.oracle_sims));
  parallel_for(config.oracle_sims, config.threads, [&](int i) {
    DgpSpec spec = base;
    spec.effect = 0.0;
    spec.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    SimulatedPanel sim = simulate(spec);
    NullSpec null = NullSpec::constant(NullKind::additive, 0.0, sim.panel);
    if (method == "oracle-sc") {
      stats[static_cast<std::size_t>(i)] =
          comparator_stat_pre_fit(sim.panel, ComparatorMethod::sc, null);
    } else if (method == "oracle-did") {
      stats[static_cast<std::size_t>(i)] =
          comparator_stat_pre_fit(sim.panel, ComparatorMethod::did, null);
    } else {  // oracle-synthetic-learner: the observed statistic, no bootstrap
      auto pool = fit_pool(config.learners, sim.panel, mix_seed(spec.seed, 77));
      const SplitPlan splits = make_splits(sim.panel);
      const NulledSeries yo = apply_null(sim.panel, null);
      std::vector<int> wt, et;
      for (int t = splits.weight.lo; t <= splits.weight.hi; ++t) wt.push_back(t);
      for (int t = splits.eval.lo; t <= splits.eval.hi; ++t) et.push_back(t);
      Eigen::MatrixXd wp = prediction_matrix(pool, sim.panel, wt);
      Eigen::VectorXd wy(static_cast<int>(wt.size()));
      for (int k = 0; k < wy.size(); ++k) wy[k] = yo.at(wt[static_cast<std::size_t>(k)]);
      WeightScheme scheme = config.scheme;
      if (scheme.kind == WeightScheme::Kind::exponential && scheme.eta == 0.0)
        scheme.eta = default_eta_testing(sim.panel.t_max);
      Eigen::VectorXd w = final_weights(wy, wp, scheme);
      Eigen::MatrixXd ep = prediction_matrix(pool, sim.panel, et);
      std::vector<double> ey(et.size()), eh(et.size());
      for (std::size_t k = 0; k < et.size(); ++k) {
        ey[k] = yo.at(et[k]);
        eh[k] = w.dot(ep.row(static_cast<int>(k)).transpose());
      }
      stats[static_cast<std::size_t>(i)] = stat_sharp(ey, eh);
    }
  });
  return replicate_quantile(std::move(stats), config.level);
}

}  // namespace

PowerCurve power_study(const std::vector<DgpSpec>& dgps,
                       const std::vector<std::string>& methods,
                       const std::vector<double>& effects, int reps, std::uint64_t seed,
                       const PowerConfig& config) {
  if (reps < 50) fail("power_study: need at least 50 replications");
  PowerCurve curve;
  for (std::size_t d = 0; d < dgps.size(); ++d) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const std::string& method = methods[m];
      double oracle_cv = 0.0;
      if (method.rfind("oracle-", 0) == 0)
        oracle_cv = oracle_critical_value(dgps[d], method, config,
                                          mix_seed(seed, hash_string(dgps[d].id.c_str()),
                                                   hash_string(method.c_str())));
      for (std::size_t a = 0; a < effects.size(); ++a) {
        std::vector<int> rejected(static_cast<std::size_t>(reps), 0);
        parallel_for(reps, config.threads, [&](int r) {
          DgpSpec spec = dgps[d];
          spec.effect = effects[a];
          spec.seed = mix_seed(seed, hash_string(spec.id.c_str()),
                               hash_string(method.c_str()),
                               mix_seed(static_cast<std::uint64_t>(a),
                                        static_cast<std::uint64_t>(r)));
          SimulatedPanel sim = simulate(spec);
          NullSpec null = NullSpec::constant(NullKind::additive, 0.0, sim.panel);
          bool reject = false;
          if (method == "synthetic-learner") {
            auto pool = fit_pool(config.learners, sim.panel, mix_seed(spec.seed, 91));
            TestSpec ts;
            ts.statistic = StatKind::sharp;
            ts.null = null;
            ts.alpha = config.level;
            ts.replicates = config.replicates;
            ts.block = config.block;
            ts.scheme = config.scheme;
            ts.seed = mix_seed(spec.seed, 92);
            ts.threads = 1;
            ts.keep_replicates = false;
            reject = bootstrap_test(sim.panel, pool, ts).reject;
          } else if (method == "sc-perm") {
            reject = permutation_test(sim.panel, ComparatorMethod::sc, null,
                                      config.level).reject;
          } else if (method == "did-perm") {
            reject = permutation_test(sim.panel, ComparatorMethod::did, null,
                                      config.level).reject;
          } else if (method == "oracle-sc") {
            reject = comparator_stat_pre_fit(sim.panel, ComparatorMethod::sc, null) > oracle_cv;
          } else if (method == "oracle-did") {
            reject = comparator_stat_pre_fit(sim.panel, ComparatorMethod::did, null) > oracle_cv;
          } else if (method == "oracle-synthetic-learner") {
            auto pool = fit_pool(config.learners, sim.panel, mix_seed(spec.seed, 77));
            const SplitPlan splits = make_splits(sim.panel);
            const NulledSeries yo = apply_null(sim.panel, null);
            std::vector<int> wt, et;
            for (int t = splits.weight.lo; t <= splits.weight.hi; ++t) wt.push_back(t);
            for (int t = splits.eval.lo; t <= splits.eval.hi; ++t) et.push_back(t);
            Eigen::MatrixXd wp = prediction_matrix(pool, sim.panel, wt);
            Eigen::VectorXd wy(static_cast<int>(wt.size()));
            for (int k = 0; k < wy.size(); ++k) wy[k] = yo.at(wt[static_cast<std::size_t>(k)]);
            WeightScheme scheme = config.scheme;
            if (scheme.kind == WeightScheme::Kind::exponential && scheme.eta == 0.0)
              scheme.eta = default_eta_testing(sim.panel.t_max);
            Eigen::VectorXd w = final_weights(wy, wp, scheme);
            Eigen::MatrixXd ep = prediction_matrix(pool, sim.panel, et);
            std::vector<double> ey(et.size()), eh(et.size());
            for (std::size_t k = 0; k < et.size(); ++k) {
              ey[k] = yo.at(et[k]);
              eh[k] = w.dot(ep.row(static_cast<int>(k)).transpose());
            }
            reject = stat_sharp(ey, eh) > oracle_cv;
          } else {
            fail("unknown power-study method: " + method);
          }
          rejected[static_cast<std::size_t>(r)] = reject ? 1 : 0;
        });
        PowerCell cell;
        cell.dgp = dgps[d].id;
        cell.method = method;
        cell.effect = effects[a];
        cell.reps = reps;
        cell.level = config.level;
        for (int v : rejected) cell.rejections += v;
        curve.cells.push_back(std::move(cell));
      }
    }
  }
  return curve;
}

}  // namespace synlearn::dgp
