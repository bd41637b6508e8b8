#include "synlearn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "synlearn/parallel.hpp"

namespace synlearn {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Weights from a gathered set of rows of the (y_o, prediction) arrays.
// positions index into the eligible-ordered arrays.
Eigen::VectorXd weights_on_rows(const WeightScheme& scheme, const Eigen::VectorXd& yo,
                                const Eigen::MatrixXd& preds, const std::vector<int>& rows) {
  const int T = static_cast<int>(rows.size());
  const int p = static_cast<int>(preds.cols());
  Eigen::VectorXd yb(T);
  Eigen::MatrixXd pb(T, p);
  for (int i = 0; i < T; ++i) {
    yb[i] = yo[rows[static_cast<std::size_t>(i)]];
    pb.row(i) = preds.row(rows[static_cast<std::size_t>(i)]);
  }
  return final_weights(yb, pb, scheme);
}

double statistic_on(StatKind kind, const std::vector<double>& yo,
                    const std::vector<double>& yhat) {
  return kind == StatKind::sharp ? stat_sharp(yo, yhat) : stat_average(yo, yhat);
}

}  // namespace

double stat_sharp(const std::vector<double>& y_o, const std::vector<double>& yhat) {
  if (y_o.empty()) fail("stat_sharp: empty eval block");
  if (y_o.size() != yhat.size()) fail("stat_sharp: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y_o.size(); ++i) {
    double d = y_o[i] - yhat[i];
    s += d * d;
  }
  return s / std::sqrt(static_cast<double>(y_o.size()));
}

double stat_average(const std::vector<double>& y_o, const std::vector<double>& yhat) {
  if (y_o.empty()) fail("stat_average: empty eval block");
  if (y_o.size() != yhat.size()) fail("stat_average: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y_o.size(); ++i) s += y_o[i] - yhat[i];
  return s * s / static_cast<double>(y_o.size());
}

std::vector<int> circular_block_indices(const std::vector<int>& eligible, int b,
                                        int out_len, Rng& rng) {
  const int n = static_cast<int>(eligible.size());
  if (n == 0) fail("circular_block_indices: empty eligible set");
  if (b < 1 || b > n) fail("circular_block_indices: block size out of range");
  if (out_len < 0) fail("circular_block_indices: negative output length");
  std::vector<int> pos = circular_block_positions(n, b, out_len, rng);
  std::vector<int> out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i)
    out[i] = eligible[static_cast<std::size_t>(pos[i])];
  return out;
}

int default_block(int t_max) {
  return std::max(2, static_cast<int>(std::lround(std::cbrt(static_cast<double>(t_max)))));
}

double replicate_quantile(std::vector<double> stats, double alpha) {
  if (stats.empty()) fail("replicate_quantile: no replicates");
  std::sort(stats.begin(), stats.end());
  int B = static_cast<int>(stats.size());
  int k = static_cast<int>(std::ceil((1.0 - alpha) * static_cast<double>(B)));
  k = std::min(std::max(k, 1), B);
  return stats[static_cast<std::size_t>(k - 1)];
}

TestReport bootstrap_test(const PanelSeries& panel,
                          const std::vector<FittedLearner>& learners, const TestSpec& spec) {
  panel.validate();
  if (learners.empty()) fail("bootstrap_test: empty learner pool");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) fail("bootstrap_test: alpha must be in (0,1)");
  if (spec.replicates < 50) fail("bootstrap_test: need at least 50 replicates");

  const SplitPlan splits = make_splits(panel);
  const NulledSeries yo = apply_null(panel, spec.null);

  // eligible times {1..t_max} minus the carryover window, ascending
  std::vector<int> eligible;
  eligible.reserve(static_cast<std::size_t>(panel.t_max));
  for (int t = 1; t <= panel.t_max; ++t)
    if (!yo.excluded(t)) eligible.push_back(t);
  const int n_elig = static_cast<int>(eligible.size());
  const int t0 = panel.t0;
  const int t_m = panel.eval_len();
  if (n_elig != t0 + t_m) fail("bootstrap_test: unexpected eligible count");

  int block = spec.block > 0 ? spec.block : default_block(panel.t_max);
  if (block < 2 || block > n_elig) fail("bootstrap_test: block size out of range");

  WeightScheme scheme = spec.scheme;
  if (scheme.kind == WeightScheme::Kind::exponential && scheme.eta == 0.0)
    scheme.eta = default_eta_testing(panel.t_max);

  // learners were fit once; predictions travel with their time index
  const Eigen::MatrixXd preds = prediction_matrix(learners, panel, eligible);
  Eigen::VectorXd yo_elig(n_elig);
  for (int i = 0; i < n_elig; ++i) yo_elig[i] = yo.at(eligible[static_cast<std::size_t>(i)]);

  // observed statistic: weights on the real weight block, ensemble on eval
  std::vector<int> weight_rows;
  for (int i = 0; i < n_elig; ++i)
    if (splits.weight.contains(eligible[static_cast<std::size_t>(i)])) weight_rows.push_back(i);
  Eigen::VectorXd w_obs = weights_on_rows(scheme, yo_elig, preds, weight_rows);

  std::vector<double> eval_y, eval_hat;
  for (int i = 0; i < n_elig; ++i) {
    int t = eligible[static_cast<std::size_t>(i)];
    if (splits.eval.contains(t)) {
      eval_y.push_back(yo_elig[i]);
      eval_hat.push_back(w_obs.dot(preds.row(i).transpose()));
    }
  }
  const double observed = statistic_on(spec.statistic, eval_y, eval_hat);

  // replicates: pseudo weight block = positions 1..t0, pseudo post = rest
  std::vector<double> rep_stats(static_cast<std::size_t>(spec.replicates));
  parallel_for(spec.replicates, spec.threads, [&](int r) {
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(r)));
    std::vector<int> rows = circular_block_positions(n_elig, block, n_elig, rng);
    std::vector<int> wrows(rows.begin(), rows.begin() + t0);
    Eigen::VectorXd w = weights_on_rows(scheme, yo_elig, preds, wrows);
    std::vector<double> py(static_cast<std::size_t>(t_m));
    std::vector<double> ph(static_cast<std::size_t>(t_m));
    for (int i = 0; i < t_m; ++i) {
      int row = rows[static_cast<std::size_t>(t0 + i)];
      py[static_cast<std::size_t>(i)] = yo_elig[row];
      ph[static_cast<std::size_t>(i)] = w.dot(preds.row(row).transpose());
    }
    rep_stats[static_cast<std::size_t>(r)] = statistic_on(spec.statistic, py, ph);
  });

  TestReport report;
  report.statistic = observed;
  report.quantile = replicate_quantile(rep_stats, spec.alpha);
  int ge = 0;
  for (double s : rep_stats)
    if (s >= observed) ++ge;
  report.p_value = static_cast<double>(ge + 1) / static_cast<double>(spec.replicates + 1);
  report.reject = observed > report.quantile;
  report.alpha = spec.alpha;
  report.replicates = spec.replicates;
  report.block = block;
  if (spec.keep_replicates) report.replicate_stats = std::move(rep_stats);
  return report;
}

std::map<std::string, TestReport> placebo_suite(
    const std::map<std::string, PanelSeries>& panels,
    const std::vector<LearnerSpec>& learner_specs, const TestSpec& spec) {
  if (panels.empty()) fail("placebo_suite: no panels");
  const PanelSeries& first = panels.begin()->second;
  for (const auto& [unit, p] : panels) {
    if (p.t_min != first.t_min || p.t_max != first.t_max || p.t0 != first.t0 ||
        p.carryover != first.carryover)
      fail("placebo_suite: panel timelines do not match (unit " + unit + ")");
  }
  std::map<std::string, TestReport> out;
  for (const auto& [unit, p] : panels) {
    auto pool = fit_pool(learner_specs, p, mix_seed(spec.seed, hash_string(unit.c_str())));
    out.emplace(unit, bootstrap_test(p, pool, spec));
  }
  return out;
}

}  // namespace synlearn
