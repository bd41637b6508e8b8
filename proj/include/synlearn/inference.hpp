#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "synlearn/aggregation.hpp"
#include "synlearn/learners.hpp"
#include "synlearn/panel.hpp"
#include "synlearn/rng.hpp"

// Hypothesis testing: sharp / average statistics, circular block bootstrap
// critical values and the placebo orchestration. Learners are fit once on the
// training block; replicates resample (Y^o_t, predictions at t) jointly and
// only recompute the expert weights.

namespace synlearn {

enum class StatKind { sharp, average };

struct TestSpec {
  StatKind statistic = StatKind::sharp;
  NullSpec null;
  double alpha = 0.05;
  int replicates = 200;   // B >= 50
  int block = 0;          // b; 0 -> max(2, round(t_max^(1/3)))
  WeightScheme scheme;    // eta = 0 -> 1/t_max
  std::uint64_t seed = 1;
  int threads = 0;
  bool keep_replicates = true;
};

struct TestReport {
  double statistic = 0.0;
  double quantile = 0.0;   // empirical (1-alpha) quantile of the replicates
  double p_value = 0.0;    // (#{T_b >= T_obs} + 1) / (B + 1)
  bool reject = false;     // statistic > quantile
  double alpha = 0.0;
  int replicates = 0;
  int block = 0;
  std::vector<double> replicate_stats;  // kept for diagnostics when requested
};

// T_S = T_m^{-1/2} sum (y_o - yhat)^2 over the eval block.
double stat_sharp(const std::vector<double>& y_o, const std::vector<double>& yhat);

// T_A = (sum (y_o - yhat))^2 / T_m.
double stat_average(const std::vector<double>& y_o, const std::vector<double>& yhat);

// Concatenation of ceil(out_len/b) circular blocks of b consecutive eligible
// entries, each started uniformly, truncated to out_len.
std::vector<int> circular_block_indices(const std::vector<int>& eligible, int b,
                                        int out_len, Rng& rng);

int default_block(int t_max);

// Empirical quantile used for the critical value: the ceil((1-alpha)*B)-th
// order statistic (nonincreasing in alpha).
double replicate_quantile(std::vector<double> stats, double alpha);

TestReport bootstrap_test(const PanelSeries& panel,
                          const std::vector<FittedLearner>& learners, const TestSpec& spec);

// One bootstrap test per unit; every panel must share the same timeline.
std::map<std::string, TestReport> placebo_suite(
    const std::map<std::string, PanelSeries>& panels,
    const std::vector<LearnerSpec>& learner_specs, const TestSpec& spec);

}  // namespace synlearn
