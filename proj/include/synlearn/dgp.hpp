#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "synlearn/aggregation.hpp"
#include "synlearn/learners.hpp"
#include "synlearn/panel.hpp"

// Simulated data-generating processes, the SC / difference-in-differences
// comparators with permutation inference, and the power-study harness.

namespace synlearn::dgp {

struct NoiseSpec {
  enum class Kind { ar1, arma11, ararch };
  Kind kind = Kind::ar1;
  double rho = 0.6;
  double theta = 0.0;   // arma11 MA coefficient
  double sigma = 1.0;   // innovation standard deviation (ar1 / arma11)
  double omega = 0.001; // ararch level
  double gamma = 0.99;  // ararch load on the lagged squared innovation

  static NoiseSpec ar1(double rho, double sigma);
  static NoiseSpec arma11(double rho, double theta, double sigma);
  static NoiseSpec ararch(double rho, double omega, double gamma);
};

// ar1 starts at its stationary variance; arma11 burns in 100 steps from
// zero; ararch burns in 200 steps from zero.
std::vector<double> gen_noise(const NoiseSpec& spec, int length, std::uint64_t seed);

// Experiment-convention parameters: the series is indexed 1..total with a
// training prefix of train_len observations; simulate() relabels times so
// the training block ends at 1 (the panel convention).
struct DgpSpec {
  std::string id = "dgp1";  // dgp1 dgp2a dgp2b dgp2c dgp3 dgp4a dgp4b dgp4c dgp5
  int covariates = 50;
  double effect = 0.0;                 // constant a_t
  std::string effect_kind = "constant";  // constant | linear | quadratic
  int total = 300;       // T
  int treat_time = 250;  // T0 in 1..total
  int train_len = 125;   // training prefix length
  int carryover = 0;
  bool degenerate = false;  // all random components zeroed (oracle arithmetic)
  double noise_scale = 1.0;  // multiplies the outcome-noise innovation scale
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedPanel {
  PanelSeries panel;
  std::vector<double> y_control;  // Y_t(0) on the same timeline
  std::vector<double> tau;        // realized effect added at each time (0 pre)
  std::vector<double> factor;     // latent F_t (factor designs only)
};

SimulatedPanel simulate(const DgpSpec& spec);

// Carryover variant of the base process: Y_t = Y_t(0) + sum_s alpha_{s+1} D_{t-s}.
SimulatedPanel simulate_carryover(const DgpSpec& base, const std::vector<double>& alphas);

// Expected naive pre/post mean-gap bias on the noiseless carryover process:
// naive - sum(alpha) = -(1/n_post) * sum_{s=1..m} s * alpha_{s+1}.
double naive_carryover_bias(const std::vector<double>& alphas, int n_post);

// Two-period two-group difference-in-differences comparator:
// Yhat_t = alpha + (beta + delta) 1{t > t0}.
struct DiDModel {
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double predict(int t, int t0) const { return alpha + (t > t0 ? beta + delta : 0.0); }
};

DiDModel did_fit(const PanelSeries& panel, const std::vector<double>& outcome);

// ls is ordinary least squares with an intercept (the single-learner
// comparator of the permutation-vs-bootstrap study)
enum class ComparatorMethod { sc, did, ls };

struct PermutationReport {
  double statistic = 0.0;  // at the true post-window placement
  double p_value = 0.0;    // rank of that placement among all cyclic shifts
  bool reject = false;
  int placements = 0;
};

// Fits the comparator on the full sample of Y^o, then ranks the post-window
// placement of the squared-residual statistic over all cyclic shifts.
PermutationReport permutation_test(const PanelSeries& panel, ComparatorMethod method,
                                   const NullSpec& null, double alpha = 0.05);

// Comparator statistic on a fitted residual sequence: full-sample fit for
// permutation inference, pre-only fit for the oracle study.
double comparator_stat_pre_fit(const PanelSeries& panel, ComparatorMethod method,
                               const NullSpec& null);

struct PowerCell {
  std::string dgp;
  std::string method;
  double effect = 0.0;
  int rejections = 0;
  int reps = 0;
  double level = 0.05;
};

struct PowerCurve {
  std::vector<PowerCell> cells;
};

struct PowerConfig {
  std::vector<LearnerSpec> learners;   // synthetic-learner pool
  WeightScheme scheme;
  int replicates = 200;     // bootstrap B
  double level = 0.05;
  int block = 0;
  int oracle_sims = 2000;   // null simulations for oracle critical values
  int threads = 0;
};

// methods: synthetic-learner | sc-perm | did-perm | oracle-synthetic-learner
// | oracle-sc | oracle-did
PowerCurve power_study(const std::vector<DgpSpec>& dgps,
                       const std::vector<std::string>& methods,
                       const std::vector<double>& effects, int reps, std::uint64_t seed,
                       const PowerConfig& config);

Eigen::VectorXd dgp_beta(int J);

}  // namespace synlearn::dgp
