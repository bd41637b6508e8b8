#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "synlearn/learners.hpp"

// Honest random forest for time-dependent data. Each tree splits the
// training block into two halves by time, draws a circular block bootstrap
// sample I from the first half and J from the second, places splits using
// I-samples only and estimates leaf responses using J-samples only.

namespace synlearn {

struct ForestParams {
  int trees = 200;
  int min_leaf_j = 5;    // k: minimum J-sample count per leaf
  int block = 0;         // b: 0 -> ceil((train/2)^(1/3))
  int mtry = 0;          // 0 -> ceil(J/3)
};

struct TreeNode {
  int column = -1;        // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;     // leaf mean of J-sample targets
  int j_count = 0;
};

struct HonestTree {
  std::uint64_t seed = 0;        // RNG stream used to grow this tree
  std::vector<int> i_rows;       // bootstrap multiset from the first half
  std::vector<int> j_rows;       // bootstrap multiset from the second half
  std::vector<TreeNode> nodes;   // nodes[0] is the root
};

struct ForestModel {
  ForestParams params;
  std::vector<HonestTree> trees;
};

// Grows the split structure and leaf values for fixed (I, J) samples; the
// rng stream drives only the per-node mtry column draws. Called by
// fit_forest_model and by tests that verify honest reproducibility.
HonestTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::vector<int> i_rows, std::vector<int> j_rows,
                     const ForestParams& params, std::uint64_t tree_seed);

ForestModel fit_forest_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             ForestParams params, std::uint64_t seed);

double tree_predict(const HonestTree& tree, const Eigen::RowVectorXd& row);
double forest_predict(const ForestModel& model, const Eigen::RowVectorXd& row);

// Learner-pool wrapper. params: trees, k (leaf size), b (block), mtry.
FittedLearner fit_honest_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const LearnerSpec& spec, std::uint64_t seed);

const ForestModel* forest_model_of(const FittedLearner& learner);

}  // namespace synlearn
