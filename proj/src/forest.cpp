#include "synlearn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "synlearn/rng.hpp"

namespace synlearn {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

struct NodeWork {
  int node = 0;
  std::vector<int> i_rows;
  std::vector<int> j_rows;
};

double mean_of(const Eigen::VectorXd& y, const std::vector<int>& rows) {
  double s = 0.0;
  for (int r : rows) s += y[r];
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

double sse_of(const Eigen::VectorXd& y, const std::vector<int>& rows) {
  double m = mean_of(y, rows);
  double s = 0.0;
  for (int r : rows) {
    double d = y[r] - m;
    s += d * d;
  }
  return s;
}

struct BestSplit {
  int column = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Variance-reduction split over the I-sample, restricted so each child keeps
// at least min_leaf_j J-sample points.
BestSplit find_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<int>& i_rows, const std::vector<int>& j_rows,
                     const std::vector<int>& columns, int min_leaf_j) {
  BestSplit best;
  const double parent_sse = sse_of(y, i_rows);
  std::vector<std::pair<double, int>> vals;
  for (int col : columns) {
    vals.clear();
    vals.reserve(i_rows.size());
    for (int r : i_rows) vals.emplace_back(X(r, col), r);
    std::sort(vals.begin(), vals.end());
    // prefix sums over sorted I-values
    const int n = static_cast<int>(vals.size());
    double left_sum = 0.0, left_sq = 0.0;
    double total_sum = 0.0, total_sq = 0.0;
    for (const auto& [v, r] : vals) {
      total_sum += y[r];
      total_sq += y[r] * y[r];
    }
    // sorted J-values on this column, for the leaf-size constraint
    std::vector<double> jv;
    jv.reserve(j_rows.size());
    for (int r : j_rows) jv.push_back(X(r, col));
    std::sort(jv.begin(), jv.end());
    for (int i = 0; i < n - 1; ++i) {
      double yv = y[vals[static_cast<std::size_t>(i)].second];
      left_sum += yv;
      left_sq += yv * yv;
      double a = vals[static_cast<std::size_t>(i)].first;
      double b = vals[static_cast<std::size_t>(i + 1)].first;
      if (a == b) continue;
      double thr = 0.5 * (a + b);
      int j_left = static_cast<int>(std::upper_bound(jv.begin(), jv.end(), thr) - jv.begin());
      int j_right = static_cast<int>(jv.size()) - j_left;
      if (j_left < min_leaf_j || j_right < min_leaf_j) continue;
      int nl = i + 1;
      int nr = n - nl;
      double right_sum = total_sum - left_sum;
      double right_sq = total_sq - left_sq;
      double sse_l = left_sq - left_sum * left_sum / static_cast<double>(nl);
      double sse_r = right_sq - right_sum * right_sum / static_cast<double>(nr);
      double gain = parent_sse - sse_l - sse_r;
      if (gain > best.gain + 1e-12) {
        best.column = col;
        best.threshold = thr;
        best.gain = gain;
      }
    }
  }
  return best;
}

}  // namespace

HonestTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::vector<int> i_rows, std::vector<int> j_rows,
                     const ForestParams& params, std::uint64_t tree_seed) {
  HonestTree tree;
  tree.seed = tree_seed;
  tree.i_rows = std::move(i_rows);
  tree.j_rows = std::move(j_rows);
  Rng rng(tree_seed);

  const int ncols = static_cast<int>(X.cols());
  int mtry = params.mtry > 0 ? std::min(params.mtry, ncols)
                             : (ncols + 2) / 3;

  tree.nodes.push_back(TreeNode{});
  std::vector<NodeWork> stack;
  stack.push_back({0, tree.i_rows, tree.j_rows});
  while (!stack.empty()) {
    NodeWork work = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(work.node)];
    node.value = mean_of(y, work.j_rows);
    node.j_count = static_cast<int>(work.j_rows.size());

    bool can_split = static_cast<int>(work.i_rows.size()) >= 2 &&
                     static_cast<int>(work.j_rows.size()) >= 2 * params.min_leaf_j;
    if (!can_split) continue;

    // draw mtry candidate columns without replacement
    std::vector<int> cols(static_cast<std::size_t>(ncols));
    std::iota(cols.begin(), cols.end(), 0);
    for (int i = 0; i < mtry; ++i) {
      int j = i + rng.uniform_int(ncols - i);
      std::swap(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
    }
    cols.resize(static_cast<std::size_t>(mtry));
    std::sort(cols.begin(), cols.end());

    BestSplit split = find_split(X, y, work.i_rows, work.j_rows, cols, params.min_leaf_j);
    if (split.column < 0) continue;

    NodeWork left{static_cast<int>(tree.nodes.size()), {}, {}};
    NodeWork right{static_cast<int>(tree.nodes.size()) + 1, {}, {}};
    for (int r : work.i_rows)
      (X(r, split.column) <= split.threshold ? left.i_rows : right.i_rows).push_back(r);
    for (int r : work.j_rows)
      (X(r, split.column) <= split.threshold ? left.j_rows : right.j_rows).push_back(r);
    if (left.i_rows.empty() || right.i_rows.empty()) continue;

    TreeNode& n2 = tree.nodes[static_cast<std::size_t>(work.node)];
    n2.column = split.column;
    n2.threshold = split.threshold;
    n2.left = left.node;
    n2.right = right.node;
    tree.nodes.push_back(TreeNode{});
    tree.nodes.push_back(TreeNode{});
    // right first so the left subtree is grown (and numbered) first
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return tree;
}

ForestModel fit_forest_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             ForestParams params, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  if (n < 4) fail("honest forest: training block too short");
  const int half = n / 2;
  if (params.block <= 0)
    params.block = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(half))));
  if (params.block > half) fail("honest forest: block too short relative to b");
  if (n < 4 * params.block) fail("honest forest: training block must cover 4 blocks");
  if (params.trees < 1) fail("honest forest: need at least one tree");
  if (params.min_leaf_j < 1) fail("honest forest: leaf size must be >= 1");

  ForestModel model;
  model.params = params;
  model.trees.reserve(static_cast<std::size_t>(params.trees));
  for (int t = 0; t < params.trees; ++t) {
    std::uint64_t tree_seed = mix_seed(seed, static_cast<std::uint64_t>(t));
    Rng sampler(mix_seed(tree_seed, 0x5a3b1eULL));
    // circular block bootstrap inside each half; first half feeds splits (I),
    // second half feeds leaf means (J)
    std::vector<int> i_rows =
        circular_block_positions(half, std::min(params.block, half), half, sampler);
    std::vector<int> j_rows =
        circular_block_positions(n - half, std::min(params.block, n - half), n - half, sampler);
    for (int& r : j_rows) r += half;
    model.trees.push_back(grow_tree(X, y, std::move(i_rows), std::move(j_rows), params,
                                    tree_seed));
  }
  return model;
}

double tree_predict(const HonestTree& tree, const Eigen::RowVectorXd& row) {
  int idx = 0;
  for (;;) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (node.column < 0) return node.value;
    idx = row[node.column] <= node.threshold ? node.left : node.right;
  }
}

double forest_predict(const ForestModel& model, const Eigen::RowVectorXd& row) {
  double s = 0.0;
  for (const auto& tree : model.trees) s += tree_predict(tree, row);
  return s / static_cast<double>(model.trees.size());
}

namespace {

class ForestImpl final : public detail::LearnerImpl {
 public:
  explicit ForestImpl(ForestModel model) : model_(std::move(model)) {}
  double raw_predict(const PredictContext& ctx) const override {
    return forest_predict(model_, ctx.row);
  }
  const ForestModel& model() const { return model_; }

 private:
  ForestModel model_;
};

}  // namespace

FittedLearner fit_honest_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const LearnerSpec& spec, std::uint64_t seed) {
  ForestParams params;
  params.trees = static_cast<int>(spec.param("trees", 200.0));
  params.min_leaf_j = static_cast<int>(spec.param("k", 5.0));
  params.block = static_cast<int>(spec.param("b", 0.0));
  params.mtry = static_cast<int>(spec.param("mtry", 0.0));
  ForestModel model = fit_forest_model(X, y, params, seed);
  double clip = spec.clip.value_or(default_clip(y));
  return FittedLearner("honest-forest", std::make_shared<ForestImpl>(std::move(model)), clip);
}

const ForestModel* forest_model_of(const FittedLearner& learner) {
  auto* impl = dynamic_cast<const ForestImpl*>(learner.impl());
  return impl ? &impl->model() : nullptr;
}

}  // namespace synlearn
