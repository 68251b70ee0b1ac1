#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "superlearn/learners/model.hpp"
#include "superlearn/rng.hpp"

namespace superlearn {

/// Growth controls for a CART-style regression tree.
struct TreeControl {
  std::size_t max_depth = 30;
  std::size_t min_split = 20;  // smallest node that may be split
  std::size_t min_leaf = 7;    // smallest child a split may create
  double cp = 0.01;            // required SSE reduction, as a fraction of the root SSE
  std::size_t mtry = 0;        // features tried per split; 0 means all
};

/// Flattened binary tree; node 0 is the root. A node is a leaf when
/// feature < 0. Rows with x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  double predict_row(const Matrix& x, Index row) const {
    int k = 0;
    while (nodes_[static_cast<std::size_t>(k)].feature >= 0) {
      const Node& node = nodes_[static_cast<std::size_t>(k)];
      k = x(row, node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(k)].value;
  }

  Vector predict(const Matrix& x) const {
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x, i);
    return out;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t leaves() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
  }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  Json to_json() const {
    Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
         value = Json::array();
    for (const Node& n : nodes_) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    return Json{{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
  }

  static RegressionTree from_json(const Json& j) {
    RegressionTree t;
    const std::size_t count = j.at("feature").size();
    t.nodes_.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      t.nodes_[k] = Node{j["feature"][k].get<int>(), j["threshold"][k].get<double>(), j["left"][k].get<int>(),
                         j["right"][k].get<int>(), j["value"][k].get<double>()};
    }
    return t;
  }

  /**
   * Greedy variance-reduction growth on the rows listed in `rows` (which may
   * repeat, as in a bootstrap sample). Splits are scanned feature by feature
   * in ascending index and threshold order and only a strictly larger gain
   * replaces the incumbent. `gen` is used only when control.mtry < p.
   */
  static RegressionTree grow(const Matrix& x, const Vector& y, std::vector<Index> rows,
                             const TreeControl& control, RandomGenerator* gen = nullptr) {
    RegressionTree t;
    Builder b{x, y, control, gen, t.nodes_, 0.0};
    b.root_sse = sse_of(y, rows);
    b.build(rows, 0);
    return t;
  }

 private:
  static double sse_of(const Vector& y, const std::vector<Index>& rows) {
    double mean = 0.0;
    for (Index r : rows) mean += y(r);
    mean /= static_cast<double>(rows.size());
    double ss = 0.0;
    for (Index r : rows) ss += (y(r) - mean) * (y(r) - mean);
    return ss;
  }

  struct Builder {
    const Matrix& x;
    const Vector& y;
    const TreeControl& control;
    RandomGenerator* gen;
    std::vector<Node>& nodes;
    double root_sse;

    std::vector<Index> candidate_features() {
      const Index p = x.cols();
      std::vector<Index> features(static_cast<std::size_t>(p));
      std::iota(features.begin(), features.end(), Index{0});
      const auto mtry = static_cast<std::size_t>(control.mtry);
      if (mtry == 0 || mtry >= features.size() || gen == nullptr) return features;
      for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(gen->below(features.size() - i));
        std::swap(features[i], features[j]);
      }
      features.resize(mtry);
      std::sort(features.begin(), features.end());
      return features;
    }

    int build(std::vector<Index>& rows, std::size_t depth) {
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      const double n = static_cast<double>(rows.size());
      double mean = 0.0;
      for (Index r : rows) mean += y(r);
      mean /= n;
      nodes[static_cast<std::size_t>(id)].value = mean;

      double node_sse = 0.0;
      for (Index r : rows) node_sse += (y(r) - mean) * (y(r) - mean);
      if (depth >= control.max_depth || rows.size() < control.min_split || rows.size() < 2 ||
          node_sse <= 1e-14 * root_sse || node_sse == 0.0) {
        return id;
      }

      const std::size_t min_leaf = std::max<std::size_t>(1, control.min_leaf);
      double best_gain = 0.0;
      Index best_feature = -1;
      double best_threshold = 0.0;
      std::vector<Index> order(rows);
      for (Index f : candidate_features()) {
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a, f) < x(b, f); });
        // Gains from sums of node-centred responses.
        double total = 0.0;
        for (Index r : order) total += y(r) - mean;
        double left_sum = 0.0;
        for (std::size_t k = 1; k < order.size(); ++k) {
          left_sum += y(order[k - 1]) - mean;
          const double lo = x(order[k - 1], f);
          const double hi = x(order[k], f);
          if (!(lo < hi)) continue;
          if (k < min_leaf || order.size() - k < min_leaf) continue;
          const double nl = static_cast<double>(k);
          const double nr = n - nl;
          const double right_sum = total - left_sum;
          const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / n;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = f;
            double mid = 0.5 * (lo + hi);
            if (!(mid < hi)) mid = lo;
            best_threshold = mid;
          }
        }
      }
      if (best_feature < 0 || best_gain < control.cp * root_sse || best_gain <= 1e-12 * root_sse) {
        return id;
      }

      std::vector<Index> left_rows, right_rows;
      for (Index r : rows) (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
      rows.clear();
      rows.shrink_to_fit();
      const int left = build(left_rows, depth + 1);
      const int right = build(right_rows, depth + 1);
      Node& node = nodes[static_cast<std::size_t>(id)];
      node.feature = static_cast<int>(best_feature);
      node.threshold = best_threshold;
      node.left = left;
      node.right = right;
      return id;
    }
  };

  std::vector<Node> nodes_;
};

/// Tree ensembles. average: prediction = mean over trees (single tree,
/// bagging, random forest). Otherwise prediction = base + rate * sum (boosting).
class TreeEnsembleModel final : public Model {
 public:
  TreeEnsembleModel(std::vector<RegressionTree> trees, bool average, double base, double rate)
      : trees_(std::move(trees)), average_(average), base_(base), rate_(rate) {}

  Vector predict(const Matrix& x) const override {
    Vector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      if (average_) {
        double sum = 0.0;
        for (const auto& t : trees_) sum += t.predict_row(x, i);
        out(i) = sum / static_cast<double>(trees_.size());
      } else {
        double value = base_;
        for (const auto& t : trees_) value += rate_ * t.predict_row(x, i);
        out(i) = value;
      }
    }
    return out;
  }

  Json params_to_json() const override {
    Json trees = Json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return Json{{"average", average_}, {"base", base_}, {"rate", rate_}, {"trees", trees}};
  }

  static std::shared_ptr<TreeEnsembleModel> from_json(const Json& j) {
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(RegressionTree::from_json(t));
    return std::make_shared<TreeEnsembleModel>(std::move(trees), j.at("average").get<bool>(),
                                               j.at("base").get<double>(), j.at("rate").get<double>());
  }

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
  bool average_;
  double base_;
  double rate_;
};

inline std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

inline std::shared_ptr<TreeEnsembleModel> fit_tree(const Matrix& x, const Vector& y, const TreeControl& control) {
  std::vector<RegressionTree> trees;
  trees.push_back(RegressionTree::grow(x, y, all_rows(x.rows()), control));
  return std::make_shared<TreeEnsembleModel>(std::move(trees), true, 0.0, 1.0);
}

/// Bagging and random forests: tree t is grown on a bootstrap sample of size
/// n (or on all rows when bootstrap is off) drawn from its own child stream.
inline std::shared_ptr<TreeEnsembleModel> fit_forest(const Matrix& x, const Vector& y, const TreeControl& control,
                                                     std::size_t n_trees, bool bootstrap, const RngStream& rng) {
  std::vector<RegressionTree> trees;
  trees.reserve(n_trees);
  const Index n = x.rows();
  for (std::size_t t = 0; t < n_trees; ++t) {
    RandomGenerator gen(rng.child(StreamTag::learner, t));
    std::vector<Index> rows;
    if (bootstrap) {
      rows.resize(static_cast<std::size_t>(n));
      for (auto& r : rows) r = static_cast<Index>(gen.below(static_cast<std::uint64_t>(n)));
      std::sort(rows.begin(), rows.end());
    } else {
      rows = all_rows(n);
    }
    trees.push_back(RegressionTree::grow(x, y, std::move(rows), control, &gen));
  }
  return std::make_shared<TreeEnsembleModel>(std::move(trees), true, 0.0, 1.0);
}

/// Gradient boosting for squared error: start at the mean, then fit each
/// tree to the current residuals and add it scaled by the learning rate.
inline std::shared_ptr<TreeEnsembleModel> fit_boosting(const Matrix& x, const Vector& y, const TreeControl& control,
                                                       std::size_t n_rounds, double learning_rate) {
  const double base = y.mean();
  Vector fitted = Vector::Constant(y.size(), base);
  std::vector<RegressionTree> trees;
  trees.reserve(n_rounds);
  const std::vector<Index> rows = all_rows(x.rows());
  for (std::size_t round = 0; round < n_rounds; ++round) {
    const Vector residual = y - fitted;
    RegressionTree tree = RegressionTree::grow(x, residual, rows, control);
    fitted += learning_rate * tree.predict(x);
    trees.push_back(std::move(tree));
  }
  return std::make_shared<TreeEnsembleModel>(std::move(trees), false, base, learning_rate);
}

}  // namespace superlearn
