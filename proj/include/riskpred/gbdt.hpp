#ifndef RISKPRED_GBDT_HPP
#define RISKPRED_GBDT_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskpred/dataset.hpp"
#include "riskpred/eval.hpp"

namespace riskpred::gbdt {

// One node of a regression tree. Leaves have feature = -1. `value` holds the
// Newton leaf value for leaves and the cover-weighted average of the subtree
// leaf values for internal nodes (the quantity path attribution needs).
// `cover` is the weighted hessian mass of the training rows routed here.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  double cover = 0.0;
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  // Index of the leaf x is routed to (x < threshold goes left).
  std::int32_t route(std::span<const double> x) const;
  double leaf_value(std::span<const double> x) const {
    return nodes[route(x)].value;
  }
};

enum class MetricKind { kLogLoss, kAucpr, kMacroF1, kProfit };

struct EvalMetric {
  MetricKind kind = MetricKind::kLogLoss;
  eval::ProfitMatrix profit;  // used by kProfit
  double threshold = 0.5;     // used by kMacroF1 and kProfit
  bool higher_is_better() const { return kind != MetricKind::kLogLoss; }
};

struct GbdtConfig {
  int n_rounds = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  double l2_leaf_reg = 1.0;       // lambda in the leaf value -G/(H+lambda)
  double min_child_hessian = 1.0;
  std::optional<int> early_stopping_rounds;
  EvalMetric eval_metric;
  std::uint64_t seed = 0;         // reserved; exact greedy training is deterministic
  int n_threads = 1;

  void validate() const;
};

// Per-feature decomposition of one prediction in log-odds units.
// bias + sum(values) equals the margin up to float accumulation.
struct ContributionVector {
  double bias = 0.0;
  std::vector<double> values;
  double total() const;
};

// Additive ensemble of regression trees over logistic loss. Immutable after
// fit; concurrent prediction is safe.
class GbdtModel {
 public:
  GbdtModel(std::vector<Tree> trees, double base_margin, double learning_rate,
            std::size_t n_features, std::optional<int> best_iteration);

  const std::vector<Tree>& trees() const { return trees_; }
  double base_margin() const { return base_margin_; }
  double learning_rate() const { return learning_rate_; }
  std::size_t n_features() const { return n_features_; }
  std::optional<int> best_iteration() const { return best_iteration_; }

  // base_margin + learning_rate * sum of routed leaf values over the first
  // n_trees trees (default: best_iteration if set, else all).
  double predict_margin(std::span<const double> x,
                        std::optional<int> n_trees = std::nullopt) const;
  double predict_proba(std::span<const double> x,
                       std::optional<int> n_trees = std::nullopt) const;
  std::vector<double> predict_margin(const Dataset& d,
                                     std::optional<int> n_trees = std::nullopt) const;
  std::vector<double> predict_proba(const Dataset& d,
                                    std::optional<int> n_trees = std::nullopt) const;

  // Credits the change of node value across each split on x's path to that
  // split's feature; root values accumulate into the bias.
  ContributionVector path_contributions(std::span<const double> x,
                                        std::optional<int> n_trees = std::nullopt) const;

  nlohmann::json to_json() const;
  static GbdtModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static GbdtModel load(const std::string& path);

 private:
  int resolve_n_trees(std::optional<int> n_trees) const;

  std::vector<Tree> trees_;
  double base_margin_;
  double learning_rate_;
  std::size_t n_features_;
  std::optional<int> best_iteration_;
};

// Second-order boosting: each round fits one tree to the weighted gradient
// g_i = w_i (p_i - y_i) and hessian h_i = w_i p_i (1 - p_i) with exact greedy
// splits; leaf value = -G/(H+lambda). With a validation set and
// early_stopping_rounds, stops when the eval metric fails to improve and
// records best_iteration. Deterministic; independent of n_threads.
GbdtModel fit(const Dataset& train, const Dataset* valid, const GbdtConfig& cfg);

inline GbdtModel fit(const Dataset& train, const GbdtConfig& cfg) {
  return fit(train, nullptr, cfg);
}

double sigmoid(double margin);

}  // namespace riskpred::gbdt

#endif  // RISKPRED_GBDT_HPP
