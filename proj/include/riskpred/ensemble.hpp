#ifndef RISKPRED_ENSEMBLE_HPP
#define RISKPRED_ENSEMBLE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "riskpred/dataset.hpp"

namespace riskpred::ensemble {

// Depth-limited binary classification tree with probability leaves (weighted
// positive fraction), exact greedy weighted-gini splits.
struct WeakTreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double prob = 0.0;
  bool is_leaf() const { return feature < 0; }
};

class WeakTree {
 public:
  explicit WeakTree(std::vector<WeakTreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict_proba(std::span<const double> x) const;
  const std::vector<WeakTreeNode>& nodes() const { return nodes_; }

  // features: row-major n x d. Rows with zero weight are ignored.
  static WeakTree fit(std::span<const double> features, std::size_t n_features,
                      std::span<const int> labels,
                      std::span<const double> weights, int max_depth);

  nlohmann::json to_json() const;
  static WeakTree from_json(const nlohmann::json& j);

 private:
  std::vector<WeakTreeNode> nodes_;
};

struct EnsembleConfig {
  // <= 0 picks the family default: 50 members for bagging, 20 for boosting.
  int n_members = 0;
  int weak_max_depth = 3;
  // Desired minority:majority ratio after resampling (1.0 = balanced).
  double target_ratio = 1.0;
  int smote_k = 5;
  std::uint64_t seed = 0;
  int n_threads = 1;

  void validate() const;
  int resolved_members(bool boosting) const;
};

// Uniform average of member probabilities.
class BaggedEnsemble {
 public:
  BaggedEnsemble(std::vector<WeakTree> members, std::string kind);

  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Dataset& d) const;
  const std::vector<WeakTree>& members() const { return members_; }
  const std::string& kind() const { return kind_; }

  nlohmann::json to_json() const;
  static BaggedEnsemble from_json(const nlohmann::json& j);

 private:
  std::vector<WeakTree> members_;
  std::string kind_;
};

// AdaBoost.M2-style combination: score(x) = sum_t log(1/beta_t) h_t(x) /
// sum_t log(1/beta_t), a confidence for the positive class in [0,1].
class BoostedEnsemble {
 public:
  BoostedEnsemble(std::vector<WeakTree> members, std::vector<double> betas,
                  std::string kind);

  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Dataset& d) const;
  const std::vector<WeakTree>& members() const { return members_; }
  const std::vector<double>& betas() const { return betas_; }
  const std::string& kind() const { return kind_; }

  nlohmann::json to_json() const;
  static BoostedEnsemble from_json(const nlohmann::json& j);

 private:
  std::vector<WeakTree> members_;
  std::vector<double> betas_;
  std::string kind_;
};

// Per-round boosting state, recorded when a trace pointer is passed to the
// boosting fits. distributions[0] is the initial D, distributions[t] the
// distribution after round t's update.
struct BoostTrace {
  std::vector<std::vector<double>> distributions;
  std::vector<double> epsilons;
  std::vector<double> betas;
  int resets = 0;
};

// Composition of one bagging member's training bag, for inspection.
struct BagInfo {
  std::vector<std::size_t> minority_rows;  // training-set row indices
  std::vector<std::size_t> majority_rows;
  std::size_t n_smote = 0;
  std::size_t n_oversampled = 0;
  std::vector<double> synthetic_features;  // row-major, n_smote x n_features
};
using BagTrace = std::vector<BagInfo>;

// Binary AdaBoost.M2 pseudo-loss: eps = sum_i D(i) (1 - h[y_i] + h[1-y_i])/2
// with h[1] = p_i and h[0] = 1 - p_i.
double pseudo_loss(std::span<const double> dist, std::span<const double> proba,
                   std::span<const int> labels);

// Multiplies D(i) by beta^{(1 + h[y_i] - h[1-y_i]) / 2} and renormalizes.
std::vector<double> boost_reweight(std::span<const double> dist,
                                   std::span<const double> proba,
                                   std::span<const int> labels, double beta);

// Each bag: all minority rows plus a fresh uniform undersample of the
// majority down to target_ratio.
BaggedEnsemble fit_underbagging(const Dataset& train, const EnsembleConfig& cfg,
                                BagTrace* trace = nullptr);

// Each bag: a bootstrap of the majority plus the minority brought up to
// target_ratio; member i of B creates fraction i/B of the new minority rows
// with SMOTE and the remainder by random oversampling.
BaggedEnsemble fit_smotebagging(const Dataset& train, const EnsembleConfig& cfg,
                                BagTrace* trace = nullptr);

// AdaBoost.M2 over weak trees trained on undersampled bags carrying the
// current distribution weights; pseudo-loss and distribution updates always
// use the full training set.
BoostedEnsemble fit_rusboost(const Dataset& train, const EnsembleConfig& cfg,
                             BoostTrace* trace = nullptr);

// AdaBoost.M2 where each round's weak learner additionally sees a fresh SMOTE
// batch whose total weight equals the current minority mass under D; the
// synthetic rows are discarded before the pseudo-loss step.
BoostedEnsemble fit_smoteboost(const Dataset& train, const EnsembleConfig& cfg,
                               BoostTrace* trace = nullptr);

}  // namespace riskpred::ensemble

#endif  // RISKPRED_ENSEMBLE_HPP
