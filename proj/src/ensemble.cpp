#include "riskpred/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "riskpred/resample.hpp"
#include "riskpred/rng.hpp"

namespace riskpred::ensemble {

using nlohmann::json;

namespace {

constexpr double kMinSplitGain = 1e-12;
constexpr double kBetaFloor = 1e-10;
constexpr int kMaxConsecutiveFailures = 5;

// Weighted gini cost of a node: W * 2 p (1-p) = 2 wp wn / W.
inline double gini_cost(double w_pos, double w_neg) {
  const double w = w_pos + w_neg;
  return w > 0.0 ? 2.0 * w_pos * w_neg / w : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Weak learner

namespace {

struct WeakBuilder {
  std::span<const double> features;
  std::size_t n_features;
  std::span<const int> labels;
  std::span<const double> weights;
  int max_depth;
  std::vector<WeakTreeNode> nodes;

  double value(std::size_t row, std::size_t f) const {
    return features[row * n_features + f];
  }

  std::int32_t build(std::vector<std::size_t>& rows, int depth) {
    double w_pos = 0.0, w_neg = 0.0;
    for (std::size_t i : rows) (labels[i] == 1 ? w_pos : w_neg) += weights[i];

    const auto id = static_cast<std::int32_t>(nodes.size());
    nodes.push_back(WeakTreeNode{});
    nodes[id].prob = w_pos / (w_pos + w_neg);
    if (depth >= max_depth || w_pos == 0.0 || w_neg == 0.0) return id;

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    const double parent_cost = gini_cost(w_pos, w_neg);

    std::vector<std::size_t> sorted(rows);
    for (std::size_t f = 0; f < n_features; ++f) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = value(a, f), vb = value(b, f);
        if (va != vb) return va < vb;
        return a < b;
      });
      double left_pos = 0.0, left_neg = 0.0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        const std::size_t i = sorted[k];
        (labels[i] == 1 ? left_pos : left_neg) += weights[i];
        const double v = value(i, f);
        const double v_next = value(sorted[k + 1], f);
        if (v_next <= v) continue;
        const double wl = left_pos + left_neg;
        const double wr = (w_pos - left_pos) + (w_neg - left_neg);
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = parent_cost - gini_cost(left_pos, left_neg) -
                            gini_cost(w_pos - left_pos, w_neg - left_neg);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = std::midpoint(v, v_next);
        }
      }
    }
    if (best_feature < 0 || best_gain <= kMinSplitGain) return id;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t i : rows)
      (value(i, static_cast<std::size_t>(best_feature)) < best_threshold ? left_rows
                                                                         : right_rows)
          .push_back(i);
    if (left_rows.empty() || right_rows.empty()) return id;

    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const std::int32_t left = build(left_rows, depth + 1);
    nodes[id].left = left;
    const std::int32_t right = build(right_rows, depth + 1);
    nodes[id].right = right;
    return id;
  }
};

}  // namespace

WeakTree WeakTree::fit(std::span<const double> features, std::size_t n_features,
                       std::span<const int> labels, std::span<const double> weights,
                       int max_depth) {
  if (n_features == 0) throw std::invalid_argument("WeakTree: n_features must be positive");
  const std::size_t n = labels.size();
  if (features.size() != n * n_features || weights.size() != n)
    throw std::invalid_argument("WeakTree: input length mismatch");
  if (max_depth < 1) throw std::invalid_argument("WeakTree: max_depth must be >= 1");

  std::vector<std::size_t> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (weights[i] > 0.0) rows.push_back(i);
  if (rows.empty()) throw std::invalid_argument("WeakTree: no rows with positive weight");

  WeakBuilder b{features, n_features, labels, weights, max_depth, {}};
  b.build(rows, 0);
  return WeakTree(std::move(b.nodes));
}

double WeakTree::predict_proba(std::span<const double> x) const {
  std::int32_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const WeakTreeNode& n = nodes_[id];
    id = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return nodes_[id].prob;
}

json WeakTree::to_json() const {
  json nodes = json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"prob", n.prob}});
  }
  return {{"nodes", std::move(nodes)}};
}

WeakTree WeakTree::from_json(const json& j) {
  std::vector<WeakTreeNode> nodes;
  for (const auto& nj : j.at("nodes")) {
    WeakTreeNode n;
    n.feature = nj.at("feature").get<int>();
    n.threshold = nj.at("threshold").get<double>();
    n.left = nj.at("left").get<std::int32_t>();
    n.right = nj.at("right").get<std::int32_t>();
    n.prob = nj.at("prob").get<double>();
    nodes.push_back(n);
  }
  if (nodes.empty()) throw std::runtime_error("WeakTree: empty node list");
  return WeakTree(std::move(nodes));
}

// ---------------------------------------------------------------------------
// Config and combination rules

void EnsembleConfig::validate() const {
  if (weak_max_depth < 1)
    throw std::invalid_argument("EnsembleConfig: weak_max_depth must be >= 1");
  if (!(target_ratio > 0.0))
    throw std::invalid_argument("EnsembleConfig: target_ratio must be positive");
  if (smote_k < 1) throw std::invalid_argument("EnsembleConfig: smote_k must be >= 1");
  if (n_threads < 1) throw std::invalid_argument("EnsembleConfig: n_threads must be >= 1");
}

int EnsembleConfig::resolved_members(bool boosting) const {
  const int m = n_members > 0 ? n_members : (boosting ? 20 : 50);
  if (m < 1) throw std::invalid_argument("EnsembleConfig: n_members must be >= 1");
  return m;
}

BaggedEnsemble::BaggedEnsemble(std::vector<WeakTree> members, std::string kind)
    : members_(std::move(members)), kind_(std::move(kind)) {
  if (members_.empty()) throw std::invalid_argument("BaggedEnsemble: no members");
}

double BaggedEnsemble::predict_proba(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& m : members_) sum += m.predict_proba(x);
  return sum / static_cast<double>(members_.size());
}

std::vector<double> BaggedEnsemble::predict_proba(const Dataset& d) const {
  std::vector<double> out(d.n_samples());
  for (std::size_t i = 0; i < d.n_samples(); ++i) out[i] = predict_proba(d.row(i));
  return out;
}

BoostedEnsemble::BoostedEnsemble(std::vector<WeakTree> members,
                                 std::vector<double> betas, std::string kind)
    : members_(std::move(members)), betas_(std::move(betas)), kind_(std::move(kind)) {
  if (members_.empty() || members_.size() != betas_.size())
    throw std::invalid_argument("BoostedEnsemble: members/betas mismatch");
  for (double b : betas_)
    if (!(b > 0.0 && b < 1.0))
      throw std::invalid_argument("BoostedEnsemble: betas must lie in (0,1)");
}

double BoostedEnsemble::predict_proba(std::span<const double> x) const {
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < members_.size(); ++t) {
    const double wt = std::log(1.0 / betas_[t]);
    num += wt * members_[t].predict_proba(x);
    den += wt;
  }
  return num / den;
}

std::vector<double> BoostedEnsemble::predict_proba(const Dataset& d) const {
  std::vector<double> out(d.n_samples());
  for (std::size_t i = 0; i < d.n_samples(); ++i) out[i] = predict_proba(d.row(i));
  return out;
}

double pseudo_loss(std::span<const double> dist, std::span<const double> proba,
                   std::span<const int> labels) {
  if (dist.size() != proba.size() || dist.size() != labels.size())
    throw std::invalid_argument("pseudo_loss: length mismatch");
  double eps = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double h_true = labels[i] == 1 ? proba[i] : 1.0 - proba[i];
    const double h_wrong = 1.0 - h_true;
    eps += dist[i] * (1.0 - h_true + h_wrong) / 2.0;
  }
  return eps;
}

std::vector<double> boost_reweight(std::span<const double> dist,
                                   std::span<const double> proba,
                                   std::span<const int> labels, double beta) {
  if (dist.size() != proba.size() || dist.size() != labels.size())
    throw std::invalid_argument("boost_reweight: length mismatch");
  std::vector<double> next(dist.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double h_true = labels[i] == 1 ? proba[i] : 1.0 - proba[i];
    const double h_wrong = 1.0 - h_true;
    next[i] = dist[i] * std::pow(beta, 0.5 * (1.0 + h_true - h_wrong));
    total += next[i];
  }
  if (total <= 0.0) throw std::runtime_error("boost_reweight: distribution collapsed");
  for (auto& v : next) v /= total;
  return next;
}

// ---------------------------------------------------------------------------
// Fitting helpers

namespace {

struct ClassSplit {
  std::vector<std::size_t> minority;
  std::vector<std::size_t> majority;
  int minority_label;
};

ClassSplit split_by_class(const Dataset& train) {
  std::vector<std::size_t> ones, zeros;
  for (std::size_t i = 0; i < train.n_samples(); ++i)
    (train.label(i) == 1 ? ones : zeros).push_back(i);
  if (ones.empty() || zeros.empty())
    throw std::invalid_argument("ensemble fit: both classes must be present");
  if (ones.size() <= zeros.size()) return {std::move(ones), std::move(zeros), 1};
  return {std::move(zeros), std::move(ones), 0};
}

// Flat training bag assembled row by row.
struct Bag {
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> weights;
  std::size_t n_features = 0;

  void add_row(const Dataset& d, std::size_t i, double weight) {
    const auto r = d.row(i);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(d.label(i));
    weights.push_back(weight);
  }
  void add_raw(std::span<const double> row, int label, double weight) {
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(label);
    weights.push_back(weight);
  }
  WeakTree fit(int max_depth) const {
    return WeakTree::fit(features, n_features, labels, weights, max_depth);
  }
};

void run_members(int n_members, int n_threads, const std::function<void(int)>& fit_one) {
  if (n_threads <= 1) {
    for (int b = 0; b < n_members; ++b) fit_one(b);
    return;
  }
  std::vector<std::thread> workers;
  const int k = std::min(n_threads, n_members);
  workers.reserve(k);
  for (int t = 0; t < k; ++t)
    workers.emplace_back([&, t] {
      for (int b = t; b < n_members; b += k) fit_one(b);
    });
  for (auto& w : workers) w.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// Bagging family

BaggedEnsemble fit_underbagging(const Dataset& train, const EnsembleConfig& cfg,
                                BagTrace* trace) {
  cfg.validate();
  const ClassSplit cls = split_by_class(train);
  const int n_members = cfg.resolved_members(false);
  const auto n_keep = std::min<std::size_t>(
      cls.majority.size(),
      static_cast<std::size_t>(std::llround(
          static_cast<double>(cls.minority.size()) / cfg.target_ratio)));

  if (trace) trace->assign(n_members, BagInfo{});
  std::vector<WeakTree> members(n_members, WeakTree({WeakTreeNode{}}));
  run_members(n_members, cfg.n_threads, [&](int b) {
    const std::uint64_t seed = derive_seed(cfg.seed, "underbagging", b);
    const auto kept =
        resample::detail::undersample_indices(cls.majority.size(), n_keep, seed);
    Bag bag;
    bag.n_features = train.n_features();
    for (std::size_t i : cls.minority) bag.add_row(train, i, train.weight(i));
    for (std::size_t k : kept) bag.add_row(train, cls.majority[k], train.weight(cls.majority[k]));
    members[b] = bag.fit(cfg.weak_max_depth);
    if (trace) {
      (*trace)[b].minority_rows = cls.minority;
      for (std::size_t k : kept) (*trace)[b].majority_rows.push_back(cls.majority[k]);
    }
  });
  return BaggedEnsemble(std::move(members), "underbagging");
}

BaggedEnsemble fit_smotebagging(const Dataset& train, const EnsembleConfig& cfg,
                                BagTrace* trace) {
  cfg.validate();
  const ClassSplit cls = split_by_class(train);
  const int n_members = cfg.resolved_members(false);
  const std::size_t n_min = cls.minority.size();
  const std::size_t n_maj = cls.majority.size();
  const Dataset minority_ds = train.select(cls.minority);

  const auto n_min_target = static_cast<std::size_t>(
      std::llround(cfg.target_ratio * static_cast<double>(n_maj)));
  const std::size_t needed = n_min_target > n_min ? n_min_target - n_min : 0;

  if (trace) trace->assign(n_members, BagInfo{});
  std::vector<WeakTree> members(n_members, WeakTree({WeakTreeNode{}}));
  run_members(n_members, cfg.n_threads, [&](int b) {
    const int member_no = b + 1;  // 1-based; member B is 100% SMOTE
    const double smote_fraction =
        static_cast<double>(member_no) / static_cast<double>(n_members);
    const auto n_smote = static_cast<std::size_t>(
        std::llround(smote_fraction * static_cast<double>(needed)));
    const std::size_t n_over = needed - n_smote;

    Rng boot(derive_seed(cfg.seed, "smotebagging-boot", b));
    std::vector<std::size_t> maj_boot(n_maj);
    for (auto& k : maj_boot) k = boot.bounded(n_maj);

    const auto over_idx = resample::detail::oversample_indices(
        n_min, n_min + n_over, derive_seed(cfg.seed, "smotebagging-over", b));
    resample::SmoteConfig sc;
    sc.k_neighbors = cfg.smote_k;
    sc.n_synthetic = n_smote;
    sc.seed = derive_seed(cfg.seed, "smotebagging-smote", b);
    const Dataset synth = resample::smote(minority_ds, sc);

    Bag bag;
    bag.n_features = train.n_features();
    for (std::size_t k : maj_boot)
      bag.add_row(train, cls.majority[k], train.weight(cls.majority[k]));
    for (std::size_t k : over_idx)
      bag.add_row(train, cls.minority[k], train.weight(cls.minority[k]));
    for (std::size_t s = 0; s < synth.n_samples(); ++s)
      bag.add_raw(synth.row(s), cls.minority_label, 1.0);
    members[b] = bag.fit(cfg.weak_max_depth);

    if (trace) {
      BagInfo& info = (*trace)[b];
      for (std::size_t k : maj_boot) info.majority_rows.push_back(cls.majority[k]);
      for (std::size_t k : over_idx) info.minority_rows.push_back(cls.minority[k]);
      info.n_smote = n_smote;
      info.n_oversampled = n_over;
      info.synthetic_features = synth.features();
    }
  });
  return BaggedEnsemble(std::move(members), "smotebagging");
}

// ---------------------------------------------------------------------------
// Boosting family

namespace {

struct BoostLoop {
  const Dataset& train;
  const EnsembleConfig& cfg;
  BoostTrace* trace;
  const char* kind;

  // Builds the round's weak-learner bag from the current distribution.
  std::function<WeakTree(const std::vector<double>& dist, std::uint64_t round_seed)>
      make_member;

  BoostedEnsemble run() {
    const std::size_t n = train.n_samples();
    const int n_members = cfg.resolved_members(true);

    // Initial distribution proportional to sample weights (uniform for the
    // default all-ones weights).
    std::vector<double> uniform(n);
    {
      const double total = train.total_weight();
      if (total <= 0.0) throw std::invalid_argument("boosting: zero total weight");
      for (std::size_t i = 0; i < n; ++i) uniform[i] = train.weight(i) / total;
    }
    std::vector<double> dist = uniform;
    if (trace) {
      trace->distributions.push_back(dist);
    }

    std::vector<WeakTree> members;
    std::vector<double> betas;
    std::vector<double> proba(n);
    int consecutive_failures = 0;
    int attempt = 0;

    for (int t = 0; t < n_members;) {
      const std::uint64_t round_seed =
          derive_seed(cfg.seed, kind, (static_cast<std::uint64_t>(t) << 16) |
                                          static_cast<std::uint64_t>(attempt));
      WeakTree member = make_member(dist, round_seed);
      for (std::size_t i = 0; i < n; ++i) proba[i] = member.predict_proba(train.row(i));
      const double eps = pseudo_loss(dist, proba, train.labels());

      if (eps >= 0.5) {
        // Degenerate round: drop the member, reset the distribution and retry
        // with a fresh resample.
        ++consecutive_failures;
        ++attempt;
        if (trace) ++trace->resets;
        dist = uniform;
        if (consecutive_failures >= kMaxConsecutiveFailures) break;
        continue;
      }
      consecutive_failures = 0;
      attempt = 0;

      const double beta = eps <= kBetaFloor ? kBetaFloor : eps / (1.0 - eps);
      dist = boost_reweight(dist, proba, train.labels(), beta);
      members.push_back(std::move(member));
      betas.push_back(beta);
      if (trace) {
        trace->distributions.push_back(dist);
        trace->epsilons.push_back(eps);
        trace->betas.push_back(beta);
      }
      ++t;
    }

    if (members.empty())
      throw std::runtime_error(std::string(kind) +
                               ": no usable members (every round degenerate)");
    return BoostedEnsemble(std::move(members), std::move(betas), kind);
  }
};

}  // namespace

BoostedEnsemble fit_rusboost(const Dataset& train, const EnsembleConfig& cfg,
                             BoostTrace* trace) {
  cfg.validate();
  const ClassSplit cls = split_by_class(train);
  const auto n_keep = std::min<std::size_t>(
      cls.majority.size(),
      static_cast<std::size_t>(std::llround(
          static_cast<double>(cls.minority.size()) / cfg.target_ratio)));

  BoostLoop loop{train, cfg, trace, "rusboost", {}};
  loop.make_member = [&](const std::vector<double>& dist, std::uint64_t round_seed) {
    const auto kept =
        resample::detail::undersample_indices(cls.majority.size(), n_keep, round_seed);
    Bag bag;
    bag.n_features = train.n_features();
    double mass = 0.0;
    for (std::size_t i : cls.minority) mass += dist[i];
    for (std::size_t k : kept) mass += dist[cls.majority[k]];
    const double scale = mass > 0.0 ? 1.0 / mass : 1.0;
    for (std::size_t i : cls.minority) bag.add_row(train, i, dist[i] * scale);
    for (std::size_t k : kept)
      bag.add_row(train, cls.majority[k], dist[cls.majority[k]] * scale);
    return bag.fit(cfg.weak_max_depth);
  };
  return loop.run();
}

BoostedEnsemble fit_smoteboost(const Dataset& train, const EnsembleConfig& cfg,
                               BoostTrace* trace) {
  cfg.validate();
  const ClassSplit cls = split_by_class(train);
  const Dataset minority_ds = train.select(cls.minority);
  const auto n_min_target = static_cast<std::size_t>(std::llround(
      cfg.target_ratio * static_cast<double>(cls.majority.size())));
  const std::size_t n_synth =
      n_min_target > cls.minority.size() ? n_min_target - cls.minority.size() : 0;

  BoostLoop loop{train, cfg, trace, "smoteboost", {}};
  loop.make_member = [&](const std::vector<double>& dist, std::uint64_t round_seed) {
    Bag bag;
    bag.n_features = train.n_features();
    for (std::size_t i = 0; i < train.n_samples(); ++i) bag.add_row(train, i, dist[i]);
    if (n_synth > 0) {
      resample::SmoteConfig sc;
      sc.k_neighbors = cfg.smote_k;
      sc.n_synthetic = n_synth;
      sc.seed = round_seed;
      const Dataset synth = resample::smote(minority_ds, sc);
      double minority_mass = 0.0;
      for (std::size_t i : cls.minority) minority_mass += dist[i];
      const double w_each = minority_mass / static_cast<double>(n_synth);
      for (std::size_t s = 0; s < synth.n_samples(); ++s)
        bag.add_raw(synth.row(s), cls.minority_label, w_each);
    }
    return bag.fit(cfg.weak_max_depth);
  };
  return loop.run();
}

// ---------------------------------------------------------------------------
// Persistence

json BaggedEnsemble::to_json() const {
  json members = json::array();
  for (const auto& m : members_) members.push_back(m.to_json());
  return {{"kind", kind_}, {"format_version", 1}, {"members", std::move(members)}};
}

BaggedEnsemble BaggedEnsemble::from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "underbagging" && kind != "smotebagging")
    throw std::runtime_error("BaggedEnsemble: unexpected kind '" + kind + "'");
  std::vector<WeakTree> members;
  for (const auto& mj : j.at("members")) members.push_back(WeakTree::from_json(mj));
  return BaggedEnsemble(std::move(members), kind);
}

json BoostedEnsemble::to_json() const {
  json members = json::array();
  for (const auto& m : members_) members.push_back(m.to_json());
  return {{"kind", kind_},
          {"format_version", 1},
          {"members", std::move(members)},
          {"betas", betas_}};
}

BoostedEnsemble BoostedEnsemble::from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "rusboost" && kind != "smoteboost")
    throw std::runtime_error("BoostedEnsemble: unexpected kind '" + kind + "'");
  std::vector<WeakTree> members;
  for (const auto& mj : j.at("members")) members.push_back(WeakTree::from_json(mj));
  return BoostedEnsemble(std::move(members), j.at("betas").get<std::vector<double>>(),
                         kind);
}

}  // namespace riskpred::ensemble
