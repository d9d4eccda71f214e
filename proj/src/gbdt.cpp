#include "riskpred/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace riskpred::gbdt {

using nlohmann::json;

double sigmoid(double margin) {
  if (margin >= 0.0) {
    return 1.0 / (1.0 + std::exp(-margin));
  }
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

void GbdtConfig::validate() const {
  if (n_rounds < 1) throw std::invalid_argument("GbdtConfig: n_rounds must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("GbdtConfig: max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("GbdtConfig: learning_rate must be in (0,1]");
  if (!(l2_leaf_reg >= 0.0))
    throw std::invalid_argument("GbdtConfig: l2_leaf_reg must be >= 0");
  if (!(min_child_hessian >= 0.0))
    throw std::invalid_argument("GbdtConfig: min_child_hessian must be >= 0");
  if (early_stopping_rounds && *early_stopping_rounds < 1)
    throw std::invalid_argument("GbdtConfig: early_stopping_rounds must be >= 1");
  if (n_threads < 1) throw std::invalid_argument("GbdtConfig: n_threads must be >= 1");
}

std::int32_t Tree::route(std::span<const double> x) const {
  std::int32_t id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& n = nodes[id];
    id = x[n.feature] < n.threshold ? n.left : n.right;
  }
  return id;
}

double ContributionVector::total() const {
  return bias + std::accumulate(values.begin(), values.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Training

namespace {

constexpr double kMinSplitGain = 1e-12;

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double left_g = 0.0;
  double left_h = 0.0;
  bool valid() const { return feature >= 0; }
};

struct LevelNode {
  std::int32_t tree_node;
  double sum_g;
  double sum_h;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns,
              const std::vector<std::vector<std::uint32_t>>& order,
              const std::vector<std::uint32_t>& active, const GbdtConfig& cfg)
      : columns_(columns), order_(order), active_(active), cfg_(cfg) {}

  // g/h are weighted gradient and hessian, indexed by sample id.
  // On return, leaf_of[i] holds the leaf node id for every active i.
  Tree build(const std::vector<double>& g, const std::vector<double>& h,
             std::vector<std::int32_t>& leaf_of) {
    const std::size_t n_features = columns_.size();
    Tree tree;

    double total_g = 0.0, total_h = 0.0;
    for (std::uint32_t i : active_) {
      total_g += g[i];
      total_h += h[i];
    }
    tree.nodes.push_back(TreeNode{});
    tree.nodes[0].cover = total_h;

    for (std::uint32_t i : active_) leaf_of[i] = 0;

    std::vector<LevelNode> level{{0, total_g, total_h}};
    // slot of each tree node in `level`, or -1 once it is settled
    std::vector<std::int32_t> slot_of_node(1, 0);

    for (int depth = 0; depth < cfg_.max_depth && !level.empty(); ++depth) {
      const std::size_t n_slots = level.size();
      std::vector<SplitCandidate> cand(n_features * n_slots);

      const int n_threads =
          std::max(1, std::min<int>(cfg_.n_threads, static_cast<int>(n_features)));
      if (n_threads == 1) {
        for (std::size_t f = 0; f < n_features; ++f)
          scan_feature(f, level, slot_of_node, leaf_of, g, h,
                       cand.data() + f * n_slots);
      } else {
        std::vector<std::thread> workers;
        workers.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) {
          workers.emplace_back([&, t] {
            for (std::size_t f = t; f < n_features; f += n_threads)
              scan_feature(f, level, slot_of_node, leaf_of, g, h,
                           cand.data() + f * n_slots);
          });
        }
        for (auto& w : workers) w.join();
      }

      // Canonical reduction: features in ascending order, strict gain
      // improvement, so ties resolve to the lowest feature index.
      std::vector<SplitCandidate> best(n_slots);
      for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t s = 0; s < n_slots; ++s) {
          const SplitCandidate& c = cand[f * n_slots + s];
          if (c.valid() && (!best[s].valid() || c.gain > best[s].gain)) best[s] = c;
        }
      }

      std::vector<LevelNode> next_level;
      for (std::size_t s = 0; s < n_slots; ++s) {
        TreeNode& node = tree.nodes[level[s].tree_node];
        if (best[s].valid() && best[s].gain > kMinSplitGain) {
          node.feature = best[s].feature;
          node.threshold = best[s].threshold;
          node.left = static_cast<std::int32_t>(tree.nodes.size());
          node.right = node.left + 1;
          TreeNode left, right;
          left.cover = best[s].left_h;
          right.cover = level[s].sum_h - best[s].left_h;
          tree.nodes.push_back(left);
          tree.nodes.push_back(right);
          next_level.push_back({node.left, best[s].left_g, best[s].left_h});
          next_level.push_back({node.right, level[s].sum_g - best[s].left_g,
                                level[s].sum_h - best[s].left_h});
        } else {
          node.value = leaf_value(level[s].sum_g, level[s].sum_h);
        }
      }

      // Route samples into the new level and rebuild the slot lookup.
      slot_of_node.assign(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < next_level.size(); ++s)
        slot_of_node[next_level[s].tree_node] = static_cast<std::int32_t>(s);
      for (std::uint32_t i : active_) {
        const TreeNode& node = tree.nodes[leaf_of[i]];
        if (!node.is_leaf())
          leaf_of[i] = columns_[node.feature][i] < node.threshold ? node.left : node.right;
      }
      level = std::move(next_level);
    }

    // Nodes still open at max_depth become leaves.
    for (const LevelNode& ln : level)
      tree.nodes[ln.tree_node].value = leaf_value(ln.sum_g, ln.sum_h);

    // Internal node value = cover-weighted average of the subtree leaves;
    // children always follow their parent, so one reverse pass suffices.
    for (std::size_t k = tree.nodes.size(); k-- > 0;) {
      TreeNode& node = tree.nodes[k];
      if (node.is_leaf()) continue;
      const TreeNode& l = tree.nodes[node.left];
      const TreeNode& r = tree.nodes[node.right];
      const double cover = l.cover + r.cover;
      node.value = cover > 0.0 ? (l.cover * l.value + r.cover * r.value) / cover : 0.0;
    }
    return tree;
  }

 private:
  double leaf_value(double sum_g, double sum_h) const {
    const double den = sum_h + cfg_.l2_leaf_reg;
    return den > 0.0 ? -sum_g / den : 0.0;
  }

  void scan_feature(std::size_t f, const std::vector<LevelNode>& level,
                    const std::vector<std::int32_t>& slot_of_node,
                    const std::vector<std::int32_t>& leaf_of,
                    const std::vector<double>& g, const std::vector<double>& h,
                    SplitCandidate* out) const {
    const std::size_t n_slots = level.size();
    std::vector<double> run_g(n_slots, 0.0), run_h(n_slots, 0.0);
    std::vector<double> prev_val(n_slots, 0.0);
    std::vector<char> seen(n_slots, 0);
    const std::vector<double>& col = columns_[f];
    const double lambda = cfg_.l2_leaf_reg;

    for (std::uint32_t i : order_[f]) {
      const std::int32_t s = slot_of_node[leaf_of[i]];
      if (s < 0) continue;
      const double v = col[i];
      if (seen[s] && v > prev_val[s]) {
        const double hl = run_h[s];
        const double hr = level[s].sum_h - hl;
        if (hl >= cfg_.min_child_hessian && hr >= cfg_.min_child_hessian) {
          const double gl = run_g[s];
          const double gr = level[s].sum_g - gl;
          const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                              level[s].sum_g * level[s].sum_g / (level[s].sum_h + lambda);
          if (gain > out[s].gain) {
            out[s].gain = gain;
            out[s].feature = static_cast<int>(f);
            out[s].threshold = std::midpoint(prev_val[s], v);
            out[s].left_g = gl;
            out[s].left_h = hl;
          }
        }
      }
      run_g[s] += g[i];
      run_h[s] += h[i];
      prev_val[s] = v;
      seen[s] = 1;
    }
  }

  const std::vector<std::vector<double>>& columns_;
  const std::vector<std::vector<std::uint32_t>>& order_;
  const std::vector<std::uint32_t>& active_;
  const GbdtConfig& cfg_;
};

double evaluate_metric(const EvalMetric& metric, std::span<const double> margins,
                       std::span<const int> labels, std::span<const double> weights) {
  switch (metric.kind) {
    case MetricKind::kLogLoss:
      return eval::weighted_log_loss(margins, labels, weights);
    case MetricKind::kAucpr: {
      std::vector<double> probs(margins.size());
      for (std::size_t i = 0; i < margins.size(); ++i) probs[i] = sigmoid(margins[i]);
      return eval::pr_curve_and_aucpr(probs, labels, weights).aucpr;
    }
    case MetricKind::kMacroF1: {
      std::vector<double> probs(margins.size());
      for (std::size_t i = 0; i < margins.size(); ++i) probs[i] = sigmoid(margins[i]);
      return eval::macro_f1(
          eval::confusion_at_threshold(probs, labels, weights, metric.threshold));
    }
    case MetricKind::kProfit: {
      std::vector<double> probs(margins.size());
      for (std::size_t i = 0; i < margins.size(); ++i) probs[i] = sigmoid(margins[i]);
      return eval::total_profit(
          eval::confusion_at_threshold(probs, labels, weights, metric.threshold),
          metric.profit);
    }
  }
  throw std::logic_error("unknown metric");
}

}  // namespace

GbdtModel fit(const Dataset& train, const Dataset* valid, const GbdtConfig& cfg) {
  cfg.validate();
  const std::size_t n = train.n_samples();
  const std::size_t d = train.n_features();
  if (n == 0) throw std::invalid_argument("gbdt::fit: empty training set");
  if ((cfg.early_stopping_rounds || cfg.eval_metric.kind != MetricKind::kLogLoss) &&
      valid == nullptr)
    throw std::invalid_argument(
        "gbdt::fit: validation set required for early stopping or a non-logloss metric");
  if (valid && valid->n_features() != d)
    throw std::invalid_argument("gbdt::fit: validation feature count mismatch");

  // Zero-weight rows are excluded up front so they can affect neither split
  // thresholds nor leaf values.
  std::vector<std::uint32_t> active;
  active.reserve(n);
  double w_pos = 0.0, w_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = train.weight(i);
    if (w > 0.0) {
      active.push_back(static_cast<std::uint32_t>(i));
      w_total += w;
      if (train.label(i) == 1) w_pos += w;
    }
  }
  if (w_total <= 0.0) throw std::invalid_argument("gbdt::fit: zero total weight");
  if (w_pos <= 0.0 || w_pos >= w_total)
    throw std::invalid_argument("gbdt::fit: training data must contain both classes");

  const double prevalence = w_pos / w_total;
  const double base_margin = std::log(prevalence / (1.0 - prevalence));

  std::vector<std::vector<double>> columns(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) columns[j][i] = train.feature(i, j);

  std::vector<std::vector<std::uint32_t>> order(d);
  for (std::size_t j = 0; j < d; ++j) {
    order[j] = active;
    const auto& col = columns[j];
    std::sort(order[j].begin(), order[j].end(), [&](std::uint32_t a, std::uint32_t b) {
      if (col[a] != col[b]) return col[a] < col[b];
      return a < b;
    });
  }

  std::vector<double> margins(n, base_margin);
  std::vector<double> g(n, 0.0), h(n, 0.0);
  std::vector<std::int32_t> leaf_of(n, -1);

  std::vector<double> valid_margins;
  if (valid) valid_margins.assign(valid->n_samples(), base_margin);

  TreeBuilder builder(columns, order, active, cfg);
  std::vector<Tree> trees;
  trees.reserve(cfg.n_rounds);

  const bool track_best = valid != nullptr;
  double best_metric = 0.0;
  int best_round = 0;
  bool have_metric = false;

  for (int round = 0; round < cfg.n_rounds; ++round) {
    for (std::uint32_t i : active) {
      const double p = sigmoid(margins[i]);
      const double w = train.weight(i);
      g[i] = w * (p - train.label(i));
      h[i] = w * p * (1.0 - p);
    }
    Tree tree = builder.build(g, h, leaf_of);
    for (std::uint32_t i : active)
      margins[i] += cfg.learning_rate * tree.nodes[leaf_of[i]].value;

    if (valid) {
      for (std::size_t i = 0; i < valid->n_samples(); ++i)
        valid_margins[i] += cfg.learning_rate * tree.nodes[tree.route(valid->row(i))].value;
    }
    trees.push_back(std::move(tree));

    if (track_best) {
      const double m = evaluate_metric(cfg.eval_metric, valid_margins, valid->labels(),
                                       valid->weights());
      const bool improved =
          !have_metric ||
          (cfg.eval_metric.higher_is_better() ? m > best_metric : m < best_metric);
      if (improved) {
        best_metric = m;
        best_round = round + 1;
        have_metric = true;
      }
      if (cfg.early_stopping_rounds && round + 1 - best_round >= *cfg.early_stopping_rounds)
        break;
    }
  }

  std::optional<int> best_iteration;
  if (cfg.early_stopping_rounds) best_iteration = best_round;
  return GbdtModel(std::move(trees), base_margin, cfg.learning_rate, d, best_iteration);
}

// ---------------------------------------------------------------------------
// Model

GbdtModel::GbdtModel(std::vector<Tree> trees, double base_margin, double learning_rate,
                     std::size_t n_features, std::optional<int> best_iteration)
    : trees_(std::move(trees)),
      base_margin_(base_margin),
      learning_rate_(learning_rate),
      n_features_(n_features),
      best_iteration_(best_iteration) {
  if (!(learning_rate_ > 0.0 && learning_rate_ <= 1.0))
    throw std::invalid_argument("GbdtModel: learning_rate must be in (0,1]");
  if (!std::isfinite(base_margin_))
    throw std::invalid_argument("GbdtModel: base_margin must be finite");
  if (best_iteration_ &&
      (*best_iteration_ < 0 || static_cast<std::size_t>(*best_iteration_) > trees_.size()))
    throw std::invalid_argument("GbdtModel: best_iteration out of range");
}

int GbdtModel::resolve_n_trees(std::optional<int> n_trees) const {
  const int all = static_cast<int>(trees_.size());
  const int k = n_trees ? *n_trees : best_iteration_.value_or(all);
  if (k < 0 || k > all)
    throw std::invalid_argument("GbdtModel: n_trees out of range");
  return k;
}

double GbdtModel::predict_margin(std::span<const double> x,
                                 std::optional<int> n_trees) const {
  if (x.size() != n_features_)
    throw std::invalid_argument("GbdtModel: feature dimension mismatch");
  const int k = resolve_n_trees(n_trees);
  double sum = 0.0;
  for (int t = 0; t < k; ++t) sum += trees_[t].leaf_value(x);
  return base_margin_ + learning_rate_ * sum;
}

double GbdtModel::predict_proba(std::span<const double> x,
                                std::optional<int> n_trees) const {
  return sigmoid(predict_margin(x, n_trees));
}

std::vector<double> GbdtModel::predict_margin(const Dataset& d,
                                              std::optional<int> n_trees) const {
  std::vector<double> out(d.n_samples());
  for (std::size_t i = 0; i < d.n_samples(); ++i) out[i] = predict_margin(d.row(i), n_trees);
  return out;
}

std::vector<double> GbdtModel::predict_proba(const Dataset& d,
                                             std::optional<int> n_trees) const {
  std::vector<double> out(d.n_samples());
  for (std::size_t i = 0; i < d.n_samples(); ++i) out[i] = predict_proba(d.row(i), n_trees);
  return out;
}

ContributionVector GbdtModel::path_contributions(std::span<const double> x,
                                                 std::optional<int> n_trees) const {
  if (x.size() != n_features_)
    throw std::invalid_argument("GbdtModel: feature dimension mismatch");
  const int k = resolve_n_trees(n_trees);
  ContributionVector out;
  out.bias = base_margin_;
  out.values.assign(n_features_, 0.0);
  for (int t = 0; t < k; ++t) {
    const auto& nodes = trees_[t].nodes;
    std::int32_t id = 0;
    out.bias += learning_rate_ * nodes[0].value;
    while (!nodes[id].is_leaf()) {
      const TreeNode& node = nodes[id];
      const std::int32_t child = x[node.feature] < node.threshold ? node.left : node.right;
      out.values[node.feature] += learning_rate_ * (nodes[child].value - node.value);
      id = child;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

json GbdtModel::to_json() const {
  json trees = json::array();
  for (const auto& tree : trees_) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value},
                       {"cover", n.cover}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  json j{{"kind", "gbdt"},
         {"format_version", 1},
         {"base_margin", base_margin_},
         {"learning_rate", learning_rate_},
         {"n_features", n_features_},
         {"trees", std::move(trees)}};
  if (best_iteration_) {
    j["best_iteration"] = *best_iteration_;
  } else {
    j["best_iteration"] = nullptr;
  }
  return j;
}

GbdtModel GbdtModel::from_json(const json& j) {
  if (j.at("kind").get<std::string>() != "gbdt")
    throw std::runtime_error("GbdtModel: not a gbdt model document");
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("GbdtModel: unsupported format_version");
  std::vector<Tree> trees;
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<std::int32_t>();
      n.right = nj.at("right").get<std::int32_t>();
      n.value = nj.at("value").get<double>();
      n.cover = nj.at("cover").get<double>();
      tree.nodes.push_back(n);
    }
    trees.push_back(std::move(tree));
  }
  std::optional<int> best;
  if (!j.at("best_iteration").is_null()) best = j.at("best_iteration").get<int>();
  return GbdtModel(std::move(trees), j.at("base_margin").get<double>(),
                   j.at("learning_rate").get<double>(),
                   j.at("n_features").get<std::size_t>(), best);
}

void GbdtModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("GbdtModel::save: cannot open '" + path + "'");
  out << to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("GbdtModel::save: write failed for '" + path + "'");
}

GbdtModel GbdtModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("GbdtModel::load: cannot open '" + path + "'");
  json j;
  in >> j;
  return from_json(j);
}

}  // namespace riskpred::gbdt
