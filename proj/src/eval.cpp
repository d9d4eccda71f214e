#include "riskpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace riskpred::eval {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels,
                  std::span<const double> weights) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("scores and labels lengths differ");
  if (!weights.empty() && weights.size() != scores.size())
    throw std::invalid_argument("weights length differs from scores");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");
}

inline double weight_at(std::span<const double> weights, std::size_t i) {
  return weights.empty() ? 1.0 : weights[i];
}

// Indices sorted by score descending; ties keep ascending index order.
std::vector<std::size_t> sort_by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return idx;
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

ConfusionCounts confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       std::span<const double> weights,
                                       double threshold) {
  check_inputs(scores, labels, weights);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double w = weight_at(weights, i);
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1) {
      (pred ? c.tp : c.fn) += w;
    } else {
      (pred ? c.fp : c.tn) += w;
    }
  }
  return c;
}

double precision(const ConfusionCounts& c) { return safe_div(c.tp, c.tp + c.fp); }
double recall(const ConfusionCounts& c) { return safe_div(c.tp, c.tp + c.fn); }

double f1_positive(const ConfusionCounts& c) {
  return safe_div(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn);
}

double f1_negative(const ConfusionCounts& c) {
  return safe_div(2.0 * c.tn, 2.0 * c.tn + c.fn + c.fp);
}

double macro_f1(const ConfusionCounts& c) {
  return 0.5 * (f1_positive(c) + f1_negative(c));
}

PrCurve pr_curve_and_aucpr(std::span<const double> scores,
                           std::span<const int> labels,
                           std::span<const double> weights) {
  check_inputs(scores, labels, weights);
  double total_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) total_pos += weight_at(weights, i);
  if (total_pos <= 0.0)
    throw std::invalid_argument("pr_curve_and_aucpr: no positive weight");

  const auto idx = sort_by_score_desc(scores);
  PrCurve out;
  out.points.push_back({0.0, 1.0, std::numeric_limits<double>::infinity()});
  double cum_tp = 0.0, cum_fp = 0.0, prev_recall = 0.0, auc = 0.0;
  std::size_t k = 0;
  while (k < idx.size()) {
    const double s = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == s) {
      const std::size_t i = idx[k];
      const double w = weight_at(weights, i);
      (labels[i] == 1 ? cum_tp : cum_fp) += w;
      ++k;
    }
    const double rec = cum_tp / total_pos;
    const double prec = safe_div(cum_tp, cum_tp + cum_fp);
    out.points.push_back({rec, prec, s});
    auc += (rec - prev_recall) * prec;
    prev_recall = rec;
  }
  out.aucpr = auc;
  return out;
}

std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const int> labels,
                                 std::span<const double> weights) {
  check_inputs(scores, labels, weights);
  double total_pos = 0.0, total_neg = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? total_pos : total_neg) += weight_at(weights, i);
  if (total_pos <= 0.0 || total_neg <= 0.0)
    throw std::invalid_argument("roc_points: both classes must carry positive weight");

  const auto idx = sort_by_score_desc(scores);
  std::vector<RocPoint> out;
  out.push_back({0.0, 0.0});
  double cum_tp = 0.0, cum_fp = 0.0;
  std::size_t k = 0;
  while (k < idx.size()) {
    const double s = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == s) {
      const std::size_t i = idx[k];
      const double w = weight_at(weights, i);
      (labels[i] == 1 ? cum_tp : cum_fp) += w;
      ++k;
    }
    out.push_back({cum_fp / total_neg, cum_tp / total_pos});
  }
  return out;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels,
               std::span<const double> weights) {
  const auto pts = roc_points(scores, labels, weights);
  double auc = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k)
    auc += (pts[k].fpr - pts[k - 1].fpr) * 0.5 * (pts[k].tpr + pts[k - 1].tpr);
  return auc;
}

CostCurve cost_curve(const std::vector<RocPoint>& roc, int grid_size) {
  if (roc.empty()) throw std::invalid_argument("cost_curve: empty ROC");
  if (grid_size < 2) throw std::invalid_argument("cost_curve: grid_size must be >= 2");

  CostCurve out;
  out.lines.reserve(roc.size());
  for (const auto& p : roc) out.lines.push_back({p.fpr, 1.0 - p.tpr});

  out.grid.resize(grid_size);
  out.envelope.resize(grid_size);
  for (int j = 0; j < grid_size; ++j) {
    const double pc = static_cast<double>(j) / (grid_size - 1);
    out.grid[j] = pc;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& line : out.lines) lo = std::min(lo, line.at(pc));
    out.envelope[j] = lo;
  }
  return out;
}

double total_profit(const ConfusionCounts& c, const ProfitMatrix& pm) {
  return pm.v_tp * c.tp + pm.v_fp * c.fp + pm.v_tn * c.tn + pm.v_fn * c.fn;
}

ProfitThresholdResult optimize_profit_threshold(std::span<const double> scores,
                                                std::span<const int> labels,
                                                std::span<const double> weights,
                                                const ProfitMatrix& pm,
                                                int n_thresholds) {
  check_inputs(scores, labels, weights);
  if (n_thresholds < 2)
    throw std::invalid_argument("optimize_profit_threshold: need at least 2 thresholds");

  const auto idx = sort_by_score_desc(scores);
  // prefix_pos[k] = positive weight among the k highest scores
  std::vector<double> sorted_scores(idx.size());
  std::vector<double> prefix_pos(idx.size() + 1, 0.0), prefix_neg(idx.size() + 1, 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    sorted_scores[k] = scores[i];
    const double w = weight_at(weights, i);
    prefix_pos[k + 1] = prefix_pos[k] + (labels[i] == 1 ? w : 0.0);
    prefix_neg[k + 1] = prefix_neg[k] + (labels[i] == 1 ? 0.0 : w);
  }
  const double total_pos = prefix_pos.back();
  const double total_neg = prefix_neg.back();

  ProfitThresholdResult res;
  res.benchmark_profit = pm.v_tn * total_neg + pm.v_fn * total_pos;
  res.curve.reserve(n_thresholds);
  bool have_best = false;
  for (int k = 0; k < n_thresholds; ++k) {
    const double t = (k + 0.5) / n_thresholds;
    // number of scores >= t in the descending array
    const auto pred_pos = static_cast<std::size_t>(
        std::partition_point(sorted_scores.begin(), sorted_scores.end(),
                             [&](double s) { return s >= t; }) -
        sorted_scores.begin());
    ConfusionCounts c;
    c.tp = prefix_pos[pred_pos];
    c.fp = prefix_neg[pred_pos];
    c.fn = total_pos - c.tp;
    c.tn = total_neg - c.fp;
    const double profit = total_profit(c, pm);
    res.curve.emplace_back(t, profit);
    if (!have_best || profit > res.best_profit) {
      have_best = true;
      res.best_profit = profit;
      res.best_threshold = t;
    }
  }
  res.ratio_defined = res.benchmark_profit > 0.0;
  if (res.ratio_defined) res.profit_ratio = res.best_profit / res.benchmark_profit;
  return res;
}

double weighted_log_loss(std::span<const double> margins,
                         std::span<const int> labels,
                         std::span<const double> weights) {
  if (margins.size() != labels.size())
    throw std::invalid_argument("weighted_log_loss: length mismatch");
  if (!weights.empty() && weights.size() != margins.size())
    throw std::invalid_argument("weighted_log_loss: weights length mismatch");
  double loss = 0.0, total_w = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double w = weight_at(weights, i);
    const double m = margins[i];
    // log(1 + e^m) - y m, evaluated stably
    const double softplus = std::log1p(std::exp(-std::abs(m))) + std::max(m, 0.0);
    loss += w * (softplus - (labels[i] == 1 ? m : 0.0));
    total_w += w;
  }
  if (total_w <= 0.0) throw std::invalid_argument("weighted_log_loss: zero total weight");
  return loss / total_w;
}

}  // namespace riskpred::eval
