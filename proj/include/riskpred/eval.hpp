#ifndef RISKPRED_EVAL_HPP
#define RISKPRED_EVAL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace riskpred::eval {

// Weighted confusion counts. `weights` may be empty anywhere below, meaning
// all samples count 1.
struct ConfusionCounts {
  double tp = 0.0;
  double fp = 0.0;
  double tn = 0.0;
  double fn = 0.0;
  double total() const { return tp + fp + tn + fn; }
};

// Positive prediction iff score >= threshold.
ConfusionCounts confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       std::span<const double> weights,
                                       double threshold);

double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f1_positive(const ConfusionCounts& c);
double f1_negative(const ConfusionCounts& c);
// Unweighted mean of the two per-class F1 scores; 0/0 F1 counts as 0.
double macro_f1(const ConfusionCounts& c);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // recall ascending; leading (0, 1) anchor
  double aucpr = 0.0;
};

// Thresholds at the distinct scores, descending; tied scores share one
// threshold. AUCPR uses the average-precision step rule
// sum_i (R_i - R_{i-1}) * P_i, no interpolation.
PrCurve pr_curve_and_aucpr(std::span<const double> scores,
                           std::span<const int> labels,
                           std::span<const double> weights);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Monotone staircase from (0,0) to (1,1), one point per distinct score.
std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const int> labels,
                                 std::span<const double> weights);

// Trapezoidal area under the ROC staircase.
double roc_auc(std::span<const double> scores, std::span<const int> labels,
               std::span<const double> weights);

// One cost line per classifier operating point: normalized expected cost
// NE(PC) = fnr * PC + fpr * (1 - PC) over probability-cost PC in [0,1].
struct CostLine {
  double fpr = 0.0;
  double fnr = 0.0;
  double at(double pc) const { return fnr * pc + fpr * (1.0 - pc); }
};

// The always-negative classifier costs NE = PC, the always-positive one
// NE = 1 - PC. They are kept out of the envelope and overlaid separately.
inline CostLine trivial_always_negative() { return {0.0, 1.0}; }
inline CostLine trivial_always_positive() { return {1.0, 0.0}; }

struct CostCurve {
  std::vector<CostLine> lines;
  std::vector<double> grid;      // uniform PC grid over [0,1]
  std::vector<double> envelope;  // pointwise min over lines at each grid PC
};

CostCurve cost_curve(const std::vector<RocPoint>& roc, int grid_size = 101);

// Profit per case for each confusion cell.
struct ProfitMatrix {
  double v_tp = 0.0;
  double v_fp = 0.0;
  double v_tn = 0.0;
  double v_fn = 0.0;
};

double total_profit(const ConfusionCounts& c, const ProfitMatrix& pm);

struct ProfitThresholdResult {
  double best_threshold = 0.0;
  double best_profit = 0.0;
  // Benchmark = profit of the all-negative classifier. The ratio is reported
  // only when the benchmark is positive.
  double benchmark_profit = 0.0;
  bool ratio_defined = false;
  double profit_ratio = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, profit)
};

// Sweeps n_thresholds evenly spaced thresholds (k + 0.5) / n_thresholds in
// (0,1) and returns the argmax, ties resolved toward the smallest threshold.
ProfitThresholdResult optimize_profit_threshold(std::span<const double> scores,
                                                std::span<const int> labels,
                                                std::span<const double> weights,
                                                const ProfitMatrix& pm,
                                                int n_thresholds = 100);

// Weighted logistic loss over margins (log-odds scale), normalized by total
// weight. Used as the default early-stopping metric.
double weighted_log_loss(std::span<const double> margins,
                         std::span<const int> labels,
                         std::span<const double> weights);

}  // namespace riskpred::eval

#endif  // RISKPRED_EVAL_HPP
