#ifndef RISKPRED_EXPLAIN_HPP
#define RISKPRED_EXPLAIN_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "riskpred/dag.hpp"
#include "riskpred/dataset.hpp"
#include "riskpred/gbdt.hpp"

namespace riskpred::explain {

struct BinStat {
  std::string label;
  double mean_contribution = 0.0;
  std::size_t count = 0;
};

// Mean per-sample log-odds contribution of each feature, grouped by bin.
// mean_bias + sum over features of (count-weighted bin means) / n recovers
// the mean margin.
struct BinnedImpact {
  std::vector<std::string> feature_names;
  std::vector<std::vector<BinStat>> per_feature;
  double mean_bias = 0.0;
  std::size_t n_samples = 0;
};

BinnedImpact binned_impact(const gbdt::GbdtModel& m, const Dataset& d,
                           const BinningScheme& bins);

struct PdpCurve {
  std::vector<double> grid;
  std::vector<double> avg_probability;
  std::vector<std::string> adjustment_set;
};

// Partial dependence: PDP(v) = mean_i sigmoid(margin of sample i with the
// plotted feature forced to v). The adjustment set records all other
// features.
PdpCurve pdp(const gbdt::GbdtModel& m, const Dataset& d, std::size_t feature,
             std::vector<double> grid);

// Back-door-adjusted effect curve: the same averaging, allowed only after z
// passes the back-door criterion for (treatment = plotted feature, outcome)
// in g. Throws with the violated condition named otherwise. z must map to
// dataset features.
PdpCurve adjusted_effect_curve(const gbdt::GbdtModel& m, const Dataset& d,
                               std::size_t feature, std::vector<double> grid,
                               const causal::Dag& g,
                               const std::vector<std::string>& z);

// Local linear regression with tricube weights over the span-nearest
// neighbors of each input point; returns fitted values in input order.
std::vector<double> loess_smooth(std::span<const double> x,
                                 std::span<const double> y, double span);

}  // namespace riskpred::explain

#endif  // RISKPRED_EXPLAIN_HPP
