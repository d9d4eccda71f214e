#include "riskpred/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace riskpred::explain {

BinnedImpact binned_impact(const gbdt::GbdtModel& m, const Dataset& d,
                           const BinningScheme& bins) {
  if (d.n_features() != m.n_features() || bins.n_features() != d.n_features())
    throw std::invalid_argument("binned_impact: dimension mismatch");
  if (d.n_samples() == 0) throw std::invalid_argument("binned_impact: empty dataset");

  const std::size_t nf = d.n_features();
  std::vector<std::vector<double>> sums(nf);
  std::vector<std::vector<std::size_t>> counts(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    sums[f].assign(bins.effective_bins(f), 0.0);
    counts[f].assign(bins.effective_bins(f), 0);
  }

  double bias_sum = 0.0;
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    const gbdt::ContributionVector cv = m.path_contributions(d.row(i));
    bias_sum += cv.bias;
    for (std::size_t f = 0; f < nf; ++f) {
      const std::size_t b = bins.bin_index(f, d.feature(i, f));
      sums[f][b] += cv.values[f];
      counts[f][b] += 1;
    }
  }

  BinnedImpact out;
  out.feature_names = d.feature_names();
  out.n_samples = d.n_samples();
  out.mean_bias = bias_sum / static_cast<double>(d.n_samples());
  out.per_feature.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t b = 0; b < sums[f].size(); ++b) {
      BinStat stat;
      stat.label = bins.bin_label(f, b);
      stat.count = counts[f][b];
      stat.mean_contribution =
          counts[f][b] > 0 ? sums[f][b] / static_cast<double>(counts[f][b]) : 0.0;
      out.per_feature[f].push_back(std::move(stat));
    }
  }
  return out;
}

PdpCurve pdp(const gbdt::GbdtModel& m, const Dataset& d, std::size_t feature,
             std::vector<double> grid) {
  if (d.n_features() != m.n_features())
    throw std::invalid_argument("pdp: dimension mismatch");
  if (feature >= d.n_features()) throw std::invalid_argument("pdp: feature out of range");
  if (grid.empty()) throw std::invalid_argument("pdp: empty grid");
  for (double v : grid)
    if (!std::isfinite(v)) throw std::invalid_argument("pdp: non-finite grid value");
  if (d.n_samples() == 0) throw std::invalid_argument("pdp: empty dataset");

  PdpCurve out;
  out.grid = std::move(grid);
  out.avg_probability.reserve(out.grid.size());
  for (std::size_t f = 0; f < d.n_features(); ++f)
    if (f != feature) out.adjustment_set.push_back(d.feature_names()[f]);

  std::vector<double> row(d.n_features());
  for (double v : out.grid) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
      const auto r = d.row(i);
      std::copy(r.begin(), r.end(), row.begin());
      row[feature] = v;
      acc += m.predict_proba(row);
    }
    out.avg_probability.push_back(acc / static_cast<double>(d.n_samples()));
  }
  return out;
}

PdpCurve adjusted_effect_curve(const gbdt::GbdtModel& m, const Dataset& d,
                               std::size_t feature, std::vector<double> grid,
                               const causal::Dag& g,
                               const std::vector<std::string>& z) {
  if (feature >= d.n_features())
    throw std::invalid_argument("adjusted_effect_curve: feature out of range");
  const std::string& treated = d.feature_names()[feature];
  if (g.treatment() != treated)
    throw std::invalid_argument("adjusted_effect_curve: DAG treatment is '" +
                                g.treatment() + "' but the plotted feature is '" +
                                treated + "'");
  for (const auto& name : z) {
    const auto& names = d.feature_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw std::invalid_argument("adjusted_effect_curve: adjustment node '" + name +
                                  "' is not a dataset feature");
  }
  const causal::BackdoorCheck check = causal::check_backdoor_set(g, z);
  if (!check.ok)
    throw std::invalid_argument("adjusted_effect_curve: back-door criterion violated: " +
                                check.violation);

  PdpCurve out = pdp(m, d, feature, std::move(grid));
  out.adjustment_set.assign(z.begin(), z.end());
  return out;
}

std::vector<double> loess_smooth(std::span<const double> x, std::span<const double> y,
                                 double span) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("loess_smooth: length mismatch");
  if (n < 5) throw std::invalid_argument("loess_smooth: need at least 5 points");
  if (!(span > 0.0 && span <= 1.0))
    throw std::invalid_argument("loess_smooth: span must be in (0,1]");
  const auto q = static_cast<std::size_t>(
      std::ceil(span * static_cast<double>(n)));
  if (q < 2) throw std::invalid_argument("loess_smooth: span covers fewer than 2 points");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return a < b;
  });
  if (x[order.front()] == x[order.back()])
    throw std::invalid_argument("loess_smooth: all x values identical");

  std::vector<double> xs(n), ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = x[order[k]];
    ys[k] = y[order[k]];
  }

  std::vector<double> fitted(n, 0.0);
  std::size_t lo = 0;  // window start; windows only move right as x0 grows
  for (std::size_t k = 0; k < n; ++k) {
    const double x0 = xs[k];
    while (lo + q < n &&
           std::abs(xs[lo + q] - x0) < std::abs(xs[lo] - x0))
      ++lo;
    const std::size_t hi = lo + q;  // window [lo, hi)

    double max_dist = 0.0;
    for (std::size_t j = lo; j < hi; ++j)
      max_dist = std::max(max_dist, std::abs(xs[j] - x0));

    // Tricube weights; a zero-width window degenerates to a plain mean.
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double dx = xs[j] - x0;
      double w = 1.0;
      if (max_dist > 0.0) {
        const double u = std::min(1.0, std::abs(dx) / max_dist);
        const double t = 1.0 - u * u * u;
        w = t * t * t;
      }
      sw += w;
      swx += w * dx;
      swy += w * ys[j];
      swxx += w * dx * dx;
      swxy += w * dx * ys[j];
    }
    const double det = sw * swxx - swx * swx;
    double value;
    if (sw <= 0.0) {
      value = ys[k];
    } else if (std::abs(det) <= 1e-12 * std::max(1.0, sw * swxx)) {
      value = swy / sw;
    } else {
      // local line a + b dx evaluated at dx = 0
      value = (swxx * swy - swx * swxy) / det;
    }
    fitted[order[k]] = value;
  }
  return fitted;
}

}  // namespace riskpred::explain
