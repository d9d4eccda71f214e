// Independent reference implementations used to check the library. Everything
// here is deliberately written as plain scalar loops / exhaustive enumeration
// and shares no code with the implementations under test.
#ifndef RISKPRED_TESTS_ORACLES_HPP
#define RISKPRED_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace testoracle {

struct Confusion {
  double tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion(const std::vector<double>& scores,
                           const std::vector<int>& labels,
                           const std::vector<double>& weights, double threshold) {
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (scores[i] >= threshold) {
      (labels[i] == 1 ? c.tp : c.fp) += w;
    } else {
      (labels[i] == 1 ? c.fn : c.tn) += w;
    }
  }
  return c;
}

inline double macro_f1(const Confusion& c) {
  const double f1p = (2 * c.tp + c.fp + c.fn) == 0 ? 0.0 : 2 * c.tp / (2 * c.tp + c.fp + c.fn);
  const double f1n = (2 * c.tn + c.fn + c.fp) == 0 ? 0.0 : 2 * c.tn / (2 * c.tn + c.fn + c.fp);
  return 0.5 * (f1p + f1n);
}

// Average-precision AUCPR by exhaustive enumeration of distinct thresholds.
inline double aucpr(const std::vector<double>& scores, const std::vector<int>& labels,
                    const std::vector<double>& weights) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  double total_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) total_pos += weights.empty() ? 1.0 : weights[i];

  double auc = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    const Confusion c = confusion(scores, labels, weights, t);
    const double rec = c.tp / total_pos;
    const double prec = (c.tp + c.fp) == 0 ? 0.0 : c.tp / (c.tp + c.fp);
    auc += (rec - prev_recall) * prec;
    prev_recall = rec;
  }
  return auc;
}

struct RocPt {
  double fpr, tpr;
};

inline std::vector<RocPt> roc(const std::vector<double>& scores,
                              const std::vector<int>& labels,
                              const std::vector<double>& weights) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double total_pos = 0, total_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? total_pos : total_neg) += weights.empty() ? 1.0 : weights[i];
  std::vector<RocPt> pts{{0.0, 0.0}};
  for (double t : thresholds) {
    const Confusion c = confusion(scores, labels, weights, t);
    pts.push_back({c.fp / total_neg, c.tp / total_pos});
  }
  return pts;
}

// Lower envelope by direct minimization over all lines at one grid point.
inline double envelope_at(const std::vector<RocPt>& roc_pts, double pc) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& p : roc_pts) {
    const double ne = (1.0 - p.tpr) * pc + p.fpr * (1.0 - pc);
    lo = std::min(lo, ne);
  }
  return lo;
}

// Brute-force k nearest neighbors (excluding self) in standardized space.
// points is row-major n x d. Returns the index set per point.
inline std::vector<std::vector<std::size_t>> knn(const std::vector<double>& points,
                                                 std::size_t n, std::size_t d,
                                                 std::size_t k) {
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += points[i * d + j];
  for (auto& v : mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = points[i * d + j] - mean[j];
      sd[j] += c * c;
    }
  for (auto& v : sd) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v == 0.0) v = 1.0;
  }
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = (points[i * d + f] - points[j * d + f]) / sd[f];
        d2 += diff * diff;
      }
      dist.emplace_back(d2, j);
    }
    std::sort(dist.begin(), dist.end());
    for (std::size_t q = 0; q < std::min(k, dist.size()); ++q)
      out[i].push_back(dist[q].second);
  }
  return out;
}

// One AdaBoost.M2 state update (binary collapse), scalar loop.
struct BoostStep {
  double epsilon;
  double beta;
  std::vector<double> next_dist;
};

inline BoostStep adaboost_m2_step(const std::vector<double>& dist,
                                  const std::vector<double>& proba,
                                  const std::vector<int>& labels, double beta_floor) {
  BoostStep out;
  out.epsilon = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double h_true = labels[i] == 1 ? proba[i] : 1.0 - proba[i];
    out.epsilon += dist[i] * (1.0 - h_true + (1.0 - h_true)) / 2.0;
  }
  out.beta = out.epsilon <= beta_floor ? beta_floor : out.epsilon / (1.0 - out.epsilon);
  out.next_dist.resize(dist.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double h_true = labels[i] == 1 ? proba[i] : 1.0 - proba[i];
    const double exponent = 0.5 * (1.0 + h_true - (1.0 - h_true));
    out.next_dist[i] = dist[i] * std::pow(out.beta, exponent);
    total += out.next_dist[i];
  }
  for (auto& v : out.next_dist) v /= total;
  return out;
}

// ---------------------------------------------------------------------------
// DAG / d-separation by exhaustive path enumeration

struct OracleDag {
  std::size_t n = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int a, int b) const {
    for (const auto& [x, y] : edges)
      if (x == a && y == b) return true;
    return false;
  }
};

inline void collect_descendants(const OracleDag& g, int v, std::set<int>& out) {
  if (!out.insert(v).second) return;
  for (const auto& [a, b] : g.edges)
    if (a == v) collect_descendants(g, b, out);
}

// Is the undirected path (as node sequence) active given z?
inline bool path_active(const OracleDag& g, const std::vector<int>& path,
                        const std::set<int>& z) {
  for (std::size_t k = 1; k + 1 < path.size(); ++k) {
    const int prev = path[k - 1], node = path[k], next = path[k + 1];
    const bool collider = g.has_edge(prev, node) && g.has_edge(next, node);
    if (collider) {
      std::set<int> desc;
      collect_descendants(g, node, desc);
      bool opened = false;
      for (int zn : z)
        if (desc.count(zn)) opened = true;
      if (!opened) return false;
    } else {
      if (z.count(node)) return false;
    }
  }
  return true;
}

inline void enumerate_paths(const OracleDag& g, int cur, int goal,
                            std::vector<int>& path, std::vector<bool>& used,
                            std::vector<std::vector<int>>& out) {
  if (cur == goal) {
    out.push_back(path);
    return;
  }
  for (const auto& [a, b] : g.edges) {
    int next = -1;
    if (a == cur) next = b;
    if (b == cur) next = a;
    if (next < 0 || used[next]) continue;
    used[next] = true;
    path.push_back(next);
    enumerate_paths(g, next, goal, path, used, out);
    path.pop_back();
    used[next] = false;
  }
}

inline bool d_separated(const OracleDag& g, int x, int y, const std::set<int>& z) {
  std::vector<std::vector<int>> paths;
  std::vector<int> path{x};
  std::vector<bool> used(g.n, false);
  used[x] = true;
  enumerate_paths(g, x, y, path, used, paths);
  for (const auto& p : paths)
    if (path_active(g, p, z)) return false;
  return true;
}

inline bool backdoor(const OracleDag& g, int x, int y, const std::set<int>& z) {
  std::set<int> desc;
  collect_descendants(g, x, desc);
  for (int zn : z)
    if (desc.count(zn)) return false;
  OracleDag cut;
  cut.n = g.n;
  for (const auto& [a, b] : g.edges)
    if (a != x) cut.edges.emplace_back(a, b);
  return d_separated(cut, x, y, z);
}

// Least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

// Gaussian diagonal log-density.
inline double log_normal_density(const std::vector<double>& x,
                                 const std::vector<double>& mu,
                                 const std::vector<double>& var) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - mu[j];
    acc += -0.5 * std::log(2.0 * 3.14159265358979323846 * var[j]) -
           d * d / (2.0 * var[j]);
  }
  return acc;
}

}  // namespace testoracle

#endif  // RISKPRED_TESTS_ORACLES_HPP
