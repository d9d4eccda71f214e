#include "riskpred/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "riskpred/rng.hpp"

namespace riskpred::resample {

namespace detail {

std::vector<std::size_t> undersample_indices(std::size_t n, std::size_t n_keep,
                                             std::uint64_t seed) {
  if (n_keep > n)
    throw std::invalid_argument("undersample_indices: n_keep exceeds sample count");
  Rng rng(derive_seed(seed, "undersample"));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  for (std::size_t i = 0; i < n_keep; ++i) {
    const std::size_t j = i + rng.bounded(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> oversample_indices(std::size_t n, std::size_t n_total,
                                            std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("oversample_indices: empty input");
  if (n_total < n)
    throw std::invalid_argument("oversample_indices: n_total below sample count");
  Rng rng(derive_seed(seed, "oversample"));
  std::vector<std::size_t> idx(n_total);
  std::iota(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), 0u);
  for (std::size_t i = n; i < n_total; ++i) idx[i] = rng.bounded(n);
  return idx;
}

}  // namespace detail

Dataset smote(const Dataset& minority, const SmoteConfig& cfg) {
  const std::size_t m = minority.n_samples();
  const std::size_t d = minority.n_features();
  if (m == 0) throw std::invalid_argument("smote: empty minority set");
  if (cfg.k_neighbors < 1) throw std::invalid_argument("smote: k_neighbors must be >= 1");

  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.k_neighbors), m - 1);
  Rng rng(derive_seed(cfg.seed, "smote"));

  // Standardize for neighbor search only; interpolation is scale-equivariant,
  // so synthetics are produced directly in the original space.
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += minority.feature(i, j);
  for (auto& v : mean) v /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = minority.feature(i, j) - mean[j];
      scale[j] += c * c;
    }
  for (auto& v : scale) {
    v = std::sqrt(v / static_cast<double>(m));
    if (v == 0.0) v = 1.0;
  }

  std::vector<std::size_t> neighbors;  // m x k, flat
  if (k > 0) {
    neighbors.resize(m * k);
    std::vector<std::pair<double, std::size_t>> dist(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
          const double diff = (minority.feature(i, f) - minority.feature(j, f)) / scale[f];
          d2 += diff * diff;
        }
        dist[j] = {d2, j};
      }
      dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      for (std::size_t q = 0; q < k; ++q) neighbors[i * k + q] = dist[q].second;
    }
  }

  std::vector<double> features;
  features.reserve(cfg.n_synthetic * d);
  for (std::size_t s = 0; s < cfg.n_synthetic; ++s) {
    const std::size_t base = s % m;
    if (k == 0) {
      const auto row = minority.row(base);
      features.insert(features.end(), row.begin(), row.end());
      continue;
    }
    const std::size_t nn = neighbors[base * k + rng.bounded(k)];
    const double u = rng.uniform();
    for (std::size_t f = 0; f < d; ++f) {
      const double xb = minority.feature(base, f);
      features.push_back(xb + u * (minority.feature(nn, f) - xb));
    }
  }
  return Dataset(std::move(features), d, std::vector<int>(cfg.n_synthetic, 1),
                 minority.feature_names());
}

Dataset random_undersample(const Dataset& majority, std::size_t n_keep,
                           std::uint64_t seed) {
  return majority.select(detail::undersample_indices(majority.n_samples(), n_keep, seed));
}

Dataset random_oversample(const Dataset& minority, std::size_t n_total,
                          std::uint64_t seed) {
  return minority.select(detail::oversample_indices(minority.n_samples(), n_total, seed));
}

}  // namespace riskpred::resample
