#ifndef RISKPRED_RESAMPLE_HPP
#define RISKPRED_RESAMPLE_HPP

#include <cstdint>

#include "riskpred/dataset.hpp"

namespace riskpred::resample {

struct SmoteConfig {
  int k_neighbors = 5;
  std::size_t n_synthetic = 0;
  std::uint64_t seed = 0;
};

// Synthetic minority oversampling: row j of the output interpolates between
// minority row j % n (bases cycle round-robin) and one of that row's
// k nearest minority neighbors, x + u * (nn - x) with u ~ U[0,1). Neighbor
// search standardizes features first so no single scale dominates the
// Euclidean distance; interpolation happens in the original space. k is
// reduced to n-1 when the minority set is smaller than k+1; a single-row
// minority set is duplicated. Output labels are all 1.
Dataset smote(const Dataset& minority, const SmoteConfig& cfg);

// Uniform sample of n_keep rows without replacement, original order kept.
Dataset random_undersample(const Dataset& majority, std::size_t n_keep,
                           std::uint64_t seed);

// All original rows plus uniform-with-replacement duplicates up to n_total.
Dataset random_oversample(const Dataset& minority, std::size_t n_total,
                          std::uint64_t seed);

// Index-level primitives behind the Dataset operations above, sharing their
// seed derivation; used by the ensemble fits to resample index subsets.
namespace detail {
std::vector<std::size_t> undersample_indices(std::size_t n, std::size_t n_keep,
                                             std::uint64_t seed);
std::vector<std::size_t> oversample_indices(std::size_t n, std::size_t n_total,
                                            std::uint64_t seed);
}  // namespace detail

}  // namespace riskpred::resample

#endif  // RISKPRED_RESAMPLE_HPP
