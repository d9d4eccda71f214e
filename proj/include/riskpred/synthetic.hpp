#ifndef RISKPRED_SYNTHETIC_HPP
#define RISKPRED_SYNTHETIC_HPP

#include <cstdint>

#include "riskpred/dataset.hpp"

namespace riskpred {

// Configuration for the synthetic organization-pair generator. Defaults match
// the sample counts and imbalance regime the toolkit is designed around:
// 46,046 source rows, 12,225 target training rows, 3,057 target test rows,
// 38 features, 1-7% injury prevalence.
struct SyntheticOrgConfig {
  std::size_t n_target_train = 12225;
  std::size_t n_source = 46046;
  std::size_t n_target_test = 3057;
  std::size_t n_features = 38;
  double injury_rate_target = 0.05;
  double injury_rate_source = 0.03;
  // Mean displacement between the source and target class-conditional
  // distributions, per class, along a random unit direction.
  double shift_magnitude = 1.0;
  double noise_flip_rate = 0.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct OrgPair {
  Dataset source;
  Dataset target_train;
  Dataset target_test;
};

// Class-conditional Gaussian generator. Source classes are unit-variance
// Gaussians separated along a random direction; each target class mean is the
// corresponding source mean displaced by shift_magnitude along its own random
// unit direction, which shifts both the covariates and the class boundary.
// Labels are flipped with probability noise_flip_rate after sampling.
// Deterministic given cfg (including seed).
OrgPair generate_org_pair(const SyntheticOrgConfig& cfg);

}  // namespace riskpred

#endif  // RISKPRED_SYNTHETIC_HPP
