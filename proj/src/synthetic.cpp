#include "riskpred/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "riskpred/rng.hpp"

namespace riskpred {

namespace {

// Separation between the class-conditional means, spread over a random dense
// direction so no single feature carries the signal.
constexpr double kClassSeparation = 1.4;

// Each domain's positives split into two lobes at +-offset on its own pair
// of randomly chosen coordinates, centered so the class mean is unchanged.
// The domains use disjoint axes: pooled source labels then both contradict
// the target's lobe structure and inject positive regions the target does
// not have; this is the concept gap an instance-weighted transfer has to
// bridge. The offsets scale with shift_magnitude (zero shift means identical
// organizations), and the centering keeps the class-mean displacement
// between the domains at exactly shift_magnitude.
constexpr double kTargetModeOffsetPerShift = 1.25;
constexpr double kSourceModeOffsetPerShift = 1.5625;
constexpr std::size_t kModeAxesPerDomain = 2;

// A small slice of the negatives in both domains sits close to the positive
// center ("near-miss" cases). Separating them from the positives is what
// needs negative volume, which is where pooled source data pays off. The
// structure is shared by the domains, so it does not contribute to the shift.
constexpr double kConfusableNegFraction = 0.06;
constexpr double kConfusableOffset = 1.0;

std::vector<double> random_unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

struct OrgSpec {
  std::vector<double> mean_neg;
  std::vector<double> mean_pos;        // lobe center (equals the class mean)
  std::vector<double> lobe_offset;     // +- applied to mean_pos, may be zero
  std::vector<double> confusable_mean; // near-positive negative mode
  double confusable_fraction = 0.0;
};

Dataset sample_org(Rng& rng, std::size_t n, double injury_rate, const OrgSpec& spec,
                   Domain tag, double flip_rate,
                   const std::vector<std::string>& names) {
  const std::size_t dim = spec.mean_neg.size();
  const auto n_pos = static_cast<std::size_t>(
      std::llround(injury_rate * static_cast<double>(n)));

  std::vector<int> true_labels(n, 0);
  for (std::size_t i = 0; i < n_pos; ++i) true_labels[i] = 1;
  rng.shuffle(true_labels);

  std::vector<double> features(n * dim);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (true_labels[i]) {
      const double lobe = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < dim; ++j)
        features[i * dim + j] =
            spec.mean_pos[j] + lobe * spec.lobe_offset[j] + rng.normal();
    } else if (spec.confusable_fraction > 0.0 &&
               rng.uniform() < spec.confusable_fraction) {
      for (std::size_t j = 0; j < dim; ++j)
        features[i * dim + j] = spec.confusable_mean[j] + rng.normal();
    } else {
      for (std::size_t j = 0; j < dim; ++j)
        features[i * dim + j] = spec.mean_neg[j] + rng.normal();
    }
    const bool flip = flip_rate > 0.0 && rng.uniform() < flip_rate;
    labels[i] = flip ? 1 - true_labels[i] : true_labels[i];
  }
  return Dataset(std::move(features), dim, std::move(labels), names, std::nullopt,
                 std::vector<Domain>(n, tag));
}

}  // namespace

void SyntheticOrgConfig::validate() const {
  if (n_target_train == 0 || n_source == 0 || n_target_test == 0)
    throw std::invalid_argument("SyntheticOrgConfig: sample counts must be positive");
  if (n_features == 0)
    throw std::invalid_argument("SyntheticOrgConfig: n_features must be positive");
  if (!(injury_rate_target > 0.0 && injury_rate_target < 1.0) ||
      !(injury_rate_source > 0.0 && injury_rate_source < 1.0))
    throw std::invalid_argument("SyntheticOrgConfig: injury rates must be in (0,1)");
  if (!(shift_magnitude >= 0.0) || !std::isfinite(shift_magnitude))
    throw std::invalid_argument("SyntheticOrgConfig: shift_magnitude must be non-negative");
  if (!(noise_flip_rate >= 0.0 && noise_flip_rate < 0.5))
    throw std::invalid_argument("SyntheticOrgConfig: noise_flip_rate must be in [0, 0.5)");
}

OrgPair generate_org_pair(const SyntheticOrgConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.n_features;

  Rng rng(derive_seed(cfg.seed, "org-pair"));
  const auto class_dir = random_unit_vector(rng, d);

  // Shared displacement direction, drawn orthogonal to the class axis so the
  // domain shift moves P(x) without adding or removing class signal.
  std::vector<double> shared_dir = random_unit_vector(rng, d);
  {
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += shared_dir[j] * class_dir[j];
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      shared_dir[j] -= dot * class_dir[j];
      norm2 += shared_dir[j] * shared_dir[j];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : shared_dir) v *= inv;
  }

  // Disjoint axes carrying the per-domain positive lobes plus one axis for
  // the shared confusable-negative mode.
  std::vector<std::size_t> mode_axes;
  const std::size_t n_axes = std::min(2 * kModeAxesPerDomain + 1, d);
  while (mode_axes.size() < n_axes) {
    const std::size_t axis = rng.bounded(d);
    bool seen = false;
    for (std::size_t a : mode_axes) seen = seen || a == axis;
    if (!seen) mode_axes.push_back(axis);
  }

  OrgSpec source_spec{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                      std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                      kConfusableNegFraction};
  OrgSpec target_spec = source_spec;
  for (std::size_t j = 0; j < d; ++j) {
    source_spec.mean_pos[j] = kClassSeparation * class_dir[j];
    target_spec.mean_neg[j] = cfg.shift_magnitude * shared_dir[j];
    target_spec.mean_pos[j] = source_spec.mean_pos[j] + cfg.shift_magnitude * shared_dir[j];
  }
  for (std::size_t k = 0; k < n_axes && k < 2 * kModeAxesPerDomain; ++k) {
    if (k < kModeAxesPerDomain) {
      target_spec.lobe_offset[mode_axes[k]] = kTargetModeOffsetPerShift * cfg.shift_magnitude;
    } else {
      source_spec.lobe_offset[mode_axes[k]] = kSourceModeOffsetPerShift * cfg.shift_magnitude;
    }
  }
  // Confusable negatives hug each domain's positive center, displaced along
  // one shared axis; both domains share the structure, so the class-mean
  // displacement between domains is untouched.
  const std::size_t confusable_axis = mode_axes[n_axes - 1];
  for (std::size_t j = 0; j < d; ++j) {
    source_spec.confusable_mean[j] = source_spec.mean_pos[j];
    target_spec.confusable_mean[j] = target_spec.mean_pos[j];
  }
  source_spec.confusable_mean[confusable_axis] += kConfusableOffset;
  target_spec.confusable_mean[confusable_axis] += kConfusableOffset;

  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));

  Dataset source = sample_org(rng, cfg.n_source, cfg.injury_rate_source, source_spec,
                              Domain::kSource, cfg.noise_flip_rate, names);
  Dataset target_train =
      sample_org(rng, cfg.n_target_train, cfg.injury_rate_target, target_spec,
                 Domain::kTarget, cfg.noise_flip_rate, names);
  Dataset target_test =
      sample_org(rng, cfg.n_target_test, cfg.injury_rate_target, target_spec,
                 Domain::kTarget, cfg.noise_flip_rate, names);
  return {std::move(source), std::move(target_train), std::move(target_test)};
}

}  // namespace riskpred
