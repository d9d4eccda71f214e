#ifndef RISKPRED_TRANSFER_HPP
#define RISKPRED_TRANSFER_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "riskpred/dataset.hpp"
#include "riskpred/gbdt.hpp"

namespace riskpred::transfer {

// L2-regularized logistic regression separating source (label 1) from target
// (label 0). Fitted by Newton iterations on standardized features; the stored
// parameters are mapped back to the original feature scale, so
// margin(x) = x . w_lr + c_lr directly.
struct DomainClassifier {
  std::vector<double> w_lr;
  double c_lr = 0.0;
  double margin(std::span<const double> x) const;
};

DomainClassifier fit_domain_classifier(const Dataset& source,
                                       const Dataset& target, double lambda);

// Per-domain diagonal Gaussian density estimates with a variance floor.
struct GaussianDomainModel {
  std::vector<double> mu_source, var_source;
  std::vector<double> mu_target, var_target;
};

GaussianDomainModel fit_gaussian_domain_model(const Dataset& source,
                                              const Dataset& target,
                                              double var_floor = 1e-6);

enum class TransferMethod { kT, kS, kSUnionT, kOnes, kGaussian, kHybrid };

std::string to_string(TransferMethod m);
TransferMethod transfer_method_from_string(const std::string& s);

struct TransferConfig {
  double alpha = 0.7;
  TransferMethod method = TransferMethod::kHybrid;
  double clip_lo = 1e-3;  // bounds for w_domain
  double clip_hi = 1e3;
  double lr_lambda = 1.0;  // domain classifier regularization
  std::uint64_t seed = 0;

  void validate() const;
};

// w_domain = P_T(x)/P_S(x) ~ exp(-(x.w_lr + c_lr)), clipped to [lo, hi].
std::vector<double> domain_weights_discriminative(const DomainClassifier& dc,
                                                  const Dataset& source,
                                                  double clip_lo, double clip_hi);

// w_domain = N(x; mu_T, var_T) / N(x; mu_S, var_S), computed in log space,
// then exponentiated and clipped.
std::vector<double> domain_weights_gaussian(const GaussianDomainModel& g,
                                            const Dataset& source,
                                            double clip_lo, double clip_hi);

// Trains the base model on source + target with injury labels; each source
// sample's weight is its distance to the decision boundary |margin| divided
// by the mean absolute margin, positive when the model's decision matches the
// label and negative otherwise.
std::vector<double> task_weights(const Dataset& source, const Dataset& target,
                                 const gbdt::GbdtConfig& base_cfg);

// The weighting rule above applied to precomputed margins. A zero margin
// gives weight 0; a constant-zero margin vector gives all zeros.
std::vector<double> task_weights_from_margins(std::span<const double> margins,
                                              std::span<const int> labels);

// max(0, w_domain + w_task) elementwise.
std::vector<double> hybrid_weights(std::span<const double> w_domain,
                                   std::span<const double> w_task);

// Concatenates target then source. Target rows carry weight alpha * N / N_T,
// source row j carries (1 - alpha) * N * w_j / sum(w), with N = N_T + N_S;
// the target share of the total mass is exactly alpha.
Dataset alpha_mixed_training_set(const Dataset& target, const Dataset& source,
                                 std::span<const double> w_combined,
                                 double alpha);

// Weight vectors for the source rows plus notes on clipping/normalization.
struct SourceWeights {
  std::vector<double> w_domain;
  std::vector<double> w_task;
  std::vector<double> w_combined;
  std::vector<std::string> notes;
};

// Source weights for the weighting methods (kOnes, kGaussian, kHybrid).
SourceWeights compute_source_weights(const Dataset& source,
                                     const Dataset& target,
                                     const TransferConfig& cfg,
                                     const gbdt::GbdtConfig& base_cfg);

void write_weights_csv(const SourceWeights& w, const std::string& path);

// Trains the base model per the configured method: T and S on a single
// domain, S_UNION_T on the plain union, and the weighting methods on the
// alpha-mixed set. Precomputed weights may be passed to avoid refitting the
// domain classifier / task model (they do not depend on alpha).
gbdt::GbdtModel fit_transfer_model(const Dataset& source, const Dataset& target,
                                   const TransferConfig& cfg,
                                   const gbdt::GbdtConfig& base_cfg,
                                   const SourceWeights* precomputed = nullptr);

}  // namespace riskpred::transfer

#endif  // RISKPRED_TRANSFER_HPP
