#ifndef RISKPRED_DATASET_HPP
#define RISKPRED_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace riskpred {

enum class Domain : std::uint8_t { kSource, kTarget };

// Immutable sample container: dense feature matrix, binary labels, per-sample
// weights (all 1 unless given) and optional source/target tags. All invariants
// are checked at construction; afterwards the object is safe to share across
// threads.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::size_t n_features,
          std::vector<int> labels,
          std::vector<std::string> feature_names = {},
          std::optional<std::vector<double>> weights = std::nullopt,
          std::optional<std::vector<Domain>> domain_tags = std::nullopt);

  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_features() const { return n_features_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  double feature(std::size_t i, std::size_t j) const {
    return features_[i * n_features_ + j];
  }
  int label(std::size_t i) const { return labels_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  const std::vector<double>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& weights() const { return weights_; }
  bool has_explicit_weights() const { return has_explicit_weights_; }

  bool has_domain_tags() const { return domain_tags_.has_value(); }
  Domain domain_tag(std::size_t i) const { return (*domain_tags_)[i]; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::size_t count_label(int label) const;
  double total_weight() const;

  // Rows listed in `rows` (indices may repeat), preserving order.
  Dataset select(const std::vector<std::size_t>& rows) const;
  // New dataset with the same rows but different weights / labels / tags.
  Dataset with_weights(std::vector<double> weights) const;
  Dataset with_domain_tag(Domain tag) const;
  static Dataset concat(const Dataset& a, const Dataset& b);

 private:
  std::size_t n_samples_;
  std::size_t n_features_;
  std::vector<double> features_;  // row-major
  std::vector<int> labels_;
  std::vector<double> weights_;
  bool has_explicit_weights_;
  std::optional<std::vector<Domain>> domain_tags_;
  std::vector<std::string> feature_names_;
};

// CSV column mapping. Columns not named here are features, in header order.
struct CsvSchema {
  std::string label_column = "label";
  std::string domain_column = "domain";
  std::string weight_column = "weight";
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(const Dataset& d, const std::string& path,
               const CsvSchema& schema = {});

// Seed-deterministic stratified partition into (train, test). Per-class test
// counts are round(n_class * test_fraction), so prevalence in each split is
// within one sample of proportional.
std::pair<Dataset, Dataset> stratified_split(const Dataset& d,
                                             double test_fraction,
                                             std::uint64_t seed);

// Equal-frequency binning. Edges are the i/n_bins empirical quantiles with
// duplicates merged, so low-cardinality features may end up with fewer
// effective bins. bin_index(f, x) = number of edges < x.
class BinningScheme {
 public:
  BinningScheme(std::vector<std::vector<double>> edges, int n_bins_requested);

  std::size_t n_features() const { return edges_.size(); }
  int n_bins_requested() const { return n_bins_requested_; }
  std::size_t effective_bins(std::size_t feature) const {
    return edges_[feature].size() + 1;
  }
  const std::vector<double>& edges(std::size_t feature) const {
    return edges_[feature];
  }
  std::size_t bin_index(std::size_t feature, double value) const;
  // "(-inf, a]", "(a, b]", ..., "(z, +inf)" label for a bin.
  std::string bin_label(std::size_t feature, std::size_t bin) const;

 private:
  std::vector<std::vector<double>> edges_;  // strictly increasing per feature
  int n_bins_requested_;
};

BinningScheme fit_quantile_bins(const Dataset& d, int n_bins = 10);

}  // namespace riskpred

#endif  // RISKPRED_DATASET_HPP
