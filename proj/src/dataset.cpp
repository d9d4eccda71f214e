#include "riskpred/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "riskpred/rng.hpp"

namespace riskpred {

namespace {

std::vector<std::string> default_feature_names(std::size_t n_features) {
  std::vector<std::string> names;
  names.reserve(n_features);
  for (std::size_t j = 0; j < n_features; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

}  // namespace

Dataset::Dataset(std::vector<double> features, std::size_t n_features,
                 std::vector<int> labels,
                 std::vector<std::string> feature_names,
                 std::optional<std::vector<double>> weights,
                 std::optional<std::vector<Domain>> domain_tags)
    : n_features_(n_features),
      features_(std::move(features)),
      labels_(std::move(labels)),
      domain_tags_(std::move(domain_tags)) {
  if (n_features_ == 0) throw std::invalid_argument("Dataset: n_features must be positive");
  if (features_.size() % n_features_ != 0)
    throw std::invalid_argument("Dataset: feature buffer size not a multiple of n_features");
  n_samples_ = features_.size() / n_features_;
  if (labels_.size() != n_samples_)
    throw std::invalid_argument("Dataset: labels length does not match n_samples");
  for (double v : features_)
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature value");
  for (int y : labels_)
    if (y != 0 && y != 1) throw std::invalid_argument("Dataset: labels must be 0 or 1");

  has_explicit_weights_ = weights.has_value();
  if (weights) {
    weights_ = std::move(*weights);
    if (weights_.size() != n_samples_)
      throw std::invalid_argument("Dataset: weights length does not match n_samples");
    for (double w : weights_)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("Dataset: weights must be finite and non-negative");
  } else {
    weights_.assign(n_samples_, 1.0);
  }

  if (domain_tags_ && domain_tags_->size() != n_samples_)
    throw std::invalid_argument("Dataset: domain_tags length does not match n_samples");

  if (feature_names.empty()) {
    feature_names_ = default_feature_names(n_features_);
  } else {
    if (feature_names.size() != n_features_)
      throw std::invalid_argument("Dataset: feature_names length does not match n_features");
    feature_names_ = std::move(feature_names);
  }
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

double Dataset::total_weight() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const {
  std::vector<double> f;
  f.reserve(rows.size() * n_features_);
  std::vector<int> y;
  y.reserve(rows.size());
  std::vector<double> w;
  w.reserve(rows.size());
  std::optional<std::vector<Domain>> tags;
  if (domain_tags_) tags.emplace();
  for (std::size_t i : rows) {
    if (i >= n_samples_) throw std::out_of_range("Dataset::select: row out of range");
    auto r = row(i);
    f.insert(f.end(), r.begin(), r.end());
    y.push_back(labels_[i]);
    w.push_back(weights_[i]);
    if (tags) tags->push_back((*domain_tags_)[i]);
  }
  std::optional<std::vector<double>> wopt;
  if (has_explicit_weights_) wopt = std::move(w);
  return Dataset(std::move(f), n_features_, std::move(y), feature_names_,
                 std::move(wopt), std::move(tags));
}

Dataset Dataset::with_weights(std::vector<double> weights) const {
  return Dataset(features_, n_features_, labels_, feature_names_,
                 std::move(weights), domain_tags_);
}

Dataset Dataset::with_domain_tag(Domain tag) const {
  std::vector<Domain> tags(n_samples_, tag);
  std::optional<std::vector<double>> wopt;
  if (has_explicit_weights_) wopt = weights_;
  return Dataset(features_, n_features_, labels_, feature_names_,
                 std::move(wopt), std::move(tags));
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.n_features_ != b.n_features_)
    throw std::invalid_argument("Dataset::concat: feature count mismatch");
  std::vector<double> f = a.features_;
  f.insert(f.end(), b.features_.begin(), b.features_.end());
  std::vector<int> y = a.labels_;
  y.insert(y.end(), b.labels_.begin(), b.labels_.end());
  std::optional<std::vector<double>> w;
  if (a.has_explicit_weights_ || b.has_explicit_weights_) {
    w = a.weights_;
    w->insert(w->end(), b.weights_.begin(), b.weights_.end());
  }
  std::optional<std::vector<Domain>> tags;
  if (a.domain_tags_ && b.domain_tags_) {
    tags = *a.domain_tags_;
    tags->insert(tags->end(), b.domain_tags_->begin(), b.domain_tags_->end());
  }
  return Dataset(std::move(f), a.n_features_, std::move(y), a.feature_names_,
                 std::move(w), std::move(tags));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_double_cell(const std::string& cell, std::size_t row1,
                         const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw CsvError("unparsable value '" + cell + "' at row " + std::to_string(row1) +
                   ", column '" + column + "'");
  if (!std::isfinite(v))
    throw CsvError("non-finite value '" + cell + "' at row " + std::to_string(row1) +
                   ", column '" + column + "'");
  return v;
}

void append_double_17g(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path + "'");
  const std::vector<std::string> header = split_line(line);

  std::unordered_set<std::string> seen;
  for (const auto& h : header)
    if (!seen.insert(h).second)
      throw CsvError("duplicate column '" + h + "' in header of '" + path + "'");

  int label_col = -1, domain_col = -1, weight_col = -1;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) {
      label_col = static_cast<int>(c);
    } else if (header[c] == schema.domain_column) {
      domain_col = static_cast<int>(c);
    } else if (header[c] == schema.weight_column) {
      weight_col = static_cast<int>(c);
    } else {
      feature_cols.push_back(c);
      feature_names.push_back(header[c]);
    }
  }
  if (label_col < 0)
    throw CsvError("missing label column '" + schema.label_column + "' in '" + path + "'");
  if (feature_cols.empty())
    throw CsvError("no feature columns in '" + path + "'");

  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> weights;
  std::vector<Domain> tags;
  std::size_t row1 = 1;  // file line number; header is line 1
  while (std::getline(in, line)) {
    ++row1;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw CsvError("row " + std::to_string(row1) + " has " + std::to_string(cells.size()) +
                     " cells, expected " + std::to_string(header.size()));
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      features.push_back(parse_double_cell(cells[feature_cols[k]], row1, feature_names[k]));
    const double y = parse_double_cell(cells[label_col], row1, schema.label_column);
    if (y != 0.0 && y != 1.0)
      throw CsvError("label must be 0 or 1 at row " + std::to_string(row1));
    labels.push_back(static_cast<int>(y));
    if (weight_col >= 0) {
      const double w = parse_double_cell(cells[weight_col], row1, schema.weight_column);
      if (w < 0.0) throw CsvError("negative weight at row " + std::to_string(row1));
      weights.push_back(w);
    }
    if (domain_col >= 0) {
      const std::string& tag = cells[domain_col];
      if (tag == "source") {
        tags.push_back(Domain::kSource);
      } else if (tag == "target") {
        tags.push_back(Domain::kTarget);
      } else {
        throw CsvError("unknown domain tag '" + tag + "' at row " + std::to_string(row1));
      }
    }
  }

  std::optional<std::vector<double>> wopt;
  if (weight_col >= 0) wopt = std::move(weights);
  std::optional<std::vector<Domain>> topt;
  if (domain_col >= 0) topt = std::move(tags);
  return Dataset(std::move(features), feature_cols.size(), std::move(labels),
                 std::move(feature_names), std::move(wopt), std::move(topt));
}

void write_csv(const Dataset& d, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open file '" + path + "'");

  std::string buf;
  for (std::size_t j = 0; j < d.n_features(); ++j) {
    buf += d.feature_names()[j];
    buf += ',';
  }
  buf += schema.label_column;
  if (d.has_domain_tags()) {
    buf += ',';
    buf += schema.domain_column;
  }
  if (d.has_explicit_weights()) {
    buf += ',';
    buf += schema.weight_column;
  }
  buf += '\n';

  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      append_double_17g(buf, d.feature(i, j));
      buf += ',';
    }
    buf += d.label(i) ? '1' : '0';
    if (d.has_domain_tags()) {
      buf += (d.domain_tag(i) == Domain::kSource) ? ",source" : ",target";
    }
    if (d.has_explicit_weights()) {
      buf += ',';
      append_double_17g(buf, d.weight(i));
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting and binning

std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("stratified_split: test_fraction must be in (0,1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < d.n_samples(); ++i) by_class[d.label(i)].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < 2)
      throw std::invalid_argument("stratified_split: class " + std::to_string(c) +
                                  " has fewer than 2 samples");

  Rng rng(derive_seed(seed, "stratified-split"));
  std::vector<std::size_t> test_idx, train_idx;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[c];
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_test ? test_idx : train_idx).push_back(idx[k]);
  }
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {d.select(train_idx), d.select(test_idx)};
}

BinningScheme::BinningScheme(std::vector<std::vector<double>> edges, int n_bins_requested)
    : edges_(std::move(edges)), n_bins_requested_(n_bins_requested) {
  if (n_bins_requested_ < 2)
    throw std::invalid_argument("BinningScheme: n_bins must be at least 2");
  for (const auto& e : edges_)
    for (std::size_t k = 1; k < e.size(); ++k)
      if (!(e[k] > e[k - 1]))
        throw std::invalid_argument("BinningScheme: edges must be strictly increasing");
}

std::size_t BinningScheme::bin_index(std::size_t feature, double value) const {
  const auto& e = edges_[feature];
  return static_cast<std::size_t>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

std::string BinningScheme::bin_label(std::size_t feature, std::size_t bin) const {
  const auto& e = edges_[feature];
  char buf[96];
  if (e.empty()) return "(-inf, +inf)";
  if (bin == 0) {
    std::snprintf(buf, sizeof buf, "(-inf, %.6g]", e.front());
  } else if (bin >= e.size()) {
    std::snprintf(buf, sizeof buf, "(%.6g, +inf)", e.back());
  } else {
    std::snprintf(buf, sizeof buf, "(%.6g, %.6g]", e[bin - 1], e[bin]);
  }
  return buf;
}

BinningScheme fit_quantile_bins(const Dataset& d, int n_bins) {
  if (n_bins < 2) throw std::invalid_argument("fit_quantile_bins: n_bins must be >= 2");
  const std::size_t n = d.n_samples();
  if (n < static_cast<std::size_t>(n_bins))
    throw std::invalid_argument("fit_quantile_bins: fewer samples than bins");

  std::vector<std::vector<double>> edges(d.n_features());
  std::vector<double> col(n);
  for (std::size_t f = 0; f < d.n_features(); ++f) {
    for (std::size_t i = 0; i < n; ++i) col[i] = d.feature(i, f);
    std::sort(col.begin(), col.end());
    std::vector<double>& e = edges[f];
    for (int q = 1; q < n_bins; ++q) {
      // quantile at q/n_bins: the ceil(q*n/n_bins)-th smallest value
      const std::size_t pos =
          (static_cast<std::size_t>(q) * n + n_bins - 1) / static_cast<std::size_t>(n_bins);
      const double v = col[pos - 1];
      if (v < col.back() && (e.empty() || v > e.back())) e.push_back(v);
    }
  }
  return BinningScheme(std::move(edges), n_bins);
}

}  // namespace riskpred
