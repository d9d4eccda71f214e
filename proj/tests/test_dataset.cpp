#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "riskpred/dataset.hpp"
#include "riskpred/rng.hpp"
#include "riskpred/synthetic.hpp"
#include "test_util.hpp"

using namespace riskpred;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Multiset of rows as sortable tuples for partition checks.
std::vector<std::vector<double>> row_multiset(const Dataset& d) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    std::vector<double> r(d.row(i).begin(), d.row(i).end());
    r.push_back(d.label(i));
    r.push_back(d.weight(i));
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

bool datasets_identical(const Dataset& a, const Dataset& b) {
  if (a.n_samples() != b.n_samples() || a.n_features() != b.n_features()) return false;
  if (a.feature_names() != b.feature_names()) return false;
  if (a.labels() != b.labels()) return false;
  if (a.features() != b.features()) return false;
  if (a.weights() != b.weights()) return false;
  if (a.has_domain_tags() != b.has_domain_tags()) return false;
  if (a.has_domain_tags())
    for (std::size_t i = 0; i < a.n_samples(); ++i)
      if (a.domain_tag(i) != b.domain_tag(i)) return false;
  return true;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("construction enforces invariants") {
  CHECK_THROWS_AS(Dataset({1.0, 2.0}, 2, {0, 1}), std::invalid_argument);  // 1 row, 2 labels
  CHECK_THROWS_AS(Dataset({1.0, std::nan("")}, 1, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({1.0, 2.0}, 1, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Dataset({1.0, 2.0}, 1, {0, 1}, {}, std::vector<double>{1.0, -0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Dataset({1.0, 2.0}, 0, {0, 1}), std::invalid_argument);

  const Dataset d({1.0, 2.0, 3.0, 4.0}, 2, {0, 1});
  CHECK(d.n_samples() == 2);
  CHECK(d.n_features() == 2);
  CHECK(d.weight(0) == 1.0);
  CHECK(d.feature_names() == std::vector<std::string>{"f0", "f1"});
}

TEST_CASE("load_csv parses a simple file") {
  testutil::TempDir tmp("csv");
  write_file(tmp.file("a.csv"), "x,y,label\n1,2,0\n3,4,1\n5,6,0\n");
  const Dataset d = load_csv(tmp.file("a.csv"));
  CHECK(d.n_samples() == 3);
  CHECK(d.n_features() == 2);
  CHECK(d.label(1) == 1);
  CHECK(d.feature(2, 1) == 6.0);
  CHECK_FALSE(d.has_domain_tags());
  CHECK_FALSE(d.has_explicit_weights());
}

TEST_CASE("load_csv reports NaN cells with row and column") {
  testutil::TempDir tmp("csv_nan");
  write_file(tmp.file("bad.csv"), "x,label\n1,0\nNaN,1\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("bad.csv")),
                       doctest::Contains("row 3"), std::runtime_error);
  write_file(tmp.file("bad2.csv"), "x,label\n1,0\nfoo,1\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("bad2.csv")),
                       doctest::Contains("column 'x'"), std::runtime_error);
}

TEST_CASE("load_csv error cases") {
  testutil::TempDir tmp("csv_err");
  CHECK_THROWS_AS(load_csv(tmp.file("missing.csv")), std::runtime_error);
  write_file(tmp.file("dom.csv"), "x,label,domain\n1,0,weird\n");
  CHECK_THROWS_WITH_AS(load_csv(tmp.file("dom.csv")),
                       doctest::Contains("unknown domain tag"), std::runtime_error);
  write_file(tmp.file("lab.csv"), "x,label\n1,3\n");
  CHECK_THROWS_AS(load_csv(tmp.file("lab.csv")), std::runtime_error);
  write_file(tmp.file("short.csv"), "x,y,label\n1,0\n");
  CHECK_THROWS_AS(load_csv(tmp.file("short.csv")), std::runtime_error);
}

TEST_CASE("csv round-trip reproduces the dataset exactly") {
  testutil::TempDir tmp("csv_rt");
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.bounded(40);
    const std::size_t d = 1 + rng.bounded(6);
    std::vector<double> features(n * d);
    std::vector<int> labels(n);
    std::vector<double> weights(n);
    std::vector<Domain> tags(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng.bounded(2));
      weights[i] = rng.uniform() * 10;
      tags[i] = rng.bounded(2) ? Domain::kSource : Domain::kTarget;
      for (std::size_t j = 0; j < d; ++j)
        features[i * d + j] = (rng.uniform() - 0.5) * std::pow(10.0, rng.bounded(7));
    }
    const bool with_w = trial % 2 == 0;
    const bool with_tags = trial % 3 == 0;
    const Dataset original(
        features, d, labels, {},
        with_w ? std::optional(weights) : std::nullopt,
        with_tags ? std::optional(tags) : std::nullopt);
    write_csv(original, tmp.file("rt.csv"));
    const Dataset reloaded = load_csv(tmp.file("rt.csv"));
    CHECK(datasets_identical(original, reloaded));
  }
}

TEST_CASE("stratified_split allocates classes proportionally") {
  // 100 samples, 10 positive, test_fraction 0.2 -> exactly 2 / 18
  std::vector<double> f(100);
  std::vector<int> y(100, 0);
  for (int i = 0; i < 10; ++i) y[i] = 1;
  for (int i = 0; i < 100; ++i) f[i] = i;
  const Dataset d(f, 1, y);
  const auto [train, test] = stratified_split(d, 0.2, 11);
  CHECK(test.n_samples() == 20);
  CHECK(test.count_label(1) == 2);
  CHECK(test.count_label(0) == 18);
  CHECK(train.count_label(1) == 8);
}

TEST_CASE("stratified_split is deterministic and partitions the input") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = testutil::random_dataset(50 + rng.bounded(100), 3, 0.3,
                                               1000 + trial, trial % 2 == 0);
    const auto [tr1, te1] = stratified_split(d, 0.25, 42);
    const auto [tr2, te2] = stratified_split(d, 0.25, 42);
    CHECK(datasets_identical(tr1, tr2));
    CHECK(datasets_identical(te1, te2));

    auto joined = row_multiset(tr1);
    const auto te_rows = row_multiset(te1);
    joined.insert(joined.end(), te_rows.begin(), te_rows.end());
    std::sort(joined.begin(), joined.end());
    CHECK(joined == row_multiset(d));
  }
  const Dataset tiny({1.0, 2.0, 3.0}, 1, {1, 0, 0});
  CHECK_THROWS_AS(stratified_split(tiny, 0.5, 1), std::invalid_argument);
}

TEST_CASE("quantile bins: uniform 1..100 gives edges 10..90") {
  std::vector<double> f(100);
  std::vector<int> y(100, 0);
  y[0] = 1;
  for (int i = 0; i < 100; ++i) f[i] = i + 1;
  const Dataset d(f, 1, y);
  const BinningScheme bins = fit_quantile_bins(d, 10);
  REQUIRE(bins.effective_bins(0) == 10);
  const std::vector<double> expected{10, 20, 30, 40, 50, 60, 70, 80, 90};
  CHECK(bins.edges(0) == expected);
  // 10 samples per bin
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100; ++i) ++counts[bins.bin_index(0, f[i])];
  for (int c : counts) CHECK(c == 10);
}

TEST_CASE("quantile bins: constant feature collapses to one bin") {
  std::vector<double> f(20, 3.5);
  std::vector<int> y(20, 0);
  y[0] = 1;
  const Dataset d(f, 1, y);
  const BinningScheme bins = fit_quantile_bins(d, 10);
  CHECK(bins.effective_bins(0) == 1);
  CHECK(bins.bin_index(0, 3.5) == 0);
}

TEST_CASE("quantile bins: random data lands n/n_bins +- 1 per bin") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 97 + rng.bounded(200);
    std::vector<double> f(n);
    std::vector<int> y(n, 0);
    y[0] = 1;
    std::set<double> seen;
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      do {
        v = rng.uniform();
      } while (!seen.insert(v).second);  // distinct values
      f[i] = v;
    }
    const Dataset d(f, 1, y);
    const int n_bins = 10;
    const BinningScheme bins = fit_quantile_bins(d, n_bins);
    std::vector<std::size_t> counts(bins.effective_bins(0), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t b = bins.bin_index(0, f[i]);
      REQUIRE(b < counts.size());
      ++counts[b];
    }
    // sort-based oracle bound: equal-frequency within one sample
    const std::size_t lo = n / n_bins, hi = n / n_bins + 1;
    for (std::size_t c : counts) {
      CHECK(c >= lo);
      CHECK(c <= hi);
    }
  }
}

TEST_CASE("binning precondition") {
  const Dataset d({1.0, 2.0}, 1, {0, 1});
  CHECK_THROWS_AS(fit_quantile_bins(d, 10), std::invalid_argument);
}

TEST_CASE("generator: deterministic, sized and tagged") {
  SyntheticOrgConfig cfg;
  cfg.n_source = 500;
  cfg.n_target_train = 12225;  // positives: round(0.05 * 12225) = 611
  cfg.n_target_test = 100;
  cfg.n_features = 5;
  cfg.seed = 99;
  const OrgPair a = generate_org_pair(cfg);
  const OrgPair b = generate_org_pair(cfg);
  CHECK(datasets_identical(a.source, b.source));
  CHECK(datasets_identical(a.target_train, b.target_train));
  CHECK(datasets_identical(a.target_test, b.target_test));
  CHECK(a.source.n_samples() == 500);
  CHECK(a.target_train.n_samples() == 12225);
  CHECK(a.target_train.count_label(1) == 611);
  CHECK(a.source.has_domain_tags());
  CHECK(a.source.domain_tag(0) == Domain::kSource);
  CHECK(a.target_test.domain_tag(0) == Domain::kTarget);
}

TEST_CASE("generator: per-class displacement tracks shift_magnitude") {
  SyntheticOrgConfig cfg;
  cfg.n_source = 20000;
  cfg.n_target_train = 20000;
  cfg.n_target_test = 10;
  cfg.n_features = 8;
  cfg.injury_rate_source = 0.5;  // plenty of samples per class
  cfg.injury_rate_target = 0.5;
  cfg.seed = 5;

  for (double shift : {0.0, 2.0}) {
    cfg.shift_magnitude = shift;
    const OrgPair pair = generate_org_pair(cfg);
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<double> mean_s(cfg.n_features, 0.0), mean_t(cfg.n_features, 0.0);
      std::size_t ns = 0, nt = 0;
      for (std::size_t i = 0; i < pair.source.n_samples(); ++i)
        if (pair.source.label(i) == cls) {
          ++ns;
          for (std::size_t j = 0; j < cfg.n_features; ++j)
            mean_s[j] += pair.source.feature(i, j);
        }
      for (std::size_t i = 0; i < pair.target_train.n_samples(); ++i)
        if (pair.target_train.label(i) == cls) {
          ++nt;
          for (std::size_t j = 0; j < cfg.n_features; ++j)
            mean_t[j] += pair.target_train.feature(i, j);
        }
      double disp2 = 0.0;
      for (std::size_t j = 0; j < cfg.n_features; ++j) {
        const double diff = mean_t[j] / nt - mean_s[j] / ns;
        disp2 += diff * diff;
      }
      // E[disp^2] = shift^2 + d (1/ns + 1/nt); allow 3 standard errors-ish slack
      const double expected2 =
          shift * shift + cfg.n_features * (1.0 / ns + 1.0 / nt);
      const double tol = 3.0 * std::sqrt(2.0 * cfg.n_features) *
                             (1.0 / ns + 1.0 / nt) +
                         3.0 * 2.0 * shift * std::sqrt(1.0 / ns + 1.0 / nt);
      CHECK(std::abs(disp2 - expected2) <= tol + 1e-9);
    }
  }
}

TEST_CASE("generator: label noise moves observed prevalence") {
  SyntheticOrgConfig cfg;
  cfg.n_source = 40000;
  cfg.n_target_train = 100;
  cfg.n_target_test = 10;
  cfg.n_features = 3;
  cfg.injury_rate_source = 0.05;
  cfg.noise_flip_rate = 0.2;
  cfg.seed = 21;
  const OrgPair pair = generate_org_pair(cfg);
  const double prevalence =
      static_cast<double>(pair.source.count_label(1)) / pair.source.n_samples();
  // expected 0.05*0.8 + 0.95*0.2 = 0.23
  CHECK(prevalence == doctest::Approx(0.23).epsilon(0.05));
}

TEST_CASE("generator config validation") {
  SyntheticOrgConfig cfg;
  cfg.injury_rate_target = 0.0;
  CHECK_THROWS_AS(generate_org_pair(cfg), std::invalid_argument);
  cfg = {};
  cfg.noise_flip_rate = 0.5;
  CHECK_THROWS_AS(generate_org_pair(cfg), std::invalid_argument);
}

}  // TEST_SUITE
