#ifndef RISKPRED_TESTS_TEST_UTIL_HPP
#define RISKPRED_TESTS_TEST_UTIL_HPP

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "riskpred/dataset.hpp"
#include "riskpred/rng.hpp"

namespace testutil {

// Random two-class dataset with Gaussian class blobs.
inline riskpred::Dataset random_dataset(std::size_t n, std::size_t d,
                                        double positive_rate, std::uint64_t seed,
                                        bool with_weights = false) {
  riskpred::Rng rng(seed);
  std::vector<double> features(n * d);
  std::vector<int> labels(n);
  std::vector<double> weights(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.uniform() < positive_rate ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j)
      features[i * d + j] = rng.normal() + (labels[i] ? 1.0 : 0.0);
    if (with_weights) weights[i] = 1.0 + rng.bounded(3);
  }
  if (labels[0] == labels[1]) labels[1] = 1 - labels[0];  // both classes present
  std::optional<std::vector<double>> w;
  if (with_weights) w = weights;
  return riskpred::Dataset(std::move(features), d, std::move(labels), {}, std::move(w));
}

// Unique path under the build temp area; removed by the caller if desired.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("riskpred_test_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

#endif  // RISKPRED_TESTS_TEST_UTIL_HPP
