#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "riskpred/ensemble.hpp"
#include "riskpred/rng.hpp"
#include "test_util.hpp"

using namespace riskpred;

namespace {

using ensemble::WeakTree;

// Two clear 2-D blobs, n_pos positives at (+2,+2), n_neg negatives at (-2,-2).
Dataset blob_dataset(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed,
                     double spread = 1.0) {
  Rng rng(seed);
  std::vector<double> f;
  std::vector<int> y;
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    const bool pos = i < n_pos;
    f.push_back((pos ? 2.0 : -2.0) + spread * rng.normal());
    f.push_back((pos ? 2.0 : -2.0) + spread * rng.normal());
    y.push_back(pos ? 1 : 0);
  }
  return Dataset(f, 2, y);
}

double training_accuracy(const std::vector<double>& scores, const Dataset& d) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.n_samples(); ++i)
    if ((scores[i] >= 0.5 ? 1 : 0) == d.label(i)) ++correct;
  return static_cast<double>(correct) / d.n_samples();
}

WeakTree leaf_tree(double prob) {
  return WeakTree({ensemble::WeakTreeNode{-1, 0.0, -1, -1, prob}});
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("weak tree separates an obvious threshold") {
  const std::vector<double> f{0.0, 1.0, 2.0, 10.0, 11.0, 12.0};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const std::vector<double> w(6, 1.0);
  const WeakTree tree = WeakTree::fit(f, 1, y, w, 2);
  CHECK(tree.predict_proba(std::vector<double>{1.0}) == 0.0);
  CHECK(tree.predict_proba(std::vector<double>{11.0}) == 1.0);
}

TEST_CASE("weak tree respects weights and ignores zero-weight rows") {
  const std::vector<double> f{0.0, 1.0};
  const std::vector<int> y{0, 1};
  const WeakTree t = WeakTree::fit(f, 1, y, std::vector<double>{1.0, 0.0}, 3);
  // only the negative row remains; no split possible
  CHECK(t.predict_proba(std::vector<double>{5.0}) == 0.0);
}

TEST_CASE("pseudo-loss: constant half-confidence learner scores exactly 0.5") {
  const std::size_t n = 16;  // power of two keeps the sum exact
  const std::vector<double> dist(n, 1.0 / n);
  const std::vector<double> proba(n, 0.5);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; i += 3) labels[i] = 1;
  CHECK(ensemble::pseudo_loss(dist, proba, labels) == 0.5);
}

TEST_CASE("pseudo-loss: perfect learner scores 0 and keeps D uniform") {
  const std::size_t n = 8;
  const std::vector<double> dist(n, 1.0 / n);
  std::vector<int> labels{1, 0, 1, 0, 0, 0, 1, 0};
  std::vector<double> proba(n);
  for (std::size_t i = 0; i < n; ++i) proba[i] = labels[i] ? 1.0 : 0.0;
  CHECK(ensemble::pseudo_loss(dist, proba, labels) == 0.0);
  const auto next = ensemble::boost_reweight(dist, proba, labels, 1e-10);
  for (double v : next) CHECK(v == doctest::Approx(1.0 / n).epsilon(1e-12));
}

TEST_CASE("underbagging: bag composition matches the ratio") {
  const Dataset train = blob_dataset(50, 400, 7);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 5;
  cfg.seed = 3;
  ensemble::BagTrace trace;
  const auto model = ensemble::fit_underbagging(train, cfg, &trace);
  REQUIRE(trace.size() == 5);
  for (const auto& bag : trace) {
    CHECK(bag.minority_rows.size() == 50);
    CHECK(bag.majority_rows.size() == 50);  // 1:1 ratio -> 100-row bags
  }
  CHECK(model.members().size() == 5);
}

TEST_CASE("underbagging with one member equals that member") {
  const Dataset train = blob_dataset(20, 60, 8);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 1;
  cfg.seed = 5;
  const auto model = ensemble::fit_underbagging(train, cfg);
  REQUIRE(model.members().size() == 1);
  for (std::size_t i = 0; i < train.n_samples(); ++i)
    CHECK(model.predict_proba(train.row(i)) ==
          model.members()[0].predict_proba(train.row(i)));
}

TEST_CASE("underbagging on balanced data keeps full copies") {
  const Dataset train = blob_dataset(25, 25, 9);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 3;
  ensemble::BagTrace trace;
  ensemble::fit_underbagging(train, cfg, &trace);
  for (const auto& bag : trace) {
    CHECK(bag.minority_rows.size() == 25);
    REQUIRE(bag.majority_rows.size() == 25);
    // sorted undersample of 25-of-25 is every majority row
    for (std::size_t k = 0; k < 25; ++k) CHECK(bag.majority_rows[k] == 25 + k);
  }
}

TEST_CASE("smotebagging: ramp endpoint and class counts") {
  const Dataset train = blob_dataset(10, 30, 10);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 4;
  cfg.seed = 11;
  ensemble::BagTrace trace;
  ensemble::fit_smotebagging(train, cfg, &trace);
  REQUIRE(trace.size() == 4);
  for (std::size_t b = 0; b < trace.size(); ++b) {
    const auto& bag = trace[b];
    CHECK(bag.majority_rows.size() == 30);
    // minority total = originals + oversampled + smote = target 30
    CHECK(bag.minority_rows.size() + bag.n_smote == 30);
    CHECK(bag.n_smote + bag.n_oversampled == 20);
    const double expected_smote = std::llround(20.0 * (b + 1) / 4.0);
    CHECK(bag.n_smote == expected_smote);
  }
  CHECK(trace.back().n_oversampled == 0);  // last member is 100% SMOTE
  CHECK(trace.back().n_smote == 20);
}

TEST_CASE("smotebagging synthetics stay in the minority hull") {
  const Dataset train = blob_dataset(15, 60, 12);
  double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
  for (std::size_t i = 0; i < train.n_samples(); ++i) {
    if (train.label(i) != 1) continue;
    for (int f = 0; f < 2; ++f) {
      lo[f] = std::min(lo[f], train.feature(i, f));
      hi[f] = std::max(hi[f], train.feature(i, f));
    }
  }
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 3;
  ensemble::BagTrace trace;
  ensemble::fit_smotebagging(train, cfg, &trace);
  for (const auto& bag : trace) {
    REQUIRE(bag.synthetic_features.size() == bag.n_smote * 2);
    for (std::size_t s = 0; s < bag.n_smote; ++s)
      for (int f = 0; f < 2; ++f) {
        CHECK(bag.synthetic_features[s * 2 + f] >= lo[f]);
        CHECK(bag.synthetic_features[s * 2 + f] <= hi[f]);
      }
  }
}

TEST_CASE("rusboost: traced state matches the scalar AdaBoost.M2 oracle") {
  const Dataset train = blob_dataset(5, 15, 13, 1.5);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 2;
  cfg.seed = 21;
  ensemble::BoostTrace trace;
  const auto model = ensemble::fit_rusboost(train, cfg, &trace);
  REQUIRE(model.members().size() == 2);
  REQUIRE(trace.distributions.size() == 3);
  REQUIRE(trace.epsilons.size() == 2);

  std::vector<double> dist = trace.distributions[0];
  for (double v : dist) CHECK(v == doctest::Approx(1.0 / 20).epsilon(1e-15));
  for (std::size_t t = 0; t < 2; ++t) {
    std::vector<double> proba(train.n_samples());
    for (std::size_t i = 0; i < train.n_samples(); ++i)
      proba[i] = model.members()[t].predict_proba(train.row(i));
    const auto step = testoracle::adaboost_m2_step(dist, proba, train.labels(), 1e-10);
    CHECK(std::abs(step.epsilon - trace.epsilons[t]) <= 1e-12);
    CHECK(std::abs(step.beta - model.betas()[t]) <= 1e-12);
    REQUIRE(step.next_dist.size() == trace.distributions[t + 1].size());
    for (std::size_t i = 0; i < step.next_dist.size(); ++i)
      CHECK(std::abs(step.next_dist[i] - trace.distributions[t + 1][i]) <= 1e-12);
    dist = step.next_dist;
  }
}

TEST_CASE("boosting invariants: D sums to one, eps < 0.5, beta in (0,1)") {
  const Dataset train = blob_dataset(8, 40, 14, 2.5);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 12;
  cfg.seed = 2;
  for (int variant = 0; variant < 2; ++variant) {
    ensemble::BoostTrace trace;
    const auto model = variant == 0 ? ensemble::fit_rusboost(train, cfg, &trace)
                                    : ensemble::fit_smoteboost(train, cfg, &trace);
    for (const auto& dist : trace.distributions) {
      double total = 0.0;
      for (double v : dist) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    for (double eps : trace.epsilons) {
      CHECK(eps >= 0.0);
      CHECK(eps < 0.5);
    }
    for (double beta : model.betas()) {
      CHECK(beta > 0.0);
      CHECK(beta < 1.0);
    }
  }
}

TEST_CASE("smoteboost with satisfied ratio reduces to plain AdaBoost.M2") {
  // balanced data: no undersampling, no synthetics -> both loops coincide
  const Dataset train = blob_dataset(12, 12, 15, 2.0);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 5;
  cfg.seed = 4;
  ensemble::BoostTrace rus_trace, smote_trace;
  const auto rus = ensemble::fit_rusboost(train, cfg, &rus_trace);
  const auto smote = ensemble::fit_smoteboost(train, cfg, &smote_trace);
  REQUIRE(rus.members().size() == smote.members().size());
  CHECK(rus.betas() == smote.betas());
  for (std::size_t i = 0; i < train.n_samples(); ++i)
    CHECK(rus.predict_proba(train.row(i)) == smote.predict_proba(train.row(i)));
}

TEST_CASE("smoteboost: traced score matches the scalar oracle") {
  const Dataset train = blob_dataset(5, 15, 16, 1.5);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 2;
  cfg.seed = 31;
  ensemble::BoostTrace trace;
  const auto model = ensemble::fit_smoteboost(train, cfg, &trace);
  // oracle score from member predictions and traced betas
  for (std::size_t i = 0; i < train.n_samples(); ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < model.members().size(); ++t) {
      const double wt = std::log(1.0 / trace.betas[t]);
      num += wt * model.members()[t].predict_proba(train.row(i));
      den += wt;
    }
    CHECK(std::abs(model.predict_proba(train.row(i)) - num / den) <= 1e-12);
  }
}

TEST_CASE("combination rules: single member, identical members, hand-weighted") {
  const std::vector<double> x{0.0};
  const ensemble::BaggedEnsemble one({leaf_tree(0.7)}, "underbagging");
  CHECK(one.predict_proba(x) == 0.7);
  const ensemble::BaggedEnsemble same({leaf_tree(0.4), leaf_tree(0.4), leaf_tree(0.4)},
                                      "underbagging");
  CHECK(same.predict_proba(x) == doctest::Approx(0.4).epsilon(1e-15));

  const std::vector<double> betas{0.1, 0.3, 0.45};
  const std::vector<double> probs{0.9, 0.2, 0.6};
  const ensemble::BoostedEnsemble boosted(
      {leaf_tree(probs[0]), leaf_tree(probs[1]), leaf_tree(probs[2])}, betas,
      "rusboost");
  double num = 0.0, den = 0.0;
  for (int t = 0; t < 3; ++t) {
    num += std::log(1.0 / betas[t]) * probs[t];
    den += std::log(1.0 / betas[t]);
  }
  CHECK(boosted.predict_proba(x) == doctest::Approx(num / den).epsilon(1e-15));
  CHECK(boosted.predict_proba(x) >= 0.0);
  CHECK(boosted.predict_proba(x) <= 1.0);
}

TEST_CASE("all four methods separate a linearly separable balanced set") {
  const Dataset train = blob_dataset(30, 30, 17, 0.4);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 10;
  cfg.seed = 6;
  CHECK(training_accuracy(ensemble::fit_underbagging(train, cfg).predict_proba(train),
                          train) == 1.0);
  CHECK(training_accuracy(ensemble::fit_smotebagging(train, cfg).predict_proba(train),
                          train) == 1.0);
  CHECK(training_accuracy(ensemble::fit_rusboost(train, cfg).predict_proba(train),
                          train) == 1.0);
  CHECK(training_accuracy(ensemble::fit_smoteboost(train, cfg).predict_proba(train),
                          train) == 1.0);
}

TEST_CASE("fits are seed-deterministic and thread-count independent") {
  const Dataset train = blob_dataset(20, 80, 18, 2.0);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 6;
  cfg.seed = 77;
  const auto a = ensemble::fit_underbagging(train, cfg);
  cfg.n_threads = 3;
  const auto b = ensemble::fit_underbagging(train, cfg);
  CHECK(a.to_json() == b.to_json());

  cfg.n_threads = 1;
  const auto r1 = ensemble::fit_rusboost(train, cfg);
  const auto r2 = ensemble::fit_rusboost(train, cfg);
  CHECK(r1.to_json() == r2.to_json());
}

TEST_CASE("single-class data is rejected") {
  const Dataset bad({1.0, 2.0, 3.0}, 1, {1, 1, 1});
  ensemble::EnsembleConfig cfg;
  CHECK_THROWS_AS(ensemble::fit_underbagging(bad, cfg), std::invalid_argument);
  CHECK_THROWS_AS(ensemble::fit_smotebagging(bad, cfg), std::invalid_argument);
  CHECK_THROWS_AS(ensemble::fit_rusboost(bad, cfg), std::invalid_argument);
  CHECK_THROWS_AS(ensemble::fit_smoteboost(bad, cfg), std::invalid_argument);
}

TEST_CASE("ensemble persistence round-trips") {
  const Dataset train = blob_dataset(10, 40, 19);
  ensemble::EnsembleConfig cfg;
  cfg.n_members = 4;
  const auto bagged = ensemble::fit_smotebagging(train, cfg);
  CHECK(ensemble::BaggedEnsemble::from_json(bagged.to_json()).to_json() ==
        bagged.to_json());
  const auto boosted = ensemble::fit_rusboost(train, cfg);
  const auto reloaded = ensemble::BoostedEnsemble::from_json(boosted.to_json());
  CHECK(reloaded.to_json() == boosted.to_json());
  for (std::size_t i = 0; i < train.n_samples(); ++i)
    CHECK(reloaded.predict_proba(train.row(i)) == boosted.predict_proba(train.row(i)));
}

}  // TEST_SUITE
