#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "riskpred/eval.hpp"
#include "riskpred/rng.hpp"

using namespace riskpred;

namespace {

struct Scored {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<double> weights;
};

Scored random_scored(Rng& rng, std::size_t n, bool weighted, bool integer_weights = false) {
  Scored s;
  s.scores.resize(n);
  s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.scores[i] = rng.bounded(4) == 0 ? 0.5 : rng.uniform();  // some ties
    s.labels[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  s.labels[0] = 1;
  s.labels[n - 1] = 0;
  if (weighted) {
    s.weights.resize(n);
    for (auto& w : s.weights)
      w = integer_weights ? static_cast<double>(1 + rng.bounded(4)) : rng.uniform() * 2.0;
  }
  return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("confusion at extreme thresholds") {
  const std::vector<double> scores{0.1, 0.4, 0.8};
  const std::vector<int> labels{0, 1, 1};
  auto c = eval::confusion_at_threshold(scores, labels, {}, 0.9);
  CHECK(c.tp == 0);
  CHECK(c.fp == 0);
  CHECK(c.fn == 2);
  CHECK(c.tn == 1);
  c = eval::confusion_at_threshold(scores, labels, {}, 0.1);
  CHECK(c.tn == 0);
  CHECK(c.fn == 0);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
}

TEST_CASE("confusion matches the scalar oracle on random data") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_scored(rng, 1 + rng.bounded(300), trial % 2 == 1);
    const double t = rng.uniform();
    const auto c = eval::confusion_at_threshold(s.scores, s.labels, s.weights, t);
    const auto o = testoracle::confusion(s.scores, s.labels, s.weights, t);
    CHECK(c.tp == o.tp);
    CHECK(c.fp == o.fp);
    CHECK(c.tn == o.tn);
    CHECK(c.fn == o.fn);
  }
}

TEST_CASE("macro F1 special cases") {
  // perfect classifier
  eval::ConfusionCounts perfect{10, 0, 90, 0};
  CHECK(eval::macro_f1(perfect) == 1.0);
  // all-negative prediction on balanced data: F1+ = 0, F1- = 2/3
  eval::ConfusionCounts all_neg{0, 0, 50, 50};
  CHECK(eval::macro_f1(all_neg) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // 0/0 convention
  eval::ConfusionCounts empty{0, 0, 0, 0};
  CHECK(eval::macro_f1(empty) == 0.0);
}

TEST_CASE("aucpr: perfect ranking gives 1, constant scores give prevalence") {
  const std::vector<int> labels{1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  std::vector<double> perfect{0.9, 0.8, 0.4, 0.3, 0.2, 0.1, 0.1, 0.1, 0.05, 0.01};
  CHECK(eval::pr_curve_and_aucpr(perfect, labels, {}).aucpr == doctest::Approx(1.0));
  const std::vector<double> constant(10, 0.7);
  CHECK(eval::pr_curve_and_aucpr(constant, labels, {}).aucpr ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(
      eval::pr_curve_and_aucpr(constant, std::vector<int>(10, 0), {}),
      std::invalid_argument);
}

TEST_CASE("aucpr matches exhaustive threshold-enumeration oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = random_scored(rng, 2 + rng.bounded(30), trial % 2 == 1);
    const double got = eval::pr_curve_and_aucpr(s.scores, s.labels, s.weights).aucpr;
    const double want = testoracle::aucpr(s.scores, s.labels, s.weights);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("roc: staircase endpoints and perfect classifier") {
  const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> labels{1, 1, 0, 0};
  const auto pts = eval::roc_points(scores, labels, {});
  CHECK(pts.front().fpr == 0.0);
  CHECK(pts.front().tpr == 0.0);
  CHECK(pts.back().fpr == 1.0);
  CHECK(pts.back().tpr == 1.0);
  bool hits_top_left = false;
  for (const auto& p : pts)
    if (p.fpr == 0.0 && p.tpr == 1.0) hits_top_left = true;
  CHECK(hits_top_left);
  CHECK(eval::roc_auc(scores, labels, {}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(eval::roc_points(scores, std::vector<int>(4, 1), {}),
                  std::invalid_argument);
}

TEST_CASE("roc matches oracle and stays monotone") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = random_scored(rng, 2 + rng.bounded(40), trial % 2 == 0);
    const auto got = eval::roc_points(s.scores, s.labels, s.weights);
    const auto want = testoracle::roc(s.scores, s.labels, s.weights);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].fpr == doctest::Approx(want[k].fpr).epsilon(1e-12));
      CHECK(got[k].tpr == doctest::Approx(want[k].tpr).epsilon(1e-12));
      if (k > 0) {
        CHECK(got[k].fpr >= got[k - 1].fpr);
        CHECK(got[k].tpr >= got[k - 1].tpr);
      }
    }
  }
}

TEST_CASE("metrics respect weights: duplicated sample equals doubled weight") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_scored(rng, 3 + rng.bounded(50), true, /*integer_weights=*/true);
    const std::size_t dup = rng.bounded(s.scores.size());

    Scored doubled = s;
    doubled.weights[dup] *= 2.0;
    Scored duplicated = s;
    duplicated.scores.push_back(s.scores[dup]);
    duplicated.labels.push_back(s.labels[dup]);
    duplicated.weights.push_back(s.weights[dup]);

    CHECK(eval::pr_curve_and_aucpr(doubled.scores, doubled.labels, doubled.weights).aucpr ==
          eval::pr_curve_and_aucpr(duplicated.scores, duplicated.labels,
                                   duplicated.weights)
              .aucpr);
    const double t = rng.uniform();
    const auto c1 =
        eval::confusion_at_threshold(doubled.scores, doubled.labels, doubled.weights, t);
    const auto c2 = eval::confusion_at_threshold(duplicated.scores, duplicated.labels,
                                                 duplicated.weights, t);
    CHECK(c1.tp == c2.tp);
    CHECK(c1.fp == c2.fp);
    CHECK(eval::macro_f1(c1) == eval::macro_f1(c2));
  }
}

TEST_CASE("cost curve: perfect classifier has a zero envelope") {
  const auto cc = eval::cost_curve({{0.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}, 101);
  for (double ne : cc.envelope) CHECK(ne == 0.0);
}

TEST_CASE("cost line evaluation and duality endpoints") {
  const eval::CostLine line{0.2, 0.3};  // fpr=0.2, fnr=0.3
  CHECK(line.at(0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(line.at(0.0) == 0.2);  // NE(0) = fpr
  CHECK(line.at(1.0) == 0.3);  // NE(1) = fnr
}

TEST_CASE("cost curve envelope equals brute-force minimum") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<eval::RocPoint> roc{{0.0, 0.0}, {1.0, 1.0}};
    for (int k = 0; k < 10; ++k) {
      const double fpr = rng.uniform();
      roc.push_back({fpr, fpr + (1.0 - fpr) * rng.uniform()});
    }
    const auto cc = eval::cost_curve(roc, 101);
    std::vector<testoracle::RocPt> opts;
    for (const auto& p : roc) opts.push_back({p.fpr, p.tpr});
    for (std::size_t k = 0; k < cc.grid.size(); ++k) {
      CHECK(cc.envelope[k] == testoracle::envelope_at(opts, cc.grid[k]));
      for (const auto& line : cc.lines) CHECK(cc.envelope[k] <= line.at(cc.grid[k]) + 1e-15);
    }
  }
}

TEST_CASE("trivial classifier lines") {
  CHECK(eval::trivial_always_negative().at(0.3) == doctest::Approx(0.3));
  CHECK(eval::trivial_always_positive().at(0.3) == doctest::Approx(0.7));
}

TEST_CASE("profit threshold: all-negative matrix forces the largest threshold") {
  // a negative score above the penultimate grid point makes the top grid
  // threshold the unique argmax
  const std::vector<double> scores{0.2, 0.5, 0.99, 1.0};
  const std::vector<int> labels{0, 0, 0, 1};
  eval::ProfitMatrix pm;
  pm.v_tn = 5.0;  // rewards only true negatives
  const auto res = eval::optimize_profit_threshold(scores, labels, {}, pm, 100);
  CHECK(res.best_threshold == doctest::Approx(0.995).epsilon(1e-12));
  CHECK(res.best_profit == doctest::Approx(15.0));
  CHECK(res.curve.size() == 100);
  CHECK(res.ratio_defined);
  CHECK(res.benchmark_profit == doctest::Approx(15.0));
}

TEST_CASE("profit threshold: ties resolve to the smallest threshold") {
  // separable scores; symmetric matrix; optimum anywhere in (0.4, 0.6]
  const std::vector<double> scores{0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9};
  const std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
  eval::ProfitMatrix pm{1.0, -1.0, 1.0, -1.0};
  const auto res = eval::optimize_profit_threshold(scores, labels, {}, pm, 100);
  CHECK(res.best_threshold == doctest::Approx(0.405).epsilon(1e-12));
  CHECK(res.best_profit == doctest::Approx(8.0));
}

TEST_CASE("profit threshold: analytic optimum on a hand-built case") {
  // positives at 0.62 and 0.9; negatives at 0.1, 0.2, 0.3, 0.7
  const std::vector<double> scores{0.62, 0.9, 0.1, 0.2, 0.3, 0.7};
  const std::vector<int> labels{1, 1, 0, 0, 0, 0};
  eval::ProfitMatrix pm{10.0, -1.0, 0.0, -10.0};
  // profit by threshold region: (0.3,0.62] -> 19 is the maximum; the smallest
  // grid threshold inside is 0.305
  const auto res = eval::optimize_profit_threshold(scores, labels, {}, pm, 100);
  CHECK(res.best_threshold == doctest::Approx(0.305).epsilon(1e-12));
  CHECK(res.best_profit == doctest::Approx(19.0));
  CHECK_FALSE(res.ratio_defined);  // all-negative benchmark is -20
  CHECK(res.benchmark_profit == doctest::Approx(-20.0));
}

TEST_CASE("profit curve matches scalar confusion evaluation") {
  Rng rng(88);
  const auto s = random_scored(rng, 60, true);
  eval::ProfitMatrix pm{3.0, -0.5, 0.1, -2.0};
  const auto res = eval::optimize_profit_threshold(s.scores, s.labels, s.weights, pm, 50);
  for (const auto& [t, profit] : res.curve) {
    const auto o = testoracle::confusion(s.scores, s.labels, s.weights, t);
    const double want = 3.0 * o.tp - 0.5 * o.fp + 0.1 * o.tn - 2.0 * o.fn;
    CHECK(profit == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("weighted log loss sanity") {
  const std::vector<double> margins{0.0, 0.0};
  const std::vector<int> labels{0, 1};
  CHECK(eval::weighted_log_loss(margins, labels, {}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

}  // TEST_SUITE
