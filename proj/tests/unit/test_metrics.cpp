#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "lotnorm/metrics.hpp"
#include "lotnorm/rng.hpp"

using namespace lotnorm;

namespace {

ClassDistribution make_dist(std::shared_ptr<const ClassIndex> classes,
                            std::vector<double> p) {
  return {std::move(classes), std::move(p)};
}

std::shared_ptr<const ClassIndex> two_classes() {
  return std::make_shared<const ClassIndex>(
      std::vector<std::string>{"a", "b"});
}

}  // namespace

TEST_CASE("all-correct predictions score perfectly", "[metrics]") {
  const std::vector<LabeledExample> golds = {{"n1", "A"}, {"n2", "B"}};
  const std::vector<ClassId> preds = {"A", "B"};
  const auto report = csc_report(preds, golds, {});
  CHECK(report.overall.accuracy == 1.0);
  CHECK(report.overall.macro_f1 == 1.0);
}

TEST_CASE("hand-computed macro f1 for the all-A predictor", "[metrics]") {
  std::vector<LabeledExample> golds;
  std::vector<ClassId> preds;
  for (int i = 0; i < 10; ++i) {
    golds.push_back({"n" + std::to_string(i), i < 5 ? "A" : "B"});
    preds.push_back("A");
  }
  const auto report = csc_report(preds, golds, {});
  CHECK(report.overall.accuracy == Catch::Approx(0.5));
  // F1(A) = 2/3 (precision 1/2, recall 1), F1(B) = 0.
  CHECK(report.overall.macro_f1 == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("single correct example scores one", "[metrics]") {
  const auto report = csc_report({"A"}, {{"n", "A"}}, {});
  CHECK(report.overall.accuracy == 1.0);
  CHECK(report.overall.examples == 1);
}

TEST_CASE("macro f1 is invariant to class relabeling", "[metrics]") {
  Rng rng(246);
  std::vector<LabeledExample> golds;
  std::vector<ClassId> preds;
  for (int i = 0; i < 200; ++i) {
    golds.push_back({"n" + std::to_string(i),
                     "c" + std::to_string(rng.below(6))});
    preds.push_back("c" + std::to_string(rng.below(6)));
  }
  const auto base = csc_report(preds, golds, {});

  // Permute labels: c0..c5 -> p3, p0, p5, p1, p4, p2.
  const std::map<std::string, std::string> perm = {
      {"c0", "p3"}, {"c1", "p0"}, {"c2", "p5"},
      {"c3", "p1"}, {"c4", "p4"}, {"c5", "p2"}};
  auto permuted_golds = golds;
  auto permuted_preds = preds;
  for (auto& g : permuted_golds) g.class_id = perm.at(g.class_id);
  for (auto& p : permuted_preds) p = perm.at(p);
  const auto permuted = csc_report(permuted_preds, permuted_golds, {});
  CHECK(permuted.overall.macro_f1 ==
        Catch::Approx(base.overall.macro_f1).epsilon(1e-12));
  CHECK(permuted.overall.accuracy ==
        Catch::Approx(base.overall.accuracy).epsilon(1e-12));
}

TEST_CASE("micro accuracy equals micro f1 in single-label classification",
          "[metrics]") {
  Rng rng(642);
  std::vector<LabeledExample> golds;
  std::vector<ClassId> preds;
  for (int i = 0; i < 300; ++i) {
    golds.push_back({"n" + std::to_string(i),
                     "c" + std::to_string(rng.below(5))});
    preds.push_back("c" + std::to_string(rng.below(5)));
  }
  const auto report = csc_report(preds, golds, {});

  // Micro F1 from pooled TP/FP/FN: every wrong prediction is both one FP
  // and one FN, so precision = recall = accuracy.
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (preds[i] == golds[i].class_id) {
      ++tp;
    } else {
      ++fp;
      ++fn;
    }
  }
  const double micro_p = static_cast<double>(tp) / (tp + fp);
  const double micro_r = static_cast<double>(tp) / (tp + fn);
  const double micro_f1 = 2 * micro_p * micro_r / (micro_p + micro_r);
  CHECK(report.overall.accuracy == Catch::Approx(micro_f1).epsilon(1e-12));
}

TEST_CASE("csc report splits rows by bucket", "[metrics]") {
  std::map<ClassId, FrequencyBucket> buckets = {
      {"A", FrequencyBucket::kMany},
      {"B", FrequencyBucket::kFew},
  };
  const std::vector<LabeledExample> golds = {
      {"n1", "A"}, {"n2", "A"}, {"n3", "B"}};
  const std::vector<ClassId> preds = {"A", "B", "B"};
  const auto report = csc_report(preds, golds, buckets);
  REQUIRE(report.buckets.size() == 2);
  CHECK(report.buckets[0].label == "many");
  CHECK(report.buckets[0].accuracy == Catch::Approx(0.5));
  CHECK(report.buckets[1].label == "few");
  CHECK(report.buckets[1].accuracy == 1.0);

  CHECK_THROWS_AS(csc_report({"A"}, golds, buckets), parameter_error);
}

TEST_CASE("osc scores bound the max probability", "[metrics]") {
  auto classes = std::make_shared<const ClassIndex>(
      std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(osc_score(make_dist(classes, {0.25, 0.25, 0.25, 0.25})) ==
        Catch::Approx(0.25));
  CHECK(osc_score(make_dist(classes, {0.0, 1.0, 0.0, 0.0})) == 1.0);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p(4);
    double sum = 0.0;
    for (auto& v : p) {
      v = rng.unit();
      sum += v;
    }
    for (auto& v : p) v /= sum;
    const double score = osc_score(make_dist(classes, p));
    CHECK(score >= 0.25 - 1e-12);
    CHECK(score <= 1.0 + 1e-12);
  }
}

TEST_CASE("roc of perfectly separated scores has auc one", "[metrics]") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.2, 0.1};
  const std::vector<bool> labels = {true, true, true, false, false};
  const auto curve = roc(scores, labels);
  CHECK(curve.auc == Catch::Approx(1.0));
  CHECK(curve.points.front() == std::make_pair(0.0, 0.0));
  CHECK(curve.points.back() == std::make_pair(1.0, 1.0));
}

TEST_CASE("roc rejects single-label inputs", "[metrics]") {
  CHECK_THROWS_AS(roc({0.5, 0.4}, {true, true}), parameter_error);
}

TEST_CASE("roc is monotone and negation flips the auc", "[metrics]") {
  Rng rng(1123);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (int i = 0; i < 400; ++i) {
    scores.push_back(rng.unit() + (rng.below(2) ? 0.2 : 0.0));
    labels.push_back(rng.below(2) == 0);
  }
  const auto curve = roc(scores, labels);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].first >= curve.points[i - 1].first);
    CHECK(curve.points[i].second >= curve.points[i - 1].second);
  }
  auto negated = scores;
  for (auto& s : negated) s = -s;
  const auto flipped = roc(negated, labels);
  CHECK(curve.auc + flipped.auc == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("auc equals the pair-counting oracle", "[metrics]") {
  Rng rng(2718);
  for (int iter = 0; iter < 20; ++iter) {
    const std::size_t n = 20 + rng.below(480);
    std::vector<double> scores(n);
    std::vector<bool> labels(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Quantized scores force ties through the grouping path.
      scores[i] = static_cast<double>(rng.below(20)) / 20.0;
      labels[i] = rng.below(2) == 0;
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;

    // P(random positive outranks random negative), ties counted half.
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!labels[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j]) continue;
        ++pairs;
        if (scores[i] > scores[j]) {
          wins += 1.0;
        } else if (scores[i] == scores[j]) {
          wins += 0.5;
        }
      }
    }
    const auto curve = roc(scores, labels);
    CHECK(curve.auc ==
          Catch::Approx(wins / static_cast<double>(pairs)).margin(1e-9));
  }
}

TEST_CASE("random scores give auc near one half", "[metrics]") {
  Rng rng(10101);
  const std::size_t n = 10000;
  std::vector<double> scores(n);
  std::vector<bool> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.unit();
    labels[i] = rng.below(2) == 0;
  }
  CHECK(roc(scores, labels).auc == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("jsd identities", "[metrics]") {
  auto classes = two_classes();
  const auto p = make_dist(classes, {0.7, 0.3});
  const auto q = make_dist(classes, {0.7, 0.3});
  CHECK(jsd(p, q) == Catch::Approx(0.0).margin(1e-12));

  const auto point_a = make_dist(classes, {1.0, 0.0});
  const auto point_b = make_dist(classes, {0.0, 1.0});
  CHECK(jsd(point_a, point_b) == Catch::Approx(1.0).margin(1e-12));

  auto three = std::make_shared<const ClassIndex>(
      std::vector<std::string>{"a", "b", "c"});
  CHECK_THROWS_AS(jsd(p, make_dist(three, {0.5, 0.3, 0.2})),
                  parameter_error);
}

TEST_CASE("jsd is symmetric and bounded on random simplex pairs",
          "[metrics]") {
  auto classes = std::make_shared<const ClassIndex>(
      std::vector<std::string>{"a", "b", "c", "d", "e"});
  Rng rng(5050);
  for (int iter = 0; iter < 2000; ++iter) {
    std::vector<double> pv(5), qv(5);
    double ps = 0, qs = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      pv[i] = rng.unit() + 1e-9;
      qv[i] = rng.unit() + 1e-9;
      ps += pv[i];
      qs += qv[i];
    }
    for (std::size_t i = 0; i < 5; ++i) {
      pv[i] /= ps;
      qv[i] /= qs;
    }
    const auto p = make_dist(classes, pv);
    const auto q = make_dist(classes, qv);
    const double d1 = jsd(p, q);
    const double d2 = jsd(q, p);
    REQUIRE(d1 >= 0.0);
    REQUIRE(d1 <= 1.0);
    REQUIRE(d1 == Catch::Approx(d2).margin(1e-12));
  }
}

TEST_CASE("osv evaluation separates and tunes on validation", "[metrics]") {
  SECTION("perfect separation reaches accuracy one") {
    const std::vector<double> vd = {0.1, 0.2, 0.8, 0.9};
    const std::vector<bool> vy = {true, true, false, false};
    const std::vector<double> td = {0.15, 0.85};
    const std::vector<bool> ty = {true, false};
    const auto result = osv_evaluate(vd, vy, td, ty);
    CHECK(result.validation_accuracy == 1.0);
    CHECK(result.test_accuracy == 1.0);
    CHECK(result.threshold > 0.2);
    CHECK(result.threshold < 0.8);
  }
  SECTION("independent distances stay near chance") {
    Rng rng(31);
    std::vector<double> vd, td;
    std::vector<bool> vy, ty;
    for (int i = 0; i < 4000; ++i) {
      vd.push_back(rng.unit());
      vy.push_back(rng.below(2) == 0);
      td.push_back(rng.unit());
      ty.push_back(rng.below(2) == 0);
    }
    const auto result = osv_evaluate(vd, vy, td, ty);
    CHECK(result.test_accuracy == Catch::Approx(0.5).margin(0.05));
  }
  SECTION("threshold equals a brute-force scan") {
    Rng rng(93);
    std::vector<double> vd, td;
    std::vector<bool> vy, ty;
    for (int i = 0; i < 500; ++i) {
      const bool same = rng.below(2) == 0;
      vd.push_back(rng.unit() + (same ? 0.0 : 0.4));
      vy.push_back(same);
      td.push_back(rng.unit() + (rng.below(2) ? 0.0 : 0.4));
      ty.push_back(rng.below(2) == 0);
    }
    const auto result = osv_evaluate(vd, vy, td, ty);

    double best_acc = -1.0;
    std::vector<double> candidates = vd;
    std::sort(candidates.begin(), candidates.end());
    candidates.push_back(candidates.back() + 1.0);
    candidates.insert(candidates.begin(), 0.0);
    for (const double theta : candidates) {
      best_acc = std::max(best_acc, pair_accuracy(vd, vy, theta));
    }
    CHECK(result.validation_accuracy == Catch::Approx(best_acc).margin(1e-12));
  }
  SECTION("empty inputs are rejected") {
    CHECK_THROWS_AS(osv_evaluate({}, {}, {0.1}, {true}), parameter_error);
  }
}
