#include "detfuse/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "detfuse/error.hpp"
#include "detfuse/formats.hpp"
#include "oracles/eval_oracle.hpp"
#include "test_support.hpp"

namespace detfuse {
namespace {

using testing_support::noisy_preds;
using testing_support::random_truth;

Detection pred(Box b, int cls, double p, std::string image = "img") {
  return Detection{b, cls, p, 0, std::move(image)};
}
GroundTruthRecord gt(Box b, int cls, std::string image = "img") {
  return GroundTruthRecord{std::move(image), cls, b};
}

std::vector<Verdict> verdicts(std::initializer_list<bool> tp) {
  std::vector<Verdict> v;
  for (bool t : tp) v.push_back(t ? Verdict::kTruePositive : Verdict::kFalsePositive);
  return v;
}

TEST(MatchTest, ExactPredictionIsTruePositive) {
  const std::vector<Detection> p{pred(Box(0, 0, 10, 10), 1, 0.9)};
  const std::vector<GroundTruthRecord> g{gt(Box(0, 0, 10, 10), 1)};
  const auto m = match_detections(p, g);
  ASSERT_EQ(m.outcomes.size(), 1u);
  EXPECT_EQ(m.outcomes[0].verdict, Verdict::kTruePositive);
  EXPECT_EQ(m.outcomes[0].matched_gt, 0u);
  EXPECT_EQ(m.false_negatives, 0u);
}

TEST(MatchTest, NoGroundTruthGivesFalsePositive) {
  const std::vector<Detection> p{pred(Box(0, 0, 10, 10), 1, 0.9)};
  const auto m = match_detections(p, {});
  ASSERT_EQ(m.outcomes.size(), 1u);
  EXPECT_EQ(m.outcomes[0].verdict, Verdict::kFalsePositive);
  EXPECT_FALSE(m.outcomes[0].matched_gt.has_value());
  EXPECT_EQ(m.false_negatives, 0u);
}

TEST(MatchTest, HigherConfidenceClaimsGroundTruthFirst) {
  const Box truth(0, 0, 10, 10);
  const std::vector<Detection> p{pred(Box(0, 0, 10, 9), 1, 0.8),   // IoU 0.9
                                 pred(Box(0, 0, 10, 6), 1, 0.9)};  // IoU 0.6
  const std::vector<GroundTruthRecord> g{gt(truth, 1)};
  const auto m = match_detections(p, g);
  ASSERT_EQ(m.outcomes.size(), 2u);
  EXPECT_EQ(m.outcomes[0].detection, 1u);
  EXPECT_EQ(m.outcomes[0].verdict, Verdict::kTruePositive);
  EXPECT_EQ(m.outcomes[1].detection, 0u);
  EXPECT_EQ(m.outcomes[1].verdict, Verdict::kFalsePositive);
}

TEST(MatchTest, ThresholdIsStrict) {
  // IoU exactly 0.5
  const std::vector<Detection> p{pred(Box(0, 0, 1, 1), 0, 0.9)};
  const std::vector<GroundTruthRecord> g{gt(Box(0, 0, 2, 1), 0)};
  ASSERT_EQ(iou(p[0].box, g[0].box), 0.5);
  EXPECT_EQ(match_detections(p, g).outcomes[0].verdict, Verdict::kFalsePositive);
  EXPECT_EQ(match_detections(p, g, 0.49).outcomes[0].verdict, Verdict::kTruePositive);
}

TEST(MatchTest, ClassMustAgree) {
  const std::vector<Detection> p{pred(Box(0, 0, 10, 10), 2, 0.9)};
  const std::vector<GroundTruthRecord> g{gt(Box(0, 0, 10, 10), 1)};
  const auto m = match_detections(p, g);
  EXPECT_EQ(m.outcomes[0].verdict, Verdict::kFalsePositive);
  EXPECT_EQ(m.false_negatives, 1u);
}

TEST(MatchTest, MixedImagesRejected) {
  const std::vector<Detection> p{pred(Box(0, 0, 10, 10), 1, 0.9, "a")};
  const std::vector<GroundTruthRecord> g{gt(Box(0, 0, 10, 10), 1, "b")};
  EXPECT_THROW(match_detections(p, g), ContractError);
}

TEST(MatchTest, EachGroundTruthMatchedOnce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    auto p = testing_support::random_scene(rng, 10, 2);
    auto as_gt = testing_support::random_scene(rng, 6, 2);
    std::vector<GroundTruthRecord> g;
    for (const auto& d : as_gt) g.push_back(gt(d.box, d.class_id));
    const auto m = match_detections(p, g);
    std::vector<int> hits(g.size(), 0);
    std::size_t tp = 0;
    for (const auto& o : m.outcomes) {
      if (o.verdict != Verdict::kTruePositive) continue;
      ASSERT_TRUE(o.matched_gt.has_value());
      EXPECT_GT(o.iou, 0.5);
      ++hits[*o.matched_gt];
      ++tp;
    }
    for (int h : hits) EXPECT_LE(h, 1);
    EXPECT_EQ(tp + m.false_negatives, g.size());
  }
}

TEST(PrecisionRecallTest, Examples) {
  auto pr = precision_recall(3, 1, 0);
  EXPECT_EQ(pr.precision, 0.75);
  EXPECT_EQ(pr.recall, 1.0);
  pr = precision_recall(0, 0, 5);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 0.0);
  pr = precision_recall(2, 2, 2);
  EXPECT_EQ(pr.precision, 0.5);
  EXPECT_EQ(pr.recall, 0.5);
  pr = precision_recall(0, 0, 0);
  EXPECT_EQ(pr.precision, 0.0);
  EXPECT_EQ(pr.recall, 0.0);
}

TEST(AveragePrecisionTest, WorkedExample) {
  // 2 GT; ranked TP, FP, TP. p_interp = 1 on [0, .5], 2/3 above; the sixth
  // block [.5, .6] contains r = .5 and scores 1.
  const auto curve = build_pr_curve(0, verdicts({true, false, true}), 2);
  ASSERT_EQ(curve.points.size(), 3u);
  EXPECT_EQ(curve.points[1].recall, 0.5);
  EXPECT_EQ(curve.points[1].precision, 0.5);
  const auto ap = average_precision(curve, 10);
  EXPECT_NEAR(ap.ap, 13.0 / 15.0, 1e-12);
  EXPECT_EQ(ap.tp, 2u);
  EXPECT_EQ(ap.fp, 1u);
  EXPECT_EQ(ap.fn, 0u);
  EXPECT_EQ(ap.n_blocks, 10);
}

TEST(AveragePrecisionTest, PerfectAndEmpty) {
  EXPECT_EQ(average_precision(build_pr_curve(0, verdicts({true, true, true}), 3)).ap, 1.0);
  EXPECT_EQ(average_precision(build_pr_curve(0, verdicts({false, false}), 3)).ap, 0.0);
  EXPECT_EQ(average_precision(build_pr_curve(0, {}, 3)).ap, 0.0);
  EXPECT_THROW(average_precision(build_pr_curve(0, {}, 3), 0), ContractError);
}

TEST(AveragePrecisionTest, CurveRecallNonDecreasing) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Verdict> v;
    std::size_t tp = 0;
    for (int i = 0; i < 30; ++i) {
      const bool t = coin(rng);
      tp += t;
      v.push_back(t ? Verdict::kTruePositive : Verdict::kFalsePositive);
    }
    const auto c = build_pr_curve(0, v, tp + 3);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].recall, c.points[i - 1].recall);
    }
  }
}

// Exact area under the right-max interpolated step curve.
double interpolated_area(const PRCurve& c) {
  double area = 0.0, prev_r = 0.0;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = i; j < c.points.size(); ++j) best = std::max(best, c.points[j].precision);
    area += (c.points[i].recall - prev_r) * best;
    prev_r = c.points[i].recall;
  }
  return area;
}

TEST(AveragePrecisionTest, ConvergesToInterpolatedArea) {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> len(1, 25);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Verdict> v;
    std::size_t tp = 0;
    for (int i = len(rng); i > 0; --i) {
      const bool t = coin(rng);
      tp += t;
      v.push_back(t ? Verdict::kTruePositive : Verdict::kFalsePositive);
    }
    const auto c = build_pr_curve(0, v, tp + static_cast<std::size_t>(len(rng) % 4));
    EXPECT_LT(std::fabs(average_precision(c, 10000).ap - interpolated_area(c)), 1e-3);
  }
}

TEST(MeanApTest, Examples) {
  const std::vector<APResult> one{{0, 1.0, 10, 1, 0, 0}};
  EXPECT_EQ(mean_ap(one), 1.0);
  const std::vector<APResult> two{{0, 1.0, 10, 1, 0, 0}, {1, 0.0, 10, 0, 1, 1}};
  EXPECT_EQ(mean_ap(two), 0.5);
  const std::vector<APResult> three{
      {0, 0.8667, 10, 1, 0, 0}, {1, 0.75, 10, 1, 0, 0}, {2, 1.0, 10, 1, 0, 0}};
  EXPECT_NEAR(mean_ap(three), (0.8667 + 0.75 + 1.0) / 3.0, 1e-15);
  EXPECT_NEAR(mean_ap(three), 0.8722333333, 1e-9);
}

TEST(MeanApTest, ExcludesClassesWithoutGroundTruthAndRejectsEmpty) {
  const std::vector<APResult> r{{0, 0.6, 10, 1, 0, 1}, {1, 0.0, 10, 0, 4, 0}};
  EXPECT_EQ(mean_ap(r), 0.6);
  EXPECT_THROW(mean_ap(std::vector<APResult>{}), ContractError);
  EXPECT_THROW(mean_ap(std::vector<APResult>{{1, 0.0, 10, 0, 4, 0}}), ContractError);
}

TEST(MeanApTest, IdenticalApsGiveThatAp) {
  for (double ap : {0.0, 0.1, 1.0 / 3.0, 0.77, 1.0}) {
    const std::vector<APResult> r(7, APResult{0, ap, 10, 1, 0, 0});
    EXPECT_DOUBLE_EQ(mean_ap(r), ap);
  }
}

TEST(EvaluateDatasetTest, PerfectPredictions) {
  std::vector<GroundTruthRecord> g{gt(Box(0, 0, 10, 10), 0, "a"), gt(Box(20, 20, 40, 40), 1, "a"),
                                   gt(Box(5, 5, 15, 15), 0, "b")};
  std::vector<Detection> p;
  for (const auto& r : g) p.push_back(pred(r.box, r.class_id, 1.0, r.image_id));
  const auto rep = evaluate_dataset(p, g);
  EXPECT_EQ(rep.map, 1.0);
  EXPECT_EQ(rep.detection_rate, 1.0);
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(EvaluateDatasetTest, EmptyPredictions) {
  std::vector<GroundTruthRecord> g{gt(Box(0, 0, 10, 10), 0, "a")};
  const auto rep = evaluate_dataset({}, g);
  EXPECT_EQ(rep.map, 0.0);
  EXPECT_EQ(rep.detection_rate, 0.0);
  ASSERT_EQ(rep.per_class.size(), 1u);
  EXPECT_EQ(rep.per_class[0].fn, 1u);
}

TEST(EvaluateDatasetTest, NoGroundTruthWarns) {
  const std::vector<Detection> p{pred(Box(0, 0, 10, 10), 0, 0.5, "a")};
  const auto rep = evaluate_dataset(p, {});
  EXPECT_EQ(rep.map, 0.0);
  EXPECT_TRUE(rep.per_class.empty());
  EXPECT_EQ(rep.prediction_only_classes, std::vector<int>{0});
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(EvaluateDatasetTest, RejectsBadOptions) {
  const std::vector<GroundTruthRecord> g{gt(Box(0, 0, 10, 10), 0, "a")};
  EXPECT_THROW(evaluate_dataset({}, g, EvalOptions{1.0, 10}), ContractError);
  EXPECT_THROW(evaluate_dataset({}, g, EvalOptions{0.0, 10}), ContractError);
  EXPECT_THROW(evaluate_dataset({}, g, EvalOptions{0.5, 0}), ContractError);
}

TEST(EvaluateDatasetTest, ThreeImageFixture) {
  const std::string dir = DETFUSE_GOLDEN_DIR "/eval3";
  const auto preds = read_detection_file(dir + "/preds.jsonl");
  const auto gts = read_ground_truth(dir + "/manifest.txt");
  const auto rep = evaluate_dataset(preds, gts);

  // hand-evaluated: class 0 ranks TP TP FP TP FP FP over 3 GT
  ASSERT_EQ(rep.per_class.size(), 3u);
  EXPECT_NEAR(rep.per_class[0].ap, 0.925, 1e-12);
  EXPECT_EQ(rep.per_class[0].tp, 3u);
  EXPECT_EQ(rep.per_class[0].fp, 3u);
  EXPECT_EQ(rep.per_class[1].ap, 1.0);
  EXPECT_EQ(rep.per_class[2].ap, 0.5);
  EXPECT_NEAR(rep.map, (0.925 + 1.0 + 0.5) / 3.0, 1e-12);
  EXPECT_EQ(rep.detection_rate, 1.0);
  EXPECT_EQ(rep.prediction_only_classes, std::vector<int>{3});
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("'d'"), std::string::npos);

  const auto brute = oracle::brute_force_evaluate(preds, gts, 0.5, 10);
  for (const auto& r : rep.per_class) {
    const auto& b = brute.per_class.at(r.class_id);
    EXPECT_EQ(r.tp, b.tp);
    EXPECT_EQ(r.fp, b.fp);
    EXPECT_EQ(r.fn, b.fn);
    EXPECT_NEAR(r.ap, b.ap, 1e-12);
  }
  EXPECT_NEAR(rep.map, brute.map, 1e-12);
}

TEST(EvaluateDatasetTest, MatchesBruteForceOnRandomFixtures) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int images = 1 + trial % 5;
    const auto g = random_truth(rng, images, 10);
    const auto p = noisy_preds(rng, g, images);
    const auto rep = evaluate_dataset(p, g);
    const auto brute = oracle::brute_force_evaluate(p, g, 0.5, 10);
    ASSERT_EQ(rep.per_class.size(), brute.per_class.size());
    for (const auto& r : rep.per_class) {
      const auto& b = brute.per_class.at(r.class_id);
      EXPECT_EQ(r.tp, b.tp);
      EXPECT_EQ(r.fp, b.fp);
      EXPECT_EQ(r.fn, b.fn);
      EXPECT_NEAR(r.ap, b.ap, 1e-9);
    }
    EXPECT_NEAR(rep.map, brute.map, 1e-9);
    EXPECT_NEAR(rep.detection_rate, brute.detection_rate, 1e-12);
  }
}

TEST(EvaluateDatasetTest, TpPlusFnEqualsGroundTruthPerClass) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_truth(rng, 4, 8);
    const auto p = noisy_preds(rng, g, 4);
    const auto rep = evaluate_dataset(p, g);
    std::map<int, std::size_t> count;
    for (const auto& r : g) ++count[r.class_id];
    for (const auto& r : rep.per_class) EXPECT_EQ(r.tp + r.fn, count[r.class_id]);
  }
}

TEST(EvaluateDatasetTest, InvariantUnderMonotoneConfidenceRescaling) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_truth(rng, 3, 8);
    auto p = noisy_preds(rng, g, 3);
    const auto before = evaluate_dataset(p, g);
    for (auto& d : p) d.prob = std::pow(d.prob, 3.0) * 0.5;  // strictly increasing on [0, 1]
    const auto after = evaluate_dataset(p, g);
    ASSERT_EQ(before.per_class.size(), after.per_class.size());
    for (std::size_t k = 0; k < before.per_class.size(); ++k) {
      EXPECT_EQ(before.per_class[k].ap, after.per_class[k].ap);
    }
    EXPECT_EQ(before.map, after.map);
  }
}

}  // namespace
}  // namespace detfuse
