#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detfuse/fusion.hpp"
#include "detfuse/geometry.hpp"

namespace detfuse {

struct GroundTruthRecord {
  std::string image_id;
  int class_id = 0;
  Box box;

  friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

enum class Verdict { kTruePositive, kFalsePositive };

struct MatchOutcome {
  std::size_t detection = 0;  // index into the prediction span
  Verdict verdict = Verdict::kFalsePositive;
  std::optional<std::size_t> matched_gt;  // index into the ground-truth span
  double iou = 0.0;                       // overlap with matched_gt, 0 if none
};

struct MatchResult {
  std::vector<MatchOutcome> outcomes;  // in ranked (descending confidence) order
  std::size_t false_negatives = 0;
};

/// Greedy matching for one image. Predictions are ranked by descending
/// prob (ties keep input order); each takes the unmatched same-class ground
/// truth with the highest IoU when that IoU is strictly above the threshold
/// (IoU ties go to the earlier ground truth).
MatchResult match_detections(std::span<const Detection> preds,
                             std::span<const GroundTruthRecord> gts, double iou_threshold = 0.5);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Ratios with 0 for an empty denominator.
PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Precision/recall after each ranked prediction of one class.
struct PRCurve {
  int class_id = 0;
  std::vector<PRPoint> points;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Builds the curve from verdicts already in rank order.
PRCurve build_pr_curve(int class_id, std::span<const Verdict> ranked, std::size_t num_ground_truth);

struct APResult {
  int class_id = 0;
  double ap = 0.0;
  int n_blocks = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t num_ground_truth() const noexcept { return tp + fn; }
};

/// Block-interpolated AP: recall [0, 1] is split into n closed blocks and
/// each contributes the largest right-max-interpolated precision it sees.
APResult average_precision(const PRCurve& curve, int n_blocks = 10);

/// Mean AP over classes that have ground truth. Throws ContractError when
/// no such class remains.
double mean_ap(std::span<const APResult> per_class);

struct EvalOptions {
  double iou_threshold = 0.5;
  int n_blocks = 10;
};

struct EvalReport {
  std::vector<APResult> per_class;  // classes with ground truth, ascending id
  std::vector<int> prediction_only_classes;
  double map = 0.0;
  /// Class-agnostic share of ground truths overlapped above the threshold by
  /// at least one prediction.
  double detection_rate = 0.0;
  std::size_t num_ground_truth = 0;
  std::size_t num_localized = 0;
  std::vector<std::string> warnings;
};

/// Pools per-image matches by class, ranks each class globally by prob
/// (ties: input order), and reports AP per class, mAP and detection rate.
/// Predictions on images without ground truth count as false positives and
/// add a warning.
EvalReport evaluate_dataset(std::span<const Detection> preds,
                            std::span<const GroundTruthRecord> gts,
                            const EvalOptions& options = {});

}  // namespace detfuse
