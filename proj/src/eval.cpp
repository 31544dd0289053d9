#include "detfuse/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "detfuse/error.hpp"
#include "detfuse/parallel.hpp"

namespace detfuse {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_single_image(std::span<const Detection> preds, std::span<const GroundTruthRecord> gts) {
  const std::string* key = nullptr;
  auto check = [&](const std::string& id) {
    if (key == nullptr) {
      key = &id;
    } else if (*key != id) {
      throw ContractError("match_detections given records from images '" + *key + "' and '" + id +
                          "'");
    }
  };
  for (const Detection& d : preds) check(d.image_id);
  for (const GroundTruthRecord& g : gts) check(g.image_id);
}

}  // namespace

MatchResult match_detections(std::span<const Detection> preds,
                             std::span<const GroundTruthRecord> gts, double iou_threshold) {
  check_single_image(preds, gts);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].prob > preds[b].prob; });

  MatchResult result;
  result.outcomes.reserve(preds.size());
  std::vector<bool> taken(gts.size(), false);
  std::size_t matched = 0;
  for (std::size_t pi : order) {
    const Detection& p = preds[pi];
    MatchOutcome outcome{pi, Verdict::kFalsePositive, std::nullopt, 0.0};
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (taken[gi] || gts[gi].class_id != p.class_id) continue;
      const double v = iou(p.box, gts[gi].box);
      if (v > best) {
        best = v;
        best_gt = gi;
      }
    }
    if (best > iou_threshold) {
      taken[best_gt] = true;
      ++matched;
      outcome.verdict = Verdict::kTruePositive;
      outcome.matched_gt = best_gt;
      outcome.iou = best;
    }
    result.outcomes.push_back(outcome);
  }
  result.false_negatives = gts.size() - matched;
  return result;
}

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
  return PrecisionRecall{ratio(tp, tp + fp), ratio(tp, tp + fn)};
}

PRCurve build_pr_curve(int class_id, std::span<const Verdict> ranked,
                       std::size_t num_ground_truth) {
  PRCurve curve;
  curve.class_id = class_id;
  curve.points.reserve(ranked.size());
  for (Verdict v : ranked) {
    if (v == Verdict::kTruePositive) {
      ++curve.tp;
    } else {
      ++curve.fp;
    }
    if (curve.tp > num_ground_truth) {
      throw ContractError("more true positives than ground-truth instances");
    }
    const auto pr = precision_recall(curve.tp, curve.fp, num_ground_truth - curve.tp);
    curve.points.push_back(PRPoint{pr.recall, pr.precision});
  }
  curve.fn = num_ground_truth - curve.tp;
  return curve;
}

APResult average_precision(const PRCurve& curve, int n_blocks) {
  if (n_blocks < 1) throw ContractError("n_blocks must be at least 1");
  APResult result{curve.class_id, 0.0, n_blocks, curve.tp, curve.fp, curve.fn};
  const auto& pts = curve.points;
  if (pts.empty()) return result;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].recall < pts[i - 1].recall) {
      throw ContractError("PR curve recall must be non-decreasing");
    }
  }

  // suffix[i] = max precision over pts[i..]; this is p_interp at any recall
  // in (pts[i-1].recall, pts[i].recall].
  std::vector<double> suffix(pts.size());
  suffix.back() = pts.back().precision;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    suffix[i] = std::max(pts[i].precision, suffix[i + 1]);
  }

  // p_interp is non-increasing, so the max over a closed block sits at its
  // left edge.
  double sum = 0.0;
  for (int b = 0; b < n_blocks; ++b) {
    const double left = static_cast<double>(b) / static_cast<double>(n_blocks);
    const auto it = std::lower_bound(pts.begin(), pts.end(), left,
                                     [](const PRPoint& p, double r) { return p.recall < r; });
    if (it == pts.end()) break;
    sum += suffix[static_cast<std::size_t>(it - pts.begin())];
  }
  result.ap = sum / static_cast<double>(n_blocks);
  return result;
}

double mean_ap(std::span<const APResult> per_class) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const APResult& r : per_class) {
    if (r.num_ground_truth() == 0) continue;
    sum += r.ap;
    ++n;
  }
  if (n == 0) throw ContractError("mean AP undefined: no class has ground truth");
  return sum / static_cast<double>(n);
}

EvalReport evaluate_dataset(std::span<const Detection> preds,
                            std::span<const GroundTruthRecord> gts, const EvalOptions& options) {
  if (!(options.iou_threshold > 0.0 && options.iou_threshold < 1.0)) {
    throw ContractError("evaluation IoU threshold must lie in (0, 1)");
  }
  if (options.n_blocks < 1) throw ContractError("n_blocks must be at least 1");
  std::map<std::string, std::vector<std::size_t>> gt_by_image;
  std::map<std::string, std::vector<std::size_t>> pred_by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) gt_by_image[gts[i].image_id].push_back(i);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    validate(preds[i]);
    pred_by_image[preds[i].image_id].push_back(i);
  }

  EvalReport report;
  std::vector<std::string> images;
  for (const auto& [id, _] : gt_by_image) images.push_back(id);
  for (const auto& [id, _] : pred_by_image) {
    if (!gt_by_image.contains(id)) {
      images.push_back(id);
      report.warnings.push_back("predictions reference image '" + id +
                                "' absent from ground truth; counted as false positives");
    }
  }
  std::sort(images.begin(), images.end());

  struct ImageResult {
    std::vector<std::size_t> pred_index;  // global indices, local order
    MatchResult match;
    std::size_t localized = 0;
  };
  std::vector<ImageResult> per_image(images.size());
  static const std::vector<std::size_t> kNone;

  parallel_for(images.size(), [&](std::size_t k) {
    const auto pit = pred_by_image.find(images[k]);
    const auto git = gt_by_image.find(images[k]);
    const auto& pidx = pit == pred_by_image.end() ? kNone : pit->second;
    const auto& gidx = git == gt_by_image.end() ? kNone : git->second;

    std::vector<Detection> local_preds;
    local_preds.reserve(pidx.size());
    for (std::size_t i : pidx) local_preds.push_back(preds[i]);
    std::vector<GroundTruthRecord> local_gts;
    local_gts.reserve(gidx.size());
    for (std::size_t i : gidx) local_gts.push_back(gts[i]);

    ImageResult& out = per_image[k];
    out.pred_index = pidx;
    out.match = match_detections(local_preds, local_gts, options.iou_threshold);
    for (const GroundTruthRecord& g : local_gts) {
      const bool hit = std::any_of(local_preds.begin(), local_preds.end(), [&](const Detection& p) {
        return iou(p.box, g.box) > options.iou_threshold;
      });
      if (hit) ++out.localized;
    }
  });

  struct Ranked {
    double score;
    std::size_t index;
    Verdict verdict;
  };
  std::map<int, std::vector<Ranked>> ranked_by_class;
  std::map<int, std::size_t> gt_count;
  for (const GroundTruthRecord& g : gts) ++gt_count[g.class_id];
  for (const ImageResult& r : per_image) {
    for (const MatchOutcome& m : r.match.outcomes) {
      const std::size_t global = r.pred_index[m.detection];
      ranked_by_class[preds[global].class_id].push_back(
          Ranked{preds[global].prob, global, m.verdict});
    }
    report.num_localized += r.localized;
  }

  for (const auto& [cls, n_gt] : gt_count) {
    auto& list = ranked_by_class[cls];
    std::sort(list.begin(), list.end(), [](const Ranked& a, const Ranked& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.index < b.index;
    });
    std::vector<Verdict> verdicts;
    verdicts.reserve(list.size());
    for (const Ranked& r : list) verdicts.push_back(r.verdict);
    report.per_class.push_back(
        average_precision(build_pr_curve(cls, verdicts, n_gt), options.n_blocks));
  }
  for (const auto& [cls, list] : ranked_by_class) {
    if (!gt_count.contains(cls) && !list.empty()) report.prediction_only_classes.push_back(cls);
  }

  report.num_ground_truth = gts.size();
  report.detection_rate = ratio(report.num_localized, report.num_ground_truth);
  if (report.per_class.empty()) {
    report.warnings.push_back("no ground truth; mAP reported as 0");
  } else {
    report.map = mean_ap(report.per_class);
  }
  return report;
}

}  // namespace detfuse
