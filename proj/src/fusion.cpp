#include "detfuse/fusion.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "detfuse/error.hpp"

namespace detfuse {
namespace {

// Running sums for one cluster, accumulated in insertion order.
class Aggregate {
 public:
  void add(const Detection& d) {
    const Box& b = d.box;
    if (count_ == 0) first_ = b;
    weight_ += d.prob;
    wx1_ += d.prob * b.x1();
    wy1_ += d.prob * b.y1();
    wx2_ += d.prob * b.x2();
    wy2_ += d.prob * b.y2();
    ux1_ += b.x1();
    uy1_ += b.y1();
    ux2_ += b.x2();
    uy2_ += b.y2();
    max_prob_ = count_ == 0 ? d.prob : std::max(max_prob_, d.prob);
    ++count_;
  }

  double weight() const { return weight_; }

  // a singleton passes its box through untouched: p*x/p need not round to x
  Box weighted_box() const {
    if (count_ == 1) return first_;
    return Box(wx1_ / weight_, wy1_ / weight_, wx2_ / weight_, wy2_ / weight_);
  }

  Box mean_box() const {
    if (count_ == 1) return first_;
    const auto n = static_cast<double>(count_);
    return Box(ux1_ / n, uy1_ / n, ux2_ / n, uy2_ / n);
  }

  double prob(ProbabilityRule rule) const {
    return rule == ProbabilityRule::kMax ? max_prob_ : max_prob_ / static_cast<double>(count_);
  }

  std::size_t count() const { return count_; }

 private:
  double weight_ = 0.0;
  double wx1_ = 0.0, wy1_ = 0.0, wx2_ = 0.0, wy2_ = 0.0;
  double ux1_ = 0.0, uy1_ = 0.0, ux2_ = 0.0, uy2_ = 0.0;
  double max_prob_ = 0.0;
  std::size_t count_ = 0;
  Box first_;
};

struct WorkingCluster {
  Aggregate agg;
  FusedCluster out;
  std::size_t created = 0;
};

// Ordering shared by cluster selection and final output.
bool ranks_before(const WorkingCluster& a, const WorkingCluster& b) {
  if (a.out.summary.prob != b.out.summary.prob) return a.out.summary.prob > b.out.summary.prob;
  if (a.out.summary.support != b.out.summary.support)
    return a.out.summary.support > b.out.summary.support;
  return a.created < b.created;
}

void refresh(WorkingCluster& c, ProbabilityRule rule) {
  c.out.summary.box = c.agg.weight() > 0.0 ? c.agg.weighted_box() : c.agg.mean_box();
  c.out.summary.prob = c.agg.prob(rule);
  c.out.summary.support = c.agg.count();
}

}  // namespace

void validate(const Detection& d) {
  if (!(d.prob >= 0.0 && d.prob <= 1.0)) {
    throw ContractError("detection probability " + std::to_string(d.prob) + " outside [0, 1]");
  }
  if (d.class_id < 0) {
    throw ContractError("negative class id " + std::to_string(d.class_id));
  }
}

ClusterSummary summarize(const Cluster& cluster, ProbabilityRule rule) {
  if (cluster.members.empty()) throw ContractError("empty cluster");
  const int cls = cluster.members.front().class_id;
  Aggregate agg;
  for (const Detection& d : cluster.members) {
    validate(d);
    if (d.class_id != cls) throw ContractError("cluster mixes class ids");
    agg.add(d);
  }
  if (!(agg.weight() > 0.0)) {
    throw DegenerateWeightsError("cluster probabilities sum to zero; weighted box undefined");
  }
  return ClusterSummary{agg.weighted_box(), agg.prob(rule), cls, agg.count()};
}

std::vector<FusedCluster> fuse_clusters(std::span<const Detection> detections,
                                        const FusionOptions& options) {
  if (!(options.iou_threshold > 0.0 && options.iou_threshold < 1.0)) {
    throw ContractError("fusion IoU threshold must lie in (0, 1)");
  }
  for (const Detection& d : detections) {
    validate(d);
    if (d.image_id != detections.front().image_id) {
      throw ContractError("merge_boxes given detections from images '" +
                          detections.front().image_id + "' and '" + d.image_id + "'");
    }
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Detection& da = detections[a];
    const Detection& db = detections[b];
    if (da.prob != db.prob) return da.prob > db.prob;
    return da.model_id < db.model_id;
  });

  std::vector<WorkingCluster> clusters;
  for (std::size_t idx : order) {
    const Detection& d = detections[idx];
    WorkingCluster* best = nullptr;
    for (WorkingCluster& c : clusters) {
      if (c.out.summary.class_id != d.class_id) continue;
      if (iou(c.out.summary.box, d.box) < options.iou_threshold) continue;
      if (best == nullptr || ranks_before(c, *best)) best = &c;
    }
    if (best == nullptr) {
      WorkingCluster& fresh = clusters.emplace_back();
      fresh.created = clusters.size() - 1;
      fresh.out.summary.class_id = d.class_id;
      best = &fresh;
    }
    best->agg.add(d);
    best->out.members.push_back(idx);
    refresh(*best, options.rule);
  }

  std::sort(clusters.begin(), clusters.end(), ranks_before);
  std::vector<FusedCluster> result;
  result.reserve(clusters.size());
  for (WorkingCluster& c : clusters) result.push_back(std::move(c.out));
  return result;
}

std::vector<ClusterSummary> merge_boxes(std::span<const Detection> detections,
                                        const FusionOptions& options) {
  std::vector<ClusterSummary> out;
  for (FusedCluster& c : fuse_clusters(detections, options)) {
    out.push_back(c.summary);
  }
  return out;
}

std::vector<Detection> to_detections(std::span<const ClusterSummary> summaries,
                                     const std::string& image_id) {
  std::vector<Detection> out;
  out.reserve(summaries.size());
  for (const ClusterSummary& s : summaries) {
    out.push_back(Detection{s.box, s.class_id, s.prob, kFusedModelId, image_id});
  }
  return out;
}

}  // namespace detfuse
