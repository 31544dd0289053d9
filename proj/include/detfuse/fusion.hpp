#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "detfuse/geometry.hpp"

namespace detfuse {

/// One model's prediction on one image.
struct Detection {
  Box box;
  int class_id = 0;
  double prob = 0.0;
  int model_id = 0;
  std::string image_id;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws ContractError unless 0 <= prob <= 1 and class_id >= 0.
void validate(const Detection& d);

/// Members of one fusion cluster, in insertion order.
struct Cluster {
  std::vector<Detection> members;
};

/// Aggregate of a cluster: weighted box, fused probability, shared class.
struct ClusterSummary {
  Box box;
  double prob = 0.0;
  int class_id = 0;
  std::size_t support = 0;

  friend bool operator==(const ClusterSummary&, const ClusterSummary&) = default;
};

/// How the fused probability is derived from member probabilities.
enum class ProbabilityRule {
  /// max member probability divided by cluster size (the reference rule)
  kMaxOverSupport,
  /// plain max member probability; an alternative for experiments
  kMax,
};

struct FusionOptions {
  double iou_threshold = 0.5;
  ProbabilityRule rule = ProbabilityRule::kMaxOverSupport;
};

/// Probability-weighted box average, max/|S| probability, shared class.
///
/// Throws ContractError for an empty or mixed-class cluster and
/// DegenerateWeightsError when every member probability is zero.
ClusterSummary summarize(const Cluster& cluster,
                         ProbabilityRule rule = ProbabilityRule::kMaxOverSupport);

/// A fused cluster with the input indices of its members.
struct FusedCluster {
  ClusterSummary summary;
  std::vector<std::size_t> members;  // indices into the input span, insertion order
};

/// Greedy box clustering for a single image.
///
/// Detections are visited by descending prob (ties: ascending model_id, then
/// input index). Each joins the same-class cluster whose running aggregate box
/// overlaps it with IoU >= threshold and whose fused probability is highest;
/// otherwise it seeds a new cluster. The aggregate is refreshed after every
/// insertion. Output is sorted by descending fused probability, then
/// descending support, then cluster creation order. The same key breaks ties
/// when several clusters qualify for one detection.
///
/// A cluster whose members all have probability 0 uses the unweighted mean of
/// member boxes as its aggregate.
///
/// Throws ContractError when detections span more than one image_id or the
/// threshold is outside (0, 1).
std::vector<FusedCluster> fuse_clusters(std::span<const Detection> detections,
                                        const FusionOptions& options = {});

std::vector<ClusterSummary> merge_boxes(std::span<const Detection> detections,
                                        const FusionOptions& options = {});

/// Fused output as detection records (model_id -1) for the given image.
std::vector<Detection> to_detections(std::span<const ClusterSummary> summaries,
                                     const std::string& image_id);

inline constexpr int kFusedModelId = -1;

}  // namespace detfuse
