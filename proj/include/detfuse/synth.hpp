#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "detfuse/eval.hpp"
#include "detfuse/fusion.hpp"

namespace detfuse {

struct NoiseModel {
  double jitter_sigma = 0.0;  // px, independent Gaussian noise on each corner coordinate
  double drop_rate = 0.0;     // probability a ground-truth instance is missed
  double fp_rate = 0.0;       // mean spurious boxes per image (Poisson)
  double calib_slope = 1.0;   // confidence = slope * IoU(jittered, gt) + N(0, calib_sigma)
  double calib_sigma = 0.0;
  double misclass_rate = 0.0;   // probability of a uniformly drawn wrong class
  int num_classes = 0;          // 0: one more than the largest class in the ground truth
  double canvas_width = 640.0;  // extent for spurious boxes
  double canvas_height = 480.0;
  std::uint64_t seed = 0;

  /// Throws ContractError on probabilities outside [0, 1] or negative sigmas.
  void validate() const;
};

/// FNV-1a 64-bit; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view s) noexcept;

/// Simulated single-model output. Images are visited in sorted image_id order;
/// each uses its own generator seeded with `seed ^ stable_hash(image_id)`, so
/// results depend only on the inputs. Images without ground truth get no
/// spurious boxes.
std::vector<Detection> generate_model_detections(std::span<const GroundTruthRecord> gts,
                                                 const NoiseModel& noise, int model_id = 0);

/// k detection sets; model i uses seed `base.seed + i` and model_id i.
std::vector<std::vector<Detection>> generate_ensemble(std::span<const GroundTruthRecord> gts,
                                                      const NoiseModel& base, int k_models);

struct FixtureSpec {
  int images = 20;
  int classes = 5;
  int boxes_per_image = 4;
  double width = 640.0;
  double height = 480.0;
  std::uint64_t seed = 2019;
};

/// Synthetic ground truth: boxes 40-120 px on a side placed inside the canvas
/// without mutual overlap. Image ids are "img000", "img001", ...
std::vector<GroundTruthRecord> make_fixture(const FixtureSpec& spec = {});

}  // namespace detfuse
