#include "detfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

#include "detfuse/error.hpp"

namespace detfuse {
namespace {

// Distribution transforms are written out rather than taken from <random>:
// the standard leaves their algorithms unspecified, and golden files must
// match across standard libraries. The engine itself is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

  double normal() {
    // Box-Muller, one variate per call
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  int poisson(double mean) {
    const double limit = std::exp(-mean);
    int k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

 private:
  std::mt19937_64 engine_;
};

Box ordered_box(double ax, double ay, double bx, double by) {
  return Box(std::min(ax, bx), std::min(ay, by), std::max(ax, bx), std::max(ay, by));
}

std::map<std::string, std::vector<const GroundTruthRecord*>> by_image(
    std::span<const GroundTruthRecord> gts) {
  std::map<std::string, std::vector<const GroundTruthRecord*>> out;
  for (const GroundTruthRecord& g : gts) out[g.image_id].push_back(&g);
  return out;
}

}  // namespace

void NoiseModel::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError(std::string(what) + " must lie in [0, 1]");
  };
  prob(drop_rate, "drop_rate");
  prob(misclass_rate, "misclass_rate");
  if (!(jitter_sigma >= 0.0) || !(calib_sigma >= 0.0)) {
    throw ContractError("noise sigmas must be non-negative");
  }
  if (!(fp_rate >= 0.0)) throw ContractError("fp_rate must be non-negative");
  if (num_classes < 0) throw ContractError("num_classes must be non-negative");
  if (!(canvas_width > 0.0) || !(canvas_height > 0.0)) {
    throw ContractError("canvas extent must be positive");
  }
}

std::uint64_t stable_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Detection> generate_model_detections(std::span<const GroundTruthRecord> gts,
                                                 const NoiseModel& noise, int model_id) {
  noise.validate();
  int num_classes = noise.num_classes;
  if (num_classes == 0) {
    for (const GroundTruthRecord& g : gts) num_classes = std::max(num_classes, g.class_id + 1);
  }

  std::vector<Detection> out;
  for (const auto& [image_id, records] : by_image(gts)) {
    Rng rng(noise.seed ^ stable_hash(image_id));
    for (const GroundTruthRecord* g : records) {
      if (rng.uniform() < noise.drop_rate) continue;
      const double s = noise.jitter_sigma;
      const double x1 = g->box.x1() + s * rng.normal();
      const double y1 = g->box.y1() + s * rng.normal();
      const double x2 = g->box.x2() + s * rng.normal();
      const double y2 = g->box.y2() + s * rng.normal();
      const Box box = ordered_box(x1, y1, x2, y2);
      const double conf = std::clamp(
          noise.calib_slope * iou(box, g->box) + noise.calib_sigma * rng.normal(), 0.0, 1.0);
      int cls = g->class_id;
      if (rng.uniform() < noise.misclass_rate && num_classes > 1) {
        // uniform over the other classes
        const int pick = rng.uniform_int(num_classes - 1);
        cls = pick >= g->class_id ? pick + 1 : pick;
      }
      out.push_back(Detection{box, cls, conf, model_id, image_id});
    }
    const int spurious = noise.fp_rate > 0.0 ? rng.poisson(noise.fp_rate) : 0;
    for (int i = 0; i < spurious; ++i) {
      const double ax = rng.uniform(0.0, noise.canvas_width);
      const double bx = rng.uniform(0.0, noise.canvas_width);
      const double ay = rng.uniform(0.0, noise.canvas_height);
      const double by = rng.uniform(0.0, noise.canvas_height);
      const int cls = num_classes > 0 ? rng.uniform_int(num_classes) : 0;
      const double conf = rng.uniform(0.05, 0.5);
      out.push_back(Detection{ordered_box(ax, ay, bx, by), cls, conf, model_id, image_id});
    }
  }
  return out;
}

std::vector<std::vector<Detection>> generate_ensemble(std::span<const GroundTruthRecord> gts,
                                                      const NoiseModel& base, int k_models) {
  if (k_models < 1) throw ContractError("ensemble needs at least one model");
  std::vector<std::vector<Detection>> out;
  out.reserve(static_cast<std::size_t>(k_models));
  for (int i = 0; i < k_models; ++i) {
    NoiseModel m = base;
    m.seed = base.seed + static_cast<std::uint64_t>(i);
    out.push_back(generate_model_detections(gts, m, i));
  }
  return out;
}

std::vector<GroundTruthRecord> make_fixture(const FixtureSpec& spec) {
  if (spec.images < 0 || spec.classes < 1 || spec.boxes_per_image < 0) {
    throw ContractError("invalid fixture shape");
  }
  if (spec.width < 120.0 || spec.height < 120.0) throw ContractError("fixture canvas too small");
  std::vector<GroundTruthRecord> out;
  for (int i = 0; i < spec.images; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img%03d", i);
    Rng rng(spec.seed ^ stable_hash(id));
    std::vector<Box> placed;
    for (int attempt = 0; attempt < 10000 && static_cast<int>(placed.size()) < spec.boxes_per_image;
         ++attempt) {
      const double w = std::round(rng.uniform(40.0, 120.0));
      const double h = std::round(rng.uniform(40.0, 120.0));
      const double x = std::round(rng.uniform(0.0, spec.width - w));
      const double y = std::round(rng.uniform(0.0, spec.height - h));
      const Box b(x, y, x + w, y + h);
      const bool clear = std::none_of(placed.begin(), placed.end(), [&](const Box& o) {
        return b.x1() < o.x2() && o.x1() < b.x2() && b.y1() < o.y2() && o.y1() < b.y2();
      });
      if (!clear) continue;
      placed.push_back(b);
      out.push_back(GroundTruthRecord{id, rng.uniform_int(spec.classes), b});
    }
    if (static_cast<int>(placed.size()) < spec.boxes_per_image) {
      throw ContractError("could not place fixture boxes without overlap");
    }
  }
  return out;
}

}  // namespace detfuse
