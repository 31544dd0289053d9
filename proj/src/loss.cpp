#include "detfuse/loss.hpp"

#include <cmath>
#include <string>

#include "detfuse/error.hpp"

namespace detfuse {
namespace {

std::size_t check_layout(const PredictionGrid& predictions, const TargetGrid& targets,
                         const LossWeights& weights) {
  if (weights.lambda_coord < 0.0 || weights.lambda_noobj < 0.0) {
    throw ContractError("loss weights must be non-negative");
  }
  if (predictions.size() != targets.size()) {
    throw ContractError("prediction grid has " + std::to_string(predictions.size()) +
                        " cells, target grid " + std::to_string(targets.size()));
  }
  std::optional<std::size_t> num_classes;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != targets[i].size()) {
      throw ContractError("cell " + std::to_string(i) + " predictor count mismatch");
    }
    for (std::size_t j = 0; j < predictions[i].size(); ++j) {
      const CellBoxPrediction& p = predictions[i][j];
      const CellBoxTarget& t = targets[i][j];
      if (!num_classes) num_classes = p.class_probs.size();
      if (p.class_probs.size() != *num_classes) {
        throw ContractError("class probability vectors differ in length");
      }
      if (!t.responsible) continue;
      if (!t.target_class || *t.target_class < 0 ||
          static_cast<std::size_t>(*t.target_class) >= *num_classes) {
        throw ContractError("responsible target in cell " + std::to_string(i) +
                            " lacks a valid class");
      }
      if (p.w < 0.0 || p.h < 0.0) {
        throw DomainError("negative width/height in responsible prediction (cell " +
                          std::to_string(i) + ", box " + std::to_string(j) + ")");
      }
      if (!(t.w > 0.0) || !(t.h > 0.0)) {
        throw DomainError("responsible target width/height must be positive");
      }
    }
  }
  return num_classes.value_or(0);
}

double sq(double v) { return v * v; }

}  // namespace

LossBreakdown yolo_loss(const PredictionGrid& predictions, const TargetGrid& targets,
                        const LossWeights& weights) {
  check_layout(predictions, targets, weights);
  LossBreakdown out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t j = 0; j < predictions[i].size(); ++j) {
      const CellBoxPrediction& p = predictions[i][j];
      const CellBoxTarget& t = targets[i][j];
      const double conf_err = sq(p.conf - t.conf);
      if (!t.responsible) {
        out.err_conf += weights.lambda_noobj * conf_err;
        out.total += weights.lambda_noobj * conf_err;
        continue;
      }
      const double center = sq(p.x - t.x) + sq(p.y - t.y);
      const double wh = sq(std::sqrt(p.w) - std::sqrt(t.w)) + sq(std::sqrt(p.h) - std::sqrt(t.h));
      double cls = 0.0;
      for (std::size_t c = 0; c < p.class_probs.size(); ++c) {
        const double onehot = static_cast<int>(c) == *t.target_class ? 1.0 : 0.0;
        cls += sq(p.class_probs[c] - onehot);
      }
      out.err_center += center;
      out.err_wh += wh;
      out.err_class += cls;
      out.err_conf += conf_err;
      out.total += weights.lambda_coord * center + weights.lambda_coord * wh + cls + conf_err;
    }
  }
  return out;
}

GradientGrid yolo_loss_gradient(const PredictionGrid& predictions, const TargetGrid& targets,
                                const LossWeights& weights) {
  check_layout(predictions, targets, weights);
  GradientGrid grad(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    grad[i].resize(predictions[i].size());
    for (std::size_t j = 0; j < predictions[i].size(); ++j) {
      const CellBoxPrediction& p = predictions[i][j];
      const CellBoxTarget& t = targets[i][j];
      PredictionGradient& g = grad[i][j];
      g.class_probs.assign(p.class_probs.size(), 0.0);
      if (!t.responsible) {
        g.conf = 2.0 * weights.lambda_noobj * (p.conf - t.conf);
        continue;
      }
      if (!(p.w > 0.0) || !(p.h > 0.0)) {
        throw DomainError("gradient undefined at zero width/height");
      }
      const double lc = weights.lambda_coord;
      g.x = 2.0 * lc * (p.x - t.x);
      g.y = 2.0 * lc * (p.y - t.y);
      g.w = lc * (std::sqrt(p.w) - std::sqrt(t.w)) / std::sqrt(p.w);
      g.h = lc * (std::sqrt(p.h) - std::sqrt(t.h)) / std::sqrt(p.h);
      g.conf = 2.0 * (p.conf - t.conf);
      for (std::size_t c = 0; c < p.class_probs.size(); ++c) {
        const double onehot = static_cast<int>(c) == *t.target_class ? 1.0 : 0.0;
        g.class_probs[c] = 2.0 * (p.class_probs[c] - onehot);
      }
    }
  }
  return grad;
}

}  // namespace detfuse
