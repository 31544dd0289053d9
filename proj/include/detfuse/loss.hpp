#pragma once

#include <optional>
#include <vector>

namespace detfuse {

struct CellBoxPrediction {
  double x = 0.0;  // center, cell-relative
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 0.0;
  std::vector<double> class_probs;
};

struct CellBoxTarget {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  bool responsible = false;
  /// IoU of the true box with the prediction when an object is present, else 0.
  double conf = 0.0;
  std::optional<int> target_class;
};

struct LossWeights {
  double lambda_coord = 5.0;
  double lambda_noobj = 0.5;
};

struct LossBreakdown {
  double err_center = 0.0;
  double err_wh = 0.0;
  double err_class = 0.0;
  double err_conf = 0.0;
  double total = 0.0;
};

/// Outer index: grid cell (D*D flattened). Inner index: predictor in the cell.
using PredictionGrid = std::vector<std::vector<CellBoxPrediction>>;
using TargetGrid = std::vector<std::vector<CellBoxTarget>>;

/// Sum-of-squares YOLO loss.
///
/// Responsible predictors contribute center, sqrt-width/height, one-hot class
/// and confidence errors; every other predictor contributes its confidence
/// error weighted by lambda_noobj. `total` is accumulated term by term in a
/// fixed cell/box order, not recombined from the parts.
///
/// Throws ContractError on layout mismatch or an incomplete responsible target,
/// DomainError on a negative width/height in a responsible predictor or a
/// non-positive target width/height.
LossBreakdown yolo_loss(const PredictionGrid& predictions, const TargetGrid& targets,
                        const LossWeights& weights = {});

/// d(total)/d(field) for every prediction field, same layout as the input.
struct PredictionGradient {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double conf = 0.0;
  std::vector<double> class_probs;
};
using GradientGrid = std::vector<std::vector<PredictionGradient>>;

/// Analytic gradient of yolo_loss(...).total. Requires w, h > 0 for
/// responsible predictors (the sqrt term is not differentiable at 0).
GradientGrid yolo_loss_gradient(const PredictionGrid& predictions, const TargetGrid& targets,
                                const LossWeights& weights = {});

}  // namespace detfuse
