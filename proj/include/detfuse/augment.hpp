#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "detfuse/eval.hpp"
#include "detfuse/formats.hpp"
#include "detfuse/image.hpp"

namespace detfuse {

struct AnnotatedImage {
  RasterImage image;
  std::vector<GroundTruthRecord> annotations;
};

/// Annotations removed because clipping left them with zero area.
struct RemapStats {
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

/// Clips every box to [0, width] x [0, height]; drops boxes left with zero area.
RemapStats clip_annotations(AnnotatedImage& img);

/// Rotates clockwise (on screen, y pointing down) about the image center.
/// The canvas grows to the rotated extent and uncovered pixels are black.
/// Multiples of 90 degrees move pixels exactly; other angles resample
/// bilinearly. Each box becomes the axis-aligned hull of its rotated corners,
/// clipped to the new canvas. Throws ContractError unless angle is in [0, 360).
AnnotatedImage rotate_with_boxes(const AnnotatedImage& src, double angle_deg);
AnnotatedImage rotate_with_boxes(const AnnotatedImage& src, double angle_deg, RemapStats& stats);

/// Horizontal flip: (x1, y1, x2, y2) -> (W - x2, y1, W - x1, y2).
AnnotatedImage mirror_with_boxes(const AnnotatedImage& src);

/// Scales HSV saturation and value, clamps, converts back with rounding.
RasterImage adjust_color(const RasterImage& src, double saturation, double exposure);

/// Mean over the (2r+1)^2 window, restricted to pixels inside the image.
RasterImage blur(const RasterImage& src, int radius);

/// Scales each channel about 128, rounds and clamps to [0, 255].
RasterImage contrast(const RasterImage& src, double factor);

struct AugmentSpec {
  std::vector<double> rotations{0.0};
  std::vector<double> saturation_factors{1.0};
  std::vector<double> exposure_factors{1.0};
  bool mirror = false;
  std::vector<int> blur_radii;           // empty: no blur variants
  std::vector<double> contrast_factors;  // empty: no contrast variants

  /// Throws ContractError on out-of-range angles, non-positive factors or
  /// negative radii.
  void validate() const;
};

/// One derived image of the expansion grid.
struct Variant {
  double rotation = 0.0;
  double saturation = 1.0;
  double exposure = 1.0;
  bool mirrored = false;
  int blur_radius = 0;
  double contrast = 1.0;

  /// Name suffix, e.g. "_r045_s120_e100" plus "_m", "_b2", "_c150" when set.
  std::string suffix() const;
};

/// Cartesian product rotation x saturation x exposure x mirror x blur x
/// contrast, in that nesting order.
std::vector<Variant> expand_variants(const AugmentSpec& spec);

AnnotatedImage apply_variant(const AnnotatedImage& src, const Variant& v, RemapStats& stats);

struct ProvenanceEntry {
  std::string derived;  // derived image file name
  std::filesystem::path source_image;
  std::string transform;  // variant suffix without the leading underscore
};

struct FileFailure {
  std::filesystem::path path;
  std::string message;
};

struct ExpandResult {
  std::vector<ManifestEntry> entries;  // paths relative to the output directory
  std::vector<ProvenanceEntry> provenance;
  std::vector<FileFailure> failures;
  std::size_t boxes_in = 0;
  std::size_t boxes_out = 0;
  std::size_t boxes_dropped = 0;
};

/// Writes every variant of every readable source into out_dir as
/// `<stem><suffix>.ppm` / `.txt`, then `manifest.txt` and `provenance.tsv`.
/// Unreadable sources are recorded in `failures` and skipped. Two outputs
/// with the same name are a fatal ContractError raised before anything is
/// written.
ExpandResult expand_dataset(std::span<const ManifestEntry> manifest, const AugmentSpec& spec,
                            const std::filesystem::path& out_dir);

}  // namespace detfuse
