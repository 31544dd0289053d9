#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "detfuse/eval.hpp"
#include "detfuse/fusion.hpp"

namespace detfuse {

// Detection record files: one JSON object per line,
//   {"image_id":"a","model_id":0,"class_id":3,"bbox":[x1,y1,x2,y2],"score":0.9}
// Geometry is absolute pixels. Blank lines are ignored.

/// Throws ParseError (with line number) on malformed records, including
/// boxes that look normalized: all coordinates within [0, 1] and at least one
/// of them fractional.
std::vector<Detection> parse_detections(std::istream& in, const std::string& source);
std::vector<Detection> read_detection_file(const std::filesystem::path& path);

std::string format_detection(const Detection& d);
void write_detections(std::ostream& out, std::span<const Detection> detections);
void write_detection_file(const std::filesystem::path& path, std::span<const Detection> detections);

// Annotation files: one `class_id x1 y1 x2 y2` record per line, absolute
// pixels, space separated, LF endings.

std::vector<GroundTruthRecord> parse_annotations(std::istream& in, const std::string& source,
                                                 const std::string& image_id);
std::vector<GroundTruthRecord> read_annotation_file(const std::filesystem::path& path,
                                                    const std::string& image_id);
void write_annotation_file(const std::filesystem::path& path,
                           std::span<const GroundTruthRecord> records);

// Manifests: one `image_path annotation_path` pair per line. Relative paths
// resolve against the manifest's directory.

struct ManifestEntry {
  std::filesystem::path image;
  std::filesystem::path annotation;

  /// Image key used to join annotations with detections: the image file stem.
  std::string image_id() const { return image.stem().string(); }

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Entries come back with paths resolved against the manifest directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Writes entries as given (callers choose relative or absolute paths).
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

/// Reads every annotation file named by the manifest. A missing annotation
/// file is an IoError naming the path.
std::vector<GroundTruthRecord> read_ground_truth(const std::filesystem::path& manifest);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

}  // namespace detfuse
