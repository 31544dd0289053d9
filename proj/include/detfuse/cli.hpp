#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "detfuse/augment.hpp"
#include "detfuse/eval.hpp"
#include "detfuse/fusion.hpp"
#include "detfuse/synth.hpp"

namespace detfuse::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParse = 2,     // malformed input file
  kIo = 3,        // missing/unreadable/unwritable file
  kContract = 4,  // input violates a contract (mixed images, bad values, collisions)
};

struct FuseConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output;
  FusionOptions fusion;
};

struct FuseStats {
  std::size_t images = 0;
  std::size_t detections_in = 0;
  std::size_t clusters_out = 0;
};

/// Concatenates every input, fuses per image (images in parallel), writes the
/// summaries as model_id -1 records ordered by image_id then rank, and logs
/// one `image_id<TAB>clusters` line per image.
FuseStats cmd_fuse(const FuseConfig& config, std::ostream& log);

/// Groups detections by image and fuses each group. Output is ordered by
/// image_id, then rank within the image.
std::vector<Detection> fuse_all(
    std::span<const Detection> detections, const FusionOptions& options,
    std::vector<std::pair<std::string, std::size_t>>* per_image = nullptr);

struct EvalConfig {
  std::filesystem::path predictions;
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  EvalOptions eval;
};

/// Writes report.txt (human readable), report.tsv (per-class table) and
/// summary.tsv (key/value) into out_dir.
EvalReport cmd_eval(const EvalConfig& config, std::ostream& log);

/// Machine-readable tables, exactly as cmd_eval writes them.
std::string format_class_table(const EvalReport& report);
std::string format_summary_table(const EvalReport& report, const EvalOptions& options);
std::string format_human_report(const EvalReport& report, const EvalOptions& options);

struct AugmentConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  AugmentSpec spec;
};

ExpandResult cmd_augment(const AugmentConfig& config, std::ostream& log);

struct SynthConfig {
  std::filesystem::path manifest;  // ground truth
  std::filesystem::path out_dir;
  NoiseModel noise;
  int models = 1;
};

/// Writes model_<i>.jsonl for each simulated model; returns their paths.
std::vector<std::filesystem::path> cmd_synth(const SynthConfig& config, std::ostream& log);

struct FixtureConfig {
  std::filesystem::path out_dir;
  FixtureSpec spec;
  bool with_images = false;
};

/// Writes the synthetic ground-truth dataset: one annotation file per image,
/// manifest.txt, and (optionally) flat gray PPM images with the boxes drawn in.
std::filesystem::path cmd_fixture(const FixtureConfig& config, std::ostream& log);

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace detfuse::cli
