#include "detfuse/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "detfuse/error.hpp"
#include "detfuse/formats.hpp"
#include "detfuse/parallel.hpp"

namespace detfuse::cli {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void check_threshold(double t, const char* what) {
  if (!(t > 0.0 && t < 1.0)) throw ContractError(std::string(what) + " must lie in (0, 1)");
}

}  // namespace

std::vector<Detection> fuse_all(std::span<const Detection> detections, const FusionOptions& options,
                                std::vector<std::pair<std::string, std::size_t>>* per_image) {
  std::map<std::string, std::vector<Detection>> groups;
  for (const Detection& d : detections) groups[d.image_id].push_back(d);

  std::vector<const std::pair<const std::string, std::vector<Detection>>*> order;
  for (const auto& g : groups) order.push_back(&g);
  std::vector<std::vector<Detection>> fused(order.size());
  parallel_for(order.size(), [&](std::size_t i) {
    const auto summaries = merge_boxes(order[i]->second, options);
    fused[i] = to_detections(summaries, order[i]->first);
  });

  std::vector<Detection> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (per_image) per_image->emplace_back(order[i]->first, fused[i].size());
    out.insert(out.end(), fused[i].begin(), fused[i].end());
  }
  return out;
}

FuseStats cmd_fuse(const FuseConfig& config, std::ostream& log) {
  if (config.inputs.empty()) throw ContractError("fuse needs at least one input file");
  check_threshold(config.fusion.iou_threshold, "--iou-fusion");
  std::vector<Detection> all;
  for (const auto& path : config.inputs) {
    auto recs = read_detection_file(path);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  std::vector<std::pair<std::string, std::size_t>> counts;
  const auto fused = fuse_all(all, config.fusion, &counts);
  write_detection_file(config.output, fused);
  for (const auto& [image, n] : counts) log << image << '\t' << n << '\n';
  return FuseStats{counts.size(), all.size(), fused.size()};
}

std::string format_class_table(const EvalReport& report) {
  std::ostringstream out;
  out << "class_id\tap\ttp\tfp\tfn\n";
  for (const APResult& r : report.per_class) {
    out << r.class_id << '\t' << fixed(r.ap, 10) << '\t' << r.tp << '\t' << r.fp << '\t' << r.fn
        << '\n';
  }
  return out.str();
}

std::string format_summary_table(const EvalReport& report, const EvalOptions& options) {
  std::ostringstream out;
  out << "key\tvalue\n"
      << "map\t" << fixed(report.map, 10) << '\n'
      << "detection_rate\t" << fixed(report.detection_rate, 10) << '\n'
      << "num_ground_truth\t" << report.num_ground_truth << '\n'
      << "num_localized\t" << report.num_localized << '\n'
      << "num_classes\t" << report.per_class.size() << '\n'
      << "iou_threshold\t" << format_real(options.iou_threshold) << '\n'
      << "n_blocks\t" << options.n_blocks << '\n';
  return out.str();
}

std::string format_human_report(const EvalReport& report, const EvalOptions& options) {
  std::ostringstream out;
  out << "detfuse evaluation report\n"
      << "match rule: IoU > " << format_real(options.iou_threshold) << ", AP over "
      << options.n_blocks << " recall blocks\n\n";
  char line[128];
  std::snprintf(line, sizeof line, "%8s %10s %8s %8s %8s\n", "class", "AP", "TP", "FP", "FN");
  out << line;
  for (const APResult& r : report.per_class) {
    std::snprintf(line, sizeof line, "%8d %10.6f %8zu %8zu %8zu\n", r.class_id, r.ap, r.tp, r.fp,
                  r.fn);
    out << line;
  }
  out << "\nmAP: " << fixed(report.map, 6) << '\n'
      << "detection rate (class-agnostic localization): " << fixed(100.0 * report.detection_rate, 2)
      << "% (" << report.num_localized << '/' << report.num_ground_truth << ")\n";
  if (!report.prediction_only_classes.empty()) {
    out << "classes predicted but absent from ground truth:";
    for (int c : report.prediction_only_classes) out << ' ' << c;
    out << '\n';
  }
  for (const std::string& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

EvalReport cmd_eval(const EvalConfig& config, std::ostream& log) {
  check_threshold(config.eval.iou_threshold, "--iou-eval");
  if (config.eval.n_blocks < 1) throw ContractError("--n-blocks must be at least 1");
  const auto preds = read_detection_file(config.predictions);
  const auto gts = read_ground_truth(config.manifest);
  const EvalReport report = evaluate_dataset(preds, gts, config.eval);

  std::filesystem::create_directories(config.out_dir);
  const std::string human = format_human_report(report, config.eval);
  write_text(config.out_dir / "report.txt", human);
  write_text(config.out_dir / "report.tsv", format_class_table(report));
  write_text(config.out_dir / "summary.tsv", format_summary_table(report, config.eval));
  log << human;
  return report;
}

ExpandResult cmd_augment(const AugmentConfig& config, std::ostream& log) {
  const auto manifest = read_manifest(config.manifest);
  ExpandResult result = expand_dataset(manifest, config.spec, config.out_dir);
  for (const FileFailure& f : result.failures)
    log << "error: " << f.path.string() << ": " << f.message << '\n';
  log << "sources " << manifest.size() << ", derived " << result.entries.size() << ", boxes kept "
      << result.boxes_out << ", dropped " << result.boxes_dropped << '\n';
  return result;
}

std::vector<std::filesystem::path> cmd_synth(const SynthConfig& config, std::ostream& log) {
  const auto gts = read_ground_truth(config.manifest);
  const auto sets = generate_ensemble(gts, config.noise, config.models);
  std::filesystem::create_directories(config.out_dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto path = config.out_dir / ("model_" + std::to_string(i) + ".jsonl");
    write_detection_file(path, sets[i]);
    log << path.string() << '\t' << sets[i].size() << '\n';
    paths.push_back(path);
  }
  return paths;
}

std::filesystem::path cmd_fixture(const FixtureConfig& config, std::ostream& log) {
  const auto gts = make_fixture(config.spec);
  std::filesystem::create_directories(config.out_dir);
  std::map<std::string, std::vector<GroundTruthRecord>> groups;
  for (const auto& g : gts) groups[g.image_id].push_back(g);
  std::vector<ManifestEntry> entries;
  for (const auto& [id, recs] : groups) {
    write_annotation_file(config.out_dir / (id + ".txt"), recs);
    if (config.with_images) {
      RasterImage img(static_cast<int>(config.spec.width), static_cast<int>(config.spec.height));
      std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{96});
      for (const auto& r : recs) {
        const std::uint8_t color[3] = {static_cast<std::uint8_t>(60 + 40 * r.class_id % 190),
                                       static_cast<std::uint8_t>(200 - 30 * r.class_id % 150),
                                       static_cast<std::uint8_t>(30 + 70 * r.class_id % 220)};
        for (int y = static_cast<int>(r.box.y1()); y < static_cast<int>(r.box.y2()); ++y)
          for (int x = static_cast<int>(r.box.x1()); x < static_cast<int>(r.box.x2()); ++x)
            std::copy_n(color, 3, img.at(x, y));
      }
      write_ppm(config.out_dir / (id + ".ppm"), img);
    }
    entries.push_back(ManifestEntry{id + ".ppm", id + ".txt"});
  }
  const auto manifest = config.out_dir / "manifest.txt";
  write_manifest(manifest, entries);
  log << "wrote " << entries.size() << " images, " << gts.size() << " boxes to "
      << config.out_dir.string() << '\n';
  return manifest;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"detfuse: detection ensemble fusion and mAP evaluation"};
  app.footer(
      "Exit codes: 0 success, 1 usage error, 2 malformed input file, 3 I/O error, "
      "4 contract violation.\nDETFUSE_THREADS caps worker threads.");
  app.require_subcommand(1);

  FuseConfig fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Merge detections from several models per image");
  fuse_cmd->add_option("inputs", fuse.inputs, "Detection record files")->required();
  fuse_cmd->add_option("--out", fuse.output, "Output detection file")->required();
  fuse_cmd->add_option("--iou-fusion", fuse.fusion.iou_threshold, "Cluster join threshold (>=)")
      ->capture_default_str();
  bool plain_max = false;
  fuse_cmd->add_flag("--plain-max", plain_max,
                     "Use the max member probability instead of max/|S| as cluster score");

  EvalConfig eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score detections against annotated ground truth");
  eval_cmd->add_option("predictions", eval.predictions, "Detection record file")->required();
  eval_cmd->add_option("manifest", eval.manifest, "Ground-truth manifest")->required();
  eval_cmd->add_option("--out", eval.out_dir, "Report directory")->required();
  eval_cmd->add_option("--iou-eval", eval.eval.iou_threshold, "Match threshold (strict >)")
      ->capture_default_str();
  eval_cmd->add_option("--n-blocks", eval.eval.n_blocks, "Recall blocks for AP")
      ->capture_default_str();

  AugmentConfig aug;
  auto* aug_cmd = app.add_subcommand("augment", "Expand a dataset over a transform grid");
  aug_cmd->add_option("manifest", aug.manifest, "Source manifest")->required();
  aug_cmd->add_option("--out", aug.out_dir, "Output directory")->required();
  aug_cmd->add_option("--rotations", aug.spec.rotations, "Angles in degrees")->delimiter(',');
  aug_cmd->add_option("--saturation", aug.spec.saturation_factors, "Saturation multipliers")
      ->delimiter(',');
  aug_cmd->add_option("--exposure", aug.spec.exposure_factors, "Exposure multipliers")
      ->delimiter(',');
  aug_cmd->add_flag("--mirror", aug.spec.mirror, "Add mirrored variants");
  aug_cmd->add_option("--blur", aug.spec.blur_radii, "Box blur radii")->delimiter(',');
  aug_cmd->add_option("--contrast", aug.spec.contrast_factors, "Contrast factors")->delimiter(',');

  SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Simulate noisy detections from ground truth");
  synth_cmd->add_option("manifest", synth.manifest, "Ground-truth manifest")->required();
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--models", synth.models, "Number of simulated models")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.noise.seed, "Base seed")->capture_default_str();
  synth_cmd->add_option("--jitter", synth.noise.jitter_sigma, "Corner jitter sigma (px)")
      ->capture_default_str();
  synth_cmd->add_option("--drop-rate", synth.noise.drop_rate, "Miss probability")
      ->capture_default_str();
  synth_cmd->add_option("--fp-rate", synth.noise.fp_rate, "Mean spurious boxes per image")
      ->capture_default_str();
  synth_cmd->add_option("--misclass-rate", synth.noise.misclass_rate, "Wrong-class probability")
      ->capture_default_str();
  synth_cmd->add_option("--calib-slope", synth.noise.calib_slope, "Confidence per unit IoU")
      ->capture_default_str();
  synth_cmd->add_option("--calib-sigma", synth.noise.calib_sigma, "Confidence noise sigma")
      ->capture_default_str();
  synth_cmd->add_option("--num-classes", synth.noise.num_classes, "Class count (0: infer)")
      ->capture_default_str();
  synth_cmd->add_option("--canvas-width", synth.noise.canvas_width)->capture_default_str();
  synth_cmd->add_option("--canvas-height", synth.noise.canvas_height)->capture_default_str();

  FixtureConfig fixture;
  auto* fixture_cmd = app.add_subcommand("fixture", "Write the synthetic ground-truth dataset");
  fixture_cmd->add_option("--out", fixture.out_dir, "Output directory")->required();
  fixture_cmd->add_option("--images", fixture.spec.images)->capture_default_str();
  fixture_cmd->add_option("--classes", fixture.spec.classes)->capture_default_str();
  fixture_cmd->add_option("--boxes", fixture.spec.boxes_per_image)->capture_default_str();
  fixture_cmd->add_option("--seed", fixture.spec.seed)->capture_default_str();
  fixture_cmd->add_flag("--with-images", fixture.with_images, "Also write PPM images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fuse_cmd) {
      fuse.fusion.rule = plain_max ? ProbabilityRule::kMax : ProbabilityRule::kMaxOverSupport;
      cmd_fuse(fuse, out);
    } else if (*eval_cmd) {
      cmd_eval(eval, out);
    } else if (*aug_cmd) {
      const auto result = cmd_augment(aug, out);
      if (!result.failures.empty()) {
        err << result.failures.size() << " source(s) could not be read\n";
        return kIo;
      }
    } else if (*synth_cmd) {
      cmd_synth(synth, out);
    } else if (*fixture_cmd) {
      cmd_fixture(fixture, out);
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kContract;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}

}  // namespace detfuse::cli
