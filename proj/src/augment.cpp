#include "detfuse/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "detfuse/error.hpp"
#include "detfuse/parallel.hpp"

namespace detfuse {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

struct Hsv {
  double h;  // degrees in [0, 360)
  double s;
  double v;
};

Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out{0.0, mx > 0.0 ? d / mx : 0.0, mx};
  if (d > 0.0) {
    if (mx == r) {
      out.h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
    } else if (mx == g) {
      out.h = 60.0 * ((b - r) / d + 2.0);
    } else {
      out.h = 60.0 * ((r - g) / d + 4.0);
    }
  }
  return out;
}

void hsv_to_rgb(const Hsv& c, double& r, double& g, double& b) {
  const double chroma = c.v * c.s;
  const double hp = c.h / 60.0;
  const double x = chroma * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  const double m = c.v - chroma;
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0:
      r1 = chroma;
      g1 = x;
      break;
    case 1:
      r1 = x;
      g1 = chroma;
      break;
    case 2:
      g1 = chroma;
      b1 = x;
      break;
    case 3:
      g1 = x;
      b1 = chroma;
      break;
    case 4:
      r1 = x;
      b1 = chroma;
      break;
    default:
      r1 = chroma;
      b1 = x;
      break;
  }
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

// Corner map for exact quarter turns, on continuous coordinates.
Box rotate_quarter(const Box& b, int quarter, double w, double h) {
  switch (quarter) {
    case 1:
      return Box(h - b.y2(), b.x1(), h - b.y1(), b.x2());
    case 2:
      return Box(w - b.x2(), h - b.y2(), w - b.x1(), h - b.y1());
    case 3:
      return Box(b.y1(), w - b.x2(), b.y2(), w - b.x1());
    default:
      return b;
  }
}

RasterImage rotate_pixels_quarter(const RasterImage& src, int quarter) {
  const int w = src.width;
  const int h = src.height;
  RasterImage dst = (quarter % 2 == 1) ? RasterImage(h, w) : RasterImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int dx = x, dy = y;
      switch (quarter) {
        case 1:
          dx = h - 1 - y;
          dy = x;
          break;
        case 2:
          dx = w - 1 - x;
          dy = h - 1 - y;
          break;
        case 3:
          dx = y;
          dy = w - 1 - x;
          break;
        default:
          break;
      }
      std::copy_n(src.at(x, y), 3, dst.at(dx, dy));
    }
  }
  return dst;
}

int canvas_extent(double extent) {
  // 1e-9 absorbs cos/sin rounding so exact extents do not gain a pixel.
  return static_cast<int>(std::ceil(extent - 1e-9));
}

std::string hundredths(char tag, double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%c%03ld", tag, std::lround(f * 100.0));
  return buf;
}

}  // namespace

RemapStats clip_annotations(AnnotatedImage& img) {
  RemapStats stats;
  const double w = img.image.width;
  const double h = img.image.height;
  std::vector<GroundTruthRecord> kept;
  kept.reserve(img.annotations.size());
  for (GroundTruthRecord& r : img.annotations) {
    const double x1 = std::clamp(r.box.x1(), 0.0, w);
    const double y1 = std::clamp(r.box.y1(), 0.0, h);
    const double x2 = std::clamp(r.box.x2(), 0.0, w);
    const double y2 = std::clamp(r.box.y2(), 0.0, h);
    if (x2 > x1 && y2 > y1) {
      r.box = Box(x1, y1, x2, y2);
      kept.push_back(std::move(r));
    } else {
      ++stats.dropped;
    }
  }
  stats.kept = kept.size();
  img.annotations = std::move(kept);
  return stats;
}

AnnotatedImage rotate_with_boxes(const AnnotatedImage& src, double angle_deg) {
  RemapStats stats;
  return rotate_with_boxes(src, angle_deg, stats);
}

AnnotatedImage rotate_with_boxes(const AnnotatedImage& src, double angle_deg, RemapStats& stats) {
  if (!(angle_deg >= 0.0 && angle_deg < 360.0)) {
    throw ContractError("rotation angle must lie in [0, 360)");
  }
  src.image.validate();
  const double w = src.image.width;
  const double h = src.image.height;
  AnnotatedImage out;
  out.annotations = src.annotations;

  if (std::fmod(angle_deg, 90.0) == 0.0) {
    const int quarter = static_cast<int>(angle_deg / 90.0);
    out.image = rotate_pixels_quarter(src.image, quarter);
    for (GroundTruthRecord& r : out.annotations) r.box = rotate_quarter(r.box, quarter, w, h);
  } else {
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const int nw = canvas_extent(std::fabs(w * c) + std::fabs(h * s));
    const int nh = canvas_extent(std::fabs(w * s) + std::fabs(h * c));
    out.image = RasterImage(nw, nh);

    const int sw = src.image.width;
    const int sh = src.image.height;
    for (int py = 0; py < nh; ++py) {
      for (int px = 0; px < nw; ++px) {
        const double u2 = px + 0.5 - nw / 2.0;
        const double v2 = py + 0.5 - nh / 2.0;
        const double x = c * u2 + s * v2 + w / 2.0;
        const double y = -s * u2 + c * v2 + h / 2.0;
        if (x < 0.0 || x > w || y < 0.0 || y > h || sw == 0 || sh == 0) continue;
        // bilinear on pixel centers, clamped at the image edge
        const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(sw - 1));
        const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(sh - 1));
        const int x0 = static_cast<int>(fx);
        const int y0 = static_cast<int>(fy);
        const int x1 = std::min(x0 + 1, sw - 1);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double ax = fx - x0;
        const double ay = fy - y0;
        std::uint8_t* d = out.image.at(px, py);
        for (int ch = 0; ch < 3; ++ch) {
          const double top = (1 - ax) * src.image.at(x0, y0)[ch] + ax * src.image.at(x1, y0)[ch];
          const double bot = (1 - ax) * src.image.at(x0, y1)[ch] + ax * src.image.at(x1, y1)[ch];
          d[ch] = to_byte((1 - ay) * top + ay * bot);
        }
      }
    }

    for (GroundTruthRecord& r : out.annotations) {
      const double xs[] = {r.box.x1(), r.box.x2(), r.box.x2(), r.box.x1()};
      const double ys[] = {r.box.y1(), r.box.y1(), r.box.y2(), r.box.y2()};
      double minx = INFINITY, miny = INFINITY, maxx = -INFINITY, maxy = -INFINITY;
      for (int k = 0; k < 4; ++k) {
        const double u = xs[k] - w / 2.0;
        const double v = ys[k] - h / 2.0;
        const double x = c * u - s * v + nw / 2.0;
        const double y = s * u + c * v + nh / 2.0;
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
      r.box = Box(minx, miny, maxx, maxy);
    }
  }
  stats = clip_annotations(out);
  return out;
}

AnnotatedImage mirror_with_boxes(const AnnotatedImage& src) {
  src.image.validate();
  const int w = src.image.width;
  AnnotatedImage out{RasterImage(w, src.image.height), src.annotations};
  for (int y = 0; y < src.image.height; ++y) {
    for (int x = 0; x < w; ++x) std::copy_n(src.image.at(x, y), 3, out.image.at(w - 1 - x, y));
  }
  const double wd = w;
  for (GroundTruthRecord& r : out.annotations) {
    r.box = Box(wd - r.box.x2(), r.box.y1(), wd - r.box.x1(), r.box.y2());
  }
  return out;
}

RasterImage adjust_color(const RasterImage& src, double saturation, double exposure) {
  if (!(saturation > 0.0) || !(exposure > 0.0)) {
    throw ContractError("color multipliers must be positive");
  }
  src.validate();
  RasterImage out = src;
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    std::uint8_t* p = out.pixels.data() + i;
    Hsv c = rgb_to_hsv(p[0] / 255.0, p[1] / 255.0, p[2] / 255.0);
    c.s = std::clamp(c.s * saturation, 0.0, 1.0);
    c.v = std::clamp(c.v * exposure, 0.0, 1.0);
    double r = 0, g = 0, b = 0;
    hsv_to_rgb(c, r, g, b);
    p[0] = to_byte(r * 255.0);
    p[1] = to_byte(g * 255.0);
    p[2] = to_byte(b * 255.0);
  }
  return out;
}

RasterImage blur(const RasterImage& src, int radius) {
  if (radius < 0) throw ContractError("blur radius must be non-negative");
  src.validate();
  if (radius == 0) return src;
  const int w = src.width;
  const int h = src.height;
  // summed-area table, one row/column of zero padding
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::uint64_t> sat(stride * (static_cast<std::size_t>(h) + 1) * 3, 0);
  auto idx = [&](int x, int y, int ch) {
    return (static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x)) * 3 + ch;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        sat[idx(x + 1, y + 1, ch)] =
            src.at(x, y)[ch] + sat[idx(x, y + 1, ch)] + sat[idx(x + 1, y, ch)] - sat[idx(x, y, ch)];
      }
    }
  }
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h, y + radius + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w, x + radius + 1);
      const std::uint64_t count = static_cast<std::uint64_t>(x1 - x0) * (y1 - y0);
      for (int ch = 0; ch < 3; ++ch) {
        const std::uint64_t sum = sat[idx(x1, y1, ch)] - sat[idx(x0, y1, ch)] -
                                  sat[idx(x1, y0, ch)] + sat[idx(x0, y0, ch)];
        out.at(x, y)[ch] = static_cast<std::uint8_t>((2 * sum + count) / (2 * count));
      }
    }
  }
  return out;
}

RasterImage contrast(const RasterImage& src, double factor) {
  if (!(factor > 0.0)) throw ContractError("contrast factor must be positive");
  src.validate();
  RasterImage out = src;
  for (std::uint8_t& v : out.pixels) v = to_byte((v - 128.0) * factor + 128.0);
  return out;
}

void AugmentSpec::validate() const {
  if (rotations.empty() || saturation_factors.empty() || exposure_factors.empty()) {
    throw ContractError("rotation, saturation and exposure lists must be non-empty");
  }
  for (double a : rotations) {
    if (!(a >= 0.0 && a < 360.0)) throw ContractError("rotation angle must lie in [0, 360)");
  }
  auto positive = [](const std::vector<double>& v, const char* what) {
    for (double f : v) {
      if (!(f > 0.0)) throw ContractError(std::string(what) + " factors must be positive");
    }
  };
  positive(saturation_factors, "saturation");
  positive(exposure_factors, "exposure");
  positive(contrast_factors, "contrast");
  for (int r : blur_radii) {
    if (r < 0) throw ContractError("blur radii must be non-negative");
  }
}

std::string Variant::suffix() const {
  char buf[32];
  if (rotation == std::floor(rotation)) {
    std::snprintf(buf, sizeof buf, "_r%03d", static_cast<int>(rotation));
  } else {
    // 22.5 -> r022p5
    std::snprintf(buf, sizeof buf, "_r%03dp%ld", static_cast<int>(rotation),
                  std::lround((rotation - std::floor(rotation)) * 10.0));
  }
  std::string out = buf;
  out += hundredths('s', saturation);
  out += hundredths('e', exposure);
  if (mirrored) out += "_m";
  if (blur_radius > 0) out += "_b" + std::to_string(blur_radius);
  if (contrast != 1.0) out += hundredths('c', contrast);
  return out;
}

std::vector<Variant> expand_variants(const AugmentSpec& spec) {
  spec.validate();
  const std::vector<bool> mirrors =
      spec.mirror ? std::vector<bool>{false, true} : std::vector<bool>{false};
  const std::vector<int> blurs = spec.blur_radii.empty() ? std::vector<int>{0} : spec.blur_radii;
  const std::vector<double> contrasts =
      spec.contrast_factors.empty() ? std::vector<double>{1.0} : spec.contrast_factors;
  std::vector<Variant> out;
  for (double r : spec.rotations)
    for (double s : spec.saturation_factors)
      for (double e : spec.exposure_factors)
        for (bool m : mirrors)
          for (int b : blurs)
            for (double c : contrasts) out.push_back(Variant{r, s, e, m, b, c});
  return out;
}

AnnotatedImage apply_variant(const AnnotatedImage& src, const Variant& v, RemapStats& stats) {
  AnnotatedImage img = src;
  const RemapStats source_clip = clip_annotations(img);
  if (v.saturation != 1.0 || v.exposure != 1.0) {
    img.image = adjust_color(img.image, v.saturation, v.exposure);
  }
  if (v.contrast != 1.0) img.image = contrast(img.image, v.contrast);
  if (v.blur_radius > 0) img.image = blur(img.image, v.blur_radius);
  if (v.mirrored) img = mirror_with_boxes(img);
  RemapStats rot;
  img = rotate_with_boxes(img, v.rotation, rot);
  stats.kept = rot.kept;
  stats.dropped = source_clip.dropped + rot.dropped;
  return img;
}

ExpandResult expand_dataset(std::span<const ManifestEntry> manifest, const AugmentSpec& spec,
                            const std::filesystem::path& out_dir) {
  const std::vector<Variant> variants = expand_variants(spec);

  std::set<std::string> names;
  for (const ManifestEntry& e : manifest) {
    for (const Variant& v : variants) {
      const std::string name = e.image.stem().string() + v.suffix();
      if (!names.insert(name).second) {
        throw ContractError("output collision: '" + name + "' would be written twice");
      }
    }
  }
  std::filesystem::create_directories(out_dir);

  struct SourceResult {
    std::optional<FileFailure> failure;
    std::size_t in = 0, out = 0, dropped = 0;
  };
  std::vector<SourceResult> per_source(manifest.size());

  parallel_for(manifest.size(), [&](std::size_t k) {
    const ManifestEntry& e = manifest[k];
    SourceResult& res = per_source[k];
    AnnotatedImage src;
    try {
      src.image = read_ppm(e.image);
      src.annotations = read_annotation_file(e.annotation, e.image_id());
    } catch (const Error& err) {
      res.failure = FileFailure{e.image, err.what()};
      return;
    }
    for (const Variant& v : variants) {
      RemapStats stats;
      const AnnotatedImage derived = apply_variant(src, v, stats);
      const std::string name = e.image.stem().string() + v.suffix();
      write_ppm(out_dir / (name + ".ppm"), derived.image);
      write_annotation_file(out_dir / (name + ".txt"), derived.annotations);
      res.in += src.annotations.size();
      res.out += stats.kept;
      res.dropped += stats.dropped;
    }
  });

  ExpandResult result;
  for (std::size_t k = 0; k < manifest.size(); ++k) {
    const SourceResult& res = per_source[k];
    if (res.failure) {
      result.failures.push_back(*res.failure);
      continue;
    }
    result.boxes_in += res.in;
    result.boxes_out += res.out;
    result.boxes_dropped += res.dropped;
    for (const Variant& v : variants) {
      const std::string name = manifest[k].image.stem().string() + v.suffix();
      result.entries.push_back(ManifestEntry{name + ".ppm", name + ".txt"});
      result.provenance.push_back(
          ProvenanceEntry{name + ".ppm", manifest[k].image, v.suffix().substr(1)});
    }
  }

  write_manifest(out_dir / "manifest.txt", result.entries);
  std::ofstream prov(out_dir / "provenance.tsv", std::ios::binary | std::ios::trunc);
  if (!prov) throw IoError("cannot write " + (out_dir / "provenance.tsv").string());
  prov << "derived\tsource\ttransform\n";
  for (const ProvenanceEntry& p : result.provenance) {
    prov << p.derived << '\t' << p.source_image.generic_string() << '\t' << p.transform << '\n';
  }
  return result;
}

}  // namespace detfuse
