#include "detfuse/formats.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "detfuse/error.hpp"

namespace detfuse {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool looks_normalized(double x1, double y1, double x2, double y2) {
  const double c[] = {x1, y1, x2, y2};
  bool fractional = false;
  for (double v : c) {
    if (v < 0.0 || v > 1.0) return false;
    if (v != std::floor(v)) fractional = true;
  }
  return fractional;
}

Box parse_box(double x1, double y1, double x2, double y2, const std::string& source,
              std::size_t line) {
  if (looks_normalized(x1, y1, x2, y2)) {
    throw ParseError(source, line, "box looks normalized; coordinates must be absolute pixels");
  }
  try {
    return Box(x1, y1, x2, y2);
  } catch (const ContractError& e) {
    throw ParseError(source, line, e.what());
  }
}

template <typename T>
T required(const json& obj, const char* key, const std::string& source, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, std::string("missing key '") + key + "'");
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw std::invalid_argument("not an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw std::invalid_argument("not a number");
    } else {
      if (!it->is_string()) throw std::invalid_argument("not a string");
    }
    return it->get<T>();
  } catch (const std::exception&) {
    throw ParseError(source, line, std::string("bad value for '") + key + "'");
  }
}

std::ifstream open_input(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(std::string("cannot write ") + what + " " + path.string());
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<Detection> parse_detections(std::istream& in, const std::string& source) {
  std::vector<Detection> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source, lineno, "record is not an object");

    Detection d;
    d.image_id = required<std::string>(obj, "image_id", source, lineno);
    d.model_id = required<int>(obj, "model_id", source, lineno);
    d.class_id = required<int>(obj, "class_id", source, lineno);
    d.prob = required<double>(obj, "score", source, lineno);
    const auto bb = obj.find("bbox");
    if (bb == obj.end() || !bb->is_array() || bb->size() != 4 ||
        !std::all_of(bb->begin(), bb->end(), [](const json& v) { return v.is_number(); })) {
      throw ParseError(source, lineno, "bbox must be an array of four numbers");
    }
    d.box = parse_box((*bb)[0].get<double>(), (*bb)[1].get<double>(), (*bb)[2].get<double>(),
                      (*bb)[3].get<double>(), source, lineno);
    try {
      validate(d);
    } catch (const ContractError& e) {
      throw ParseError(source, lineno, e.what());
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> read_detection_file(const std::filesystem::path& path) {
  auto in = open_input(path, "detection file");
  return parse_detections(in, path.string());
}

std::string format_detection(const Detection& d) {
  ordered_json obj;
  obj["image_id"] = d.image_id;
  obj["model_id"] = d.model_id;
  obj["class_id"] = d.class_id;
  obj["bbox"] = {d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2()};
  obj["score"] = d.prob;
  return obj.dump();
}

void write_detections(std::ostream& out, std::span<const Detection> detections) {
  for (const Detection& d : detections) out << format_detection(d) << '\n';
}

void write_detection_file(const std::filesystem::path& path,
                          std::span<const Detection> detections) {
  auto out = open_output(path, "detection file");
  write_detections(out, detections);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<GroundTruthRecord> parse_annotations(std::istream& in, const std::string& source,
                                                 const std::string& image_id) {
  std::vector<GroundTruthRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::istringstream fields(line);
    long long cls = 0;
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    std::string extra;
    if (!(fields >> cls >> x1 >> y1 >> x2 >> y2) || (fields >> extra)) {
      throw ParseError(source, lineno, "expected 'class_id x1 y1 x2 y2'");
    }
    if (cls < 0 || cls > std::numeric_limits<int>::max()) {
      throw ParseError(source, lineno, "class id out of range");
    }
    out.push_back(GroundTruthRecord{image_id, static_cast<int>(cls),
                                    parse_box(x1, y1, x2, y2, source, lineno)});
  }
  return out;
}

std::vector<GroundTruthRecord> read_annotation_file(const std::filesystem::path& path,
                                                    const std::string& image_id) {
  auto in = open_input(path, "annotation file");
  return parse_annotations(in, path.string(), image_id);
}

void write_annotation_file(const std::filesystem::path& path,
                           std::span<const GroundTruthRecord> records) {
  auto out = open_output(path, "annotation file");
  for (const GroundTruthRecord& r : records) {
    out << r.class_id << ' ' << format_real(r.box.x1()) << ' ' << format_real(r.box.y1()) << ' '
        << format_real(r.box.x2()) << ' ' << format_real(r.box.y2()) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  auto in = open_input(path, "manifest");
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::istringstream fields(line);
    std::string image, annotation, extra;
    if (!(fields >> image >> annotation) || (fields >> extra)) {
      throw ParseError(path.string(), lineno, "expected 'image_path annotation_path'");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    out.push_back(ManifestEntry{resolve(image), resolve(annotation)});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  auto out = open_output(path, "manifest");
  for (const ManifestEntry& e : entries) {
    out << e.image.generic_string() << ' ' << e.annotation.generic_string() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<GroundTruthRecord> read_ground_truth(const std::filesystem::path& manifest) {
  std::vector<GroundTruthRecord> out;
  for (const ManifestEntry& e : read_manifest(manifest)) {
    if (!std::filesystem::exists(e.annotation)) {
      throw IoError("missing annotation file " + e.annotation.string());
    }
    auto recs = read_annotation_file(e.annotation, e.image_id());
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

}  // namespace detfuse
