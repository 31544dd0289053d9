#include "detfuse/image.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "detfuse/error.hpp"

namespace detfuse {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::string& source) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  if (tok.empty()) throw ParseError(source, 1, "truncated PPM header");
  return tok;
}

int header_int(std::istream& in, const std::string& source) {
  const std::string tok = header_token(in, source);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, 1, "bad PPM header field '" + tok + "'");
  }
}

}  // namespace

RasterImage::RasterImage(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw ContractError("negative image size");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0);
}

void RasterImage::validate() const {
  if (width < 0 || height < 0 ||
      pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw ContractError("pixel buffer does not match image dimensions");
  }
}

RasterImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  const std::string source = path.string();
  if (header_token(in, source) != "P6") throw ParseError(source, 1, "not a binary PPM (P6)");
  const int w = header_int(in, source);
  const int h = header_int(in, source);
  const int maxval = header_int(in, source);
  if (maxval != 255) throw ParseError(source, 1, "only maxval 255 is supported");
  // header_token consumed exactly one whitespace byte after maxval
  RasterImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ParseError(source, 1, "truncated PPM pixel data");
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RasterImage& image) {
  image.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write image " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detfuse
