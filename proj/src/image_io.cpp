#include "bilearn/image_io.hpp"

#include "bilearn/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace bilearn {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Minimal netpbm header tokenizer: whitespace and '#' comments between fields.
class HeaderReader {
 public:
  explicit HeaderReader(std::string_view s) : s_(s) {}

  void skip_separators() {
    while (pos_ < s_.size()) {
      if (is_space(s_[pos_])) {
        ++pos_;
      } else if (s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_separators();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 1'000'000'000L) throw ParseError(std::string("PGM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PGM header: expected ") + what, start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace

ImageGrid decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("not a binary PGM (magic P5)", 0);
  HeaderReader h(bytes);
  h.advance();
  h.advance();
  if (h.pos() >= bytes.size() || !(is_space(bytes[h.pos()]) || bytes[h.pos()] == '#'))
    throw ParseError("PGM header: expected whitespace after magic", h.pos());
  const long w = h.number("width");
  const long ht = h.number("height");
  const std::size_t maxval_at = h.pos();
  const long maxval = h.number("maxval");
  if (w < 2 || ht < 2) throw ParseError("PGM extent must be at least 2x2", maxval_at);
  if (maxval < 1 || maxval > 255) throw ParseError("PGM maxval must lie in 1..255", maxval_at);
  if (h.pos() >= bytes.size() || !is_space(bytes[h.pos()]))
    throw ParseError("PGM header: expected one whitespace byte before data", h.pos());
  const std::size_t data = h.pos() + 1;
  const std::size_t need = std::size_t(w) * std::size_t(ht);
  if (bytes.size() - data < need) throw ParseError("PGM data truncated", bytes.size());

  ImageGrid img(static_cast<int>(w), static_cast<int>(ht));
  for (std::size_t k = 0; k < need; ++k)
    img.values[Eigen::Index(k)] = double(static_cast<unsigned char>(bytes[data + k])) / double(maxval);
  return img;
}

std::string encode_pgm(const ImageGrid& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + std::size_t(img.size()));
  for (Eigen::Index k = 0; k < img.size(); ++k) {
    const double v = std::clamp(img.values[k], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::round(v * 255.0))));
  }
  return out;
}

ImageGrid read_pgm(const std::filesystem::path& path) { return decode_pgm(slurp(path)); }

void write_pgm(const ImageGrid& img, const std::filesystem::path& path) { spit(path, encode_pgm(img)); }

ImageGrid decode_f64(std::string_view bytes) {
  if (bytes.substr(0, 4) != "F64\n") throw ParseError("not a float64 image (magic F64)", 0);
  HeaderReader h(bytes);
  for (int i = 0; i < 4; ++i) h.advance();
  const long w = h.number("width");
  const long ht = h.number("height");
  if (h.pos() >= bytes.size() || bytes[h.pos()] != '\n') throw ParseError("F64 header: expected newline", h.pos());
  if (w < 2 || ht < 2) throw ParseError("F64 extent must be at least 2x2", h.pos());
  const std::size_t data = h.pos() + 1;
  const std::size_t need = std::size_t(w) * std::size_t(ht);
  if (bytes.size() - data != need * 8) throw ParseError("F64 payload has the wrong length", bytes.size());
  ImageGrid img(static_cast<int>(w), static_cast<int>(ht));
  for (std::size_t k = 0; k < need; ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(static_cast<unsigned char>(bytes[data + 8 * k + b])) << (8 * b);
    img.values[Eigen::Index(k)] = std::bit_cast<double>(bits);
  }
  return img;
}

std::string encode_f64(const ImageGrid& img) {
  std::string out = "F64\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n";
  for (Eigen::Index k = 0; k < img.size(); ++k) {
    const auto bits = std::bit_cast<std::uint64_t>(img.values[k]);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

ImageGrid read_f64(const std::filesystem::path& path) { return decode_f64(slurp(path)); }

void write_f64(const ImageGrid& img, const std::filesystem::path& path) { spit(path, encode_f64(img)); }

ImageGrid resize_bilinear(const ImageGrid& img, int width, int height) {
  ImageGrid out(width, height);
  const double sx = double(img.width) / width;
  const double sy = double(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(img.height - 1));
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(img.width - 1));
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - x0;
      out(x, y) = (1 - ty) * ((1 - tx) * img(x0, y0) + tx * img(x1, y0)) + ty * ((1 - tx) * img(x0, y1) + tx * img(x1, y1));
    }
  }
  return out;
}

ImageGrid prepare_square(const ImageGrid& img, int edge) {
  if (edge < 2) throw std::invalid_argument("target edge must be at least 2");
  const double scale = double(edge) / std::min(img.width, img.height);
  const int w = std::max(edge, int(std::lround(img.width * scale)));
  const int h = std::max(edge, int(std::lround(img.height * scale)));
  const ImageGrid big = resize_bilinear(img, w, h);
  ImageGrid out(edge, edge);
  for (int y = 0; y < edge; ++y)
    for (int x = 0; x < edge; ++x) out(x, y) = big(x, y);
  return out;
}

ImageGrid read_image(const std::filesystem::path& path) {
  return path.extension() == ".f64" ? read_f64(path) : read_pgm(path);
}

void write_image(const ImageGrid& img, const std::filesystem::path& path) {
  if (path.extension() == ".f64")
    write_f64(img, path);
  else
    write_pgm(img, path);
}

}  // namespace bilearn
