#pragma once

#include "bilearn/grid.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace bilearn {

// Binary PGM (P5), 8 bit. Header comments are accepted on input; output is always
// "P5\n<W> <H>\n255\n" followed by row-major bytes.

/// Parses a P5 image; samples are divided by maxval. Throws ParseError with the byte offset.
ImageGrid decode_pgm(std::string_view bytes);
/// Clamps to [0,1] and quantises v*255 with round-half-away-from-zero.
std::string encode_pgm(const ImageGrid& img);

ImageGrid read_pgm(const std::filesystem::path& path);
void write_pgm(const ImageGrid& img, const std::filesystem::path& path);

// Lossless float64 images: "F64\n<W> <H>\n" then W*H little-endian doubles.
// Used to persist denoised results so metrics can be recomputed exactly.

ImageGrid decode_f64(std::string_view bytes);
std::string encode_f64(const ImageGrid& img);
ImageGrid read_f64(const std::filesystem::path& path);
void write_f64(const ImageGrid& img, const std::filesystem::path& path);

/// Bilinear resample to exactly width x height (pixel-centre alignment, clamped edges).
ImageGrid resize_bilinear(const ImageGrid& img, int width, int height);
/// Scales so the shorter edge equals `edge`, then keeps the top-left edge x edge square.
ImageGrid prepare_square(const ImageGrid& img, int edge);

/// Dispatches on the extension: ".f64" is float64, anything else PGM.
ImageGrid read_image(const std::filesystem::path& path);
void write_image(const ImageGrid& img, const std::filesystem::path& path);

}  // namespace bilearn
