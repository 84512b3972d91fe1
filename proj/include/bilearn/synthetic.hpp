#pragma once

#include "bilearn/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bilearn {

/// Rectangles and a disc on a flat background, four grey levels. Default 32x32.
ImageGrid piecewise_constant_image(int size = 32);

/// Flat shapes plus linear ramps and a smooth bump, in the spirit of the
/// "geometric" test image: both edges and affine regions. Default 64x64.
ImageGrid geometric_image(int size = 64);

struct CorpusImage {
  std::string id;
  ImageGrid clean;
};

/// Seeded set of size x size images mixing discs, rectangles, ramps and smooth
/// texture. Ids are "img00", "img01", ...; equal seeds give identical images.
std::vector<CorpusImage> synthetic_corpus(int count = 10, int size = 64, std::uint64_t seed = 1);

}  // namespace bilearn
