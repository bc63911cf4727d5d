#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "ksgan/tensor.hpp"

namespace ksgan::cli {

struct Bounds {
  double xmin, xmax, ymin, ymax;
};

/// counts[r][c]: row 0 is the top (largest y), column 0 the left (smallest x).
struct HistogramGrid {
  std::size_t bins = 0;
  Bounds bounds{};
  std::vector<std::vector<std::uint64_t>> counts;
  std::uint64_t in_bounds = 0;
};

/// Bounding box of the points; a degenerate axis is widened by 0.5 each way.
Bounds auto_bounds(const Tensor& points);

/// Bins are half-open except the last one on each axis, which includes its
/// upper edge. Points outside the bounds are dropped.
HistogramGrid histogram_2d(const Tensor& points, std::size_t bins, const Bounds& bounds);

void write_histogram_csv(std::ostream& os, const HistogramGrid& grid);
/// Binary P5, counts scaled linearly to 0..255 by the grid maximum.
void write_histogram_pgm(std::ostream& os, const HistogramGrid& grid);

}  // namespace ksgan::cli
