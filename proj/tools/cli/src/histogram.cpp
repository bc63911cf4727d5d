#include "ksgan_cli/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ksgan/error.hpp"

namespace ksgan::cli {
namespace {

std::size_t bin_of(double v, double lo, double hi, std::size_t bins) {
  const auto b = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

}  // namespace

Bounds auto_bounds(const Tensor& points) {
  if (points.rank() != 2 || points.dim(1) != 2 || points.dim(0) == 0) {
    throw ContractError("histogram needs a non-empty set of 2-D points");
  }
  Bounds b{points.at(0, 0), points.at(0, 0), points.at(0, 1), points.at(0, 1)};
  for (std::size_t i = 1; i < points.dim(0); ++i) {
    b.xmin = std::min(b.xmin, points.at(i, 0));
    b.xmax = std::max(b.xmax, points.at(i, 0));
    b.ymin = std::min(b.ymin, points.at(i, 1));
    b.ymax = std::max(b.ymax, points.at(i, 1));
  }
  if (b.xmin == b.xmax) b.xmin -= 0.5, b.xmax += 0.5;
  if (b.ymin == b.ymax) b.ymin -= 0.5, b.ymax += 0.5;
  return b;
}

HistogramGrid histogram_2d(const Tensor& points, std::size_t bins, const Bounds& bounds) {
  if (bins < 2) throw ContractError("bins must be >= 2");
  if (!(bounds.xmin < bounds.xmax) || !(bounds.ymin < bounds.ymax)) {
    throw ContractError("bounds must satisfy xmin < xmax and ymin < ymax");
  }
  if (points.rank() != 2 || points.dim(1) != 2) throw ContractError("histogram needs 2-D points");
  HistogramGrid grid;
  grid.bins = bins;
  grid.bounds = bounds;
  grid.counts.assign(bins, std::vector<std::uint64_t>(bins, 0));
  for (std::size_t i = 0; i < points.dim(0); ++i) {
    const double x = points.at(i, 0);
    const double y = points.at(i, 1);
    if (!(x >= bounds.xmin && x <= bounds.xmax && y >= bounds.ymin && y <= bounds.ymax)) continue;
    const std::size_t col = bin_of(x, bounds.xmin, bounds.xmax, bins);
    const std::size_t row = bins - 1 - bin_of(y, bounds.ymin, bounds.ymax, bins);
    ++grid.counts[row][col];
    ++grid.in_bounds;
  }
  return grid;
}

void write_histogram_csv(std::ostream& os, const HistogramGrid& grid) {
  for (const auto& row : grid.counts) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      os << row[c];
    }
    os << '\n';
  }
}

void write_histogram_pgm(std::ostream& os, const HistogramGrid& grid) {
  std::uint64_t peak = 0;
  for (const auto& row : grid.counts) peak = std::max(peak, *std::max_element(row.begin(), row.end()));
  os << "P5\n" << grid.bins << ' ' << grid.bins << "\n255\n";
  for (const auto& row : grid.counts) {
    for (std::uint64_t v : row) {
      const auto level = peak ? static_cast<unsigned char>((v * 255 + peak / 2) / peak) : 0;
      os.put(static_cast<char>(level));
    }
  }
}

}  // namespace ksgan::cli
