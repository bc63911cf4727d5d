#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ksgan/tensor.hpp"

namespace ksgan::io {

/// Header "x0,x1,...", one point per row, shortest round-trip decimal
/// representation with '.' as separator, LF line endings.
void write_points_csv(std::ostream& os, const Tensor& points);
void write_points_csv(const std::filesystem::path& path, const Tensor& points);

/// Reads a file written by write_points_csv (any column count). Returns
/// shape (n, d). Throws ContractError on malformed content.
Tensor read_points_csv(const std::filesystem::path& path);
Tensor parse_points_csv(const std::string& text);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

}  // namespace ksgan::io
