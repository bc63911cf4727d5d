#include "ksgan/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "ksgan/error.hpp"

namespace ksgan::io {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_points_csv(std::ostream& os, const Tensor& points) {
  if (points.rank() != 2) throw ContractError("expected (n, d) points, got " + shape_str(points.shape()));
  const std::size_t d = points.dim(1);
  std::string line;
  for (std::size_t k = 0; k < d; ++k) {
    if (k) line += ',';
    line += 'x' + std::to_string(k);
  }
  os << line << '\n';
  for (std::size_t i = 0; i < points.dim(0); ++i) {
    line.clear();
    for (std::size_t k = 0; k < d; ++k) {
      if (k) line += ',';
      line += format_double(points.at(i, k));
    }
    os << line << '\n';
  }
}

void write_points_csv(const std::filesystem::path& path, const Tensor& points) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_points_csv(os, points);
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Tensor parse_points_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ContractError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t dims = 1;
  for (char c : line) dims += c == ',';
  if (line.empty() || line[0] != 'x') throw ContractError("CSV header must be x0,x1,...; got '" + line + "'");

  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < dims; ++k) {
      double v = 0.0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw ContractError("malformed number on CSV row " + std::to_string(rows + 1));
      }
      data.push_back(v);
      p = res.ptr;
      if (k + 1 < dims) {
        if (p == end || *p != ',') {
          throw ContractError("CSV row " + std::to_string(rows + 1) + " has fewer than " +
                              std::to_string(dims) + " columns");
        }
        ++p;
      }
    }
    if (p != end) throw ContractError("CSV row " + std::to_string(rows + 1) + " has extra columns");
    ++rows;
  }
  if (rows == 0) throw ContractError("CSV has no data rows");
  return Tensor({rows, dims}, std::move(data));
}

Tensor read_points_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ContractError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_points_csv(ss.str());
}

}  // namespace ksgan::io
