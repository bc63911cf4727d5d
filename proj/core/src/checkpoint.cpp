#include "ksgan/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ksgan/error.hpp"

namespace ksgan::nn {
namespace {

constexpr char kMagic[4] = {'K', 'S', 'G', 'N'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

const Tensor& entry(const Entries& entries, const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) throw FormatError("checkpoint is missing entry '" + name + "'");
  return it->second;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Entries& entries) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  for (const auto& [name, t] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }
  put_u32(out, crc32_of(out));
  return out;
}

Entries decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic: not a KSGN checkpoint");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32_of(body)) throw FormatError("checksum mismatch");

  Reader r(body.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Entries entries;
  while (!r.done()) {
    const std::string name = r.str(r.u32());
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    Tensor t(shape);
    for (double& v : t.data()) v = r.f64();
    entries.emplace(name, std::move(t));
  }
  return entries;
}

void write_checkpoint(const std::filesystem::path& path, const Entries& entries) {
  const auto bytes = encode_checkpoint(entries);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Entries read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void export_network(Entries& out, const std::string& prefix, const MlpSpec& spec, const ParamStore& store) {
  std::vector<double> s = {static_cast<double>(spec.in_dim), static_cast<double>(spec.out_dim),
                           spec.activation == Activation::Relu ? 0.0 : 1.0, spec.bias ? 1.0 : 0.0,
                           spec.spectral_norm ? 1.0 : 0.0};
  for (std::size_t h : spec.hidden) s.push_back(static_cast<double>(h));
  out[prefix + "spec"] = Tensor::vector(std::move(s));
  out[prefix + "adam.step"] = Tensor::scalar(static_cast<double>(store.step));
  for (const auto& [name, t] : store.params) {
    out[prefix + name] = t;
    const AdamState& a = store.adam.at(name);
    out[prefix + name + ".adam.m"] = a.m;
    out[prefix + name + ".adam.v"] = a.v;
  }
  for (const auto& [name, u] : store.sn_u) out[prefix + name + ".sn.u"] = u;
}

Network import_network(const Entries& entries, const std::string& prefix) {
  Network net;
  const Tensor& s = entry(entries, prefix + "spec");
  if (s.rank() != 1 || s.size() < 5) throw FormatError("malformed spec entry under '" + prefix + "'");
  net.spec.in_dim = static_cast<std::size_t>(s[0]);
  net.spec.out_dim = static_cast<std::size_t>(s[1]);
  net.spec.activation = s[2] == 0.0 ? Activation::Relu : Activation::LeakyRelu;
  net.spec.bias = s[3] != 0.0;
  net.spec.spectral_norm = s[4] != 0.0;
  for (std::size_t i = 5; i < s.size(); ++i) net.spec.hidden.push_back(static_cast<std::size_t>(s[i]));
  net.store.step = static_cast<std::uint64_t>(entry(entries, prefix + "adam.step").item());

  for (std::size_t layer = 0; layer < net.spec.num_layers(); ++layer) {
    std::vector<std::string> names = {weight_name(layer)};
    if (net.spec.bias) names.push_back(bias_name(layer));
    for (const auto& name : names) {
      net.store.params[name] = entry(entries, prefix + name);
      net.store.adam[name] = {entry(entries, prefix + name + ".adam.m"), entry(entries, prefix + name + ".adam.v")};
    }
    const Tensor& w = net.store.params.at(weight_name(layer));
    if (w.shape() != Shape{net.spec.layer_in(layer), net.spec.layer_out(layer)}) {
      throw FormatError("weight " + weight_name(layer) + " has shape " + shape_str(w.shape()) +
                        " inconsistent with the stored architecture");
    }
    if (net.spec.spectral_norm) {
      net.store.sn_u[weight_name(layer)] = entry(entries, prefix + weight_name(layer) + ".sn.u");
    }
  }
  return net;
}

}  // namespace ksgan::nn
