#pragma once

// Binary checkpoint format (all integers little-endian):
//
//   "KSGN" | format-version u32 |
//   per entry, ordered by name:
//     name-length u32 | UTF-8 name | rank u32 | dims u32[rank] | payload f64[]
//   | CRC32 of every preceding byte (u32)

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ksgan/nn.hpp"
#include "ksgan/tensor.hpp"

namespace ksgan::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using Entries = std::map<std::string, Tensor>;

std::vector<std::uint8_t> encode_checkpoint(const Entries& entries);
/// Throws FormatError on bad magic, unknown version, truncation or a
/// checksum mismatch.
Entries decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const std::filesystem::path& path, const Entries& entries);
Entries read_checkpoint(const std::filesystem::path& path);

/// Flattens a network into entries under `prefix`: parameters by name, Adam
/// moments under "<param>.adam.m" / "<param>.adam.v", the shared step count
/// under "adam.step", power-iteration vectors under "<weight>.sn.u" and the
/// architecture under "spec".
void export_network(Entries& out, const std::string& prefix, const MlpSpec& spec, const ParamStore& store);

struct Network {
  MlpSpec spec;
  ParamStore store;
};

Network import_network(const Entries& entries, const std::string& prefix);

}  // namespace ksgan::nn
