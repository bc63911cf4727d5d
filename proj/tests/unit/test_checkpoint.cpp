#include <gtest/gtest.h>

#include <filesystem>

#include "ksgan/checkpoint.hpp"
#include "ksgan/error.hpp"

namespace nn = ksgan::nn;
using ksgan::Rng;
using ksgan::Tensor;

namespace {

nn::Entries sample_entries() {
  return {{"b", Tensor::vector({1.5, -2.0})}, {"a", Tensor::matrix({{1, 2}, {3, 4}})}, {"s", Tensor::scalar(7)}};
}

}  // namespace

TEST(Checkpoint, RoundTrip) {
  const auto entries = sample_entries();
  const auto bytes = nn::encode_checkpoint(entries);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "KSGN");
  EXPECT_EQ(nn::decode_checkpoint(bytes), entries);
}

TEST(Checkpoint, EncodingIsDeterministic) {
  EXPECT_EQ(nn::encode_checkpoint(sample_entries()), nn::encode_checkpoint(sample_entries()));
}

TEST(Checkpoint, DetectsCorruption) {
  auto bytes = nn::encode_checkpoint(sample_entries());
  auto flipped = bytes;
  flipped[20] ^= 0x10;
  try {
    nn::decode_checkpoint(flipped);
    FAIL() << "expected a checksum error";
  } catch (const ksgan::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos);
  }
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(nn::decode_checkpoint(magic), ksgan::FormatError);
  bytes.resize(bytes.size() - 9);
  EXPECT_THROW(nn::decode_checkpoint(bytes), ksgan::FormatError);
}

TEST(Checkpoint, NetworkExportImport) {
  Rng rng(5);
  const nn::MlpSpec spec{8, {4, 4}, 2, nn::Activation::Relu, true, true};
  auto store = nn::init(spec, rng);
  store.step = 17;
  store.adam[nn::weight_name(0)] = {Tensor({8, 4}, 0.5), Tensor({8, 4}, 0.25)};
  nn::Entries entries;
  nn::export_network(entries, "generator.", spec, store);
  const auto path = std::filesystem::temp_directory_path() / "ksgan_ckpt_test.ksgn";
  nn::write_checkpoint(path, entries);
  const auto net = nn::import_network(nn::read_checkpoint(path), "generator.");
  std::filesystem::remove(path);
  EXPECT_EQ(net.spec, spec);
  EXPECT_EQ(net.store.params, store.params);
  EXPECT_EQ(net.store.step, 17u);
  EXPECT_EQ(net.store.sn_u, store.sn_u);
  EXPECT_EQ(net.store.adam.at(nn::weight_name(0)), store.adam.at(nn::weight_name(0)));
}

TEST(Checkpoint, MissingFileIsAnError) {
  EXPECT_ANY_THROW(nn::read_checkpoint("/nonexistent/dir/x.ksgn"));
}
