#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ksgan/losses.hpp"
#include "ksgan/nn.hpp"
#include "ksgan/targets.hpp"

namespace ksgan {

enum class Method { Ksgan, Gan, WganGp };

std::string_view method_name(Method method);

struct TrainConfig {
  Method method = Method::Ksgan;
  targets::Source target = targets::Source::EightGaussians;
  std::size_t n_train = 65536;
  std::size_t n_test = 65536;
  std::size_t k_phi = 1;
  std::size_t k_theta = 1;
  std::size_t batch_size = 512;
  std::size_t generator_updates = 128000;
  nn::AdamConfig adam;
  double beta_score_penalty = 1.0;
  double gp_weight = 0.1;
  losses::GeneratorLossOptions loss;
  bool flip_labels = false;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1000;
  std::size_t eval_samples = 4096;
  std::size_t latent_dim = 8;
  nn::MlpSpec generator;
  nn::MlpSpec critic;
  bool record_wall_clock = false;

  /// Throws ContractError naming the offending field.
  void validate() const;
};

/// Defaults for a method: 512x3 networks, ReLU generator, LeakyReLU critic,
/// spectral norm on the GAN critic, k_phi = 5 for the baselines.
TrainConfig default_config(Method method);

/// Strict JSON: unknown keys and wrongly typed values are errors
/// (ContractError, message names the field). "target" is required.
TrainConfig parse_config(std::string_view json_text);
TrainConfig load_config(const std::filesystem::path& path);

/// Every field with its resolved value; parse_config(to_json(c)) == c.
std::string to_json(const TrainConfig& config);

bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace ksgan
