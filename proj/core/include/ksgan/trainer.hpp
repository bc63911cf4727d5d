#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksgan/checkpoint.hpp"
#include "ksgan/config.hpp"
#include "ksgan/targets.hpp"

namespace ksgan {

struct MetricsRecord {
  std::size_t generator_step = 0;
  double critic_loss = 0.0;
  double generator_loss = 0.0;
  double score_penalty = 0.0;
  double gks_estimate = 0.0;
  std::optional<double> mmd2;
  std::optional<std::size_t> modes;  // 8gaussians only
  std::int64_t wall_clock_ms = 0;

  /// One JSON object, no trailing newline.
  std::string to_json() const;
};

enum class Phase { Critic, Generator };

/// Emitted once per optimizer step with FNV-1a hashes of the batch used.
struct BatchEvent {
  Phase phase;
  std::size_t index;  // 0-based count within the phase
  std::uint64_t z_hash;
  std::uint64_t x_hash;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: no files written
  std::function<void(const BatchEvent&)> on_batch;
  bool final_eval = true;
};

struct FinalEval {
  double mmd2 = 0.0;
  double bandwidth = 0.0;
  std::optional<std::size_t> modes;
};

struct TrainResult {
  nn::Network generator;
  nn::Network critic;
  std::vector<MetricsRecord> metrics;
  std::size_t critic_updates = 0;
  std::size_t generator_updates = 0;
  std::optional<FinalEval> final_eval;
};

/// Raised when a loss becomes non-finite.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(std::size_t step, std::string loss, double generator_norm, double critic_norm);
  std::size_t step;
  std::string loss;
  double generator_norm;  // sqrt of the squared parameter norm
  double critic_norm;
  std::string to_json() const;
};

std::uint64_t fnv1a(const Tensor& t);

/// Runs the alternating critic / generator loop. With out_dir set, writes
/// metrics.jsonl, resolved-config.json, ckpt_<step>.ksgn every tenth of the
/// run, final.ksgn and summary.json (abort.json on NumericAbort).
TrainResult train(const TrainConfig& config, const TrainOptions& options = {});

/// n generator outputs from fresh latent draws.
targets::SampleSet sample_model(const nn::Network& generator, std::size_t n, Rng& rng);
/// Loads the "generator." network of a checkpoint. Throws FormatError on a
/// corrupt file.
targets::SampleSet sample_model(const std::filesystem::path& checkpoint, std::size_t n, Rng& rng);

}  // namespace ksgan
