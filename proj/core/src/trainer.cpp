#include "ksgan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <limits>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ksgan/error.hpp"
#include "ksgan/losses.hpp"
#include "ksgan/metrics.hpp"

namespace ksgan {
namespace {

using nlohmann::json;

enum Stream : std::uint64_t { kTrainData, kTestData, kGeneratorInit, kCriticInit, kBatches, kEval, kPenaltyMix };

constexpr const char* kGeneratorPrefix = "generator.";
constexpr const char* kCriticPrefix = "critic.";

struct Batch {
  Tensor z;
  Tensor x;
};

struct StepLosses {
  double critic = 0.0;
  double penalty = 0.0;
};

class Loop {
 public:
  Loop(const TrainConfig& config, const TrainOptions& options)
      : cfg_(config), opt_(options), root_(config.seed) {
    Rng train_rng = root_.substream(kTrainData);
    Rng test_rng = root_.substream(kTestData);
    train_ = targets::sample_target(cfg_.target, cfg_.n_train, train_rng).points;
    test_ = targets::sample_target(cfg_.target, cfg_.n_test, test_rng).points;
    Rng g_init = root_.substream(kGeneratorInit);
    Rng c_init = root_.substream(kCriticInit);
    gen_ = {cfg_.generator, nn::init(cfg_.generator, g_init)};
    critic_ = {cfg_.critic, nn::init(cfg_.critic, c_init)};
    batch_rng_ = root_.substream(kBatches);
    eval_rng_ = root_.substream(kEval);
    mix_rng_ = root_.substream(kPenaltyMix);
    start_ = std::chrono::steady_clock::now();
  }

  TrainResult run();

 private:
  Batch draw() {
    Tensor x({cfg_.batch_size, 2});
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
      const std::size_t r = batch_rng_.below(cfg_.n_train);
      x.at(i, 0) = train_.at(r, 0);
      x.at(i, 1) = train_.at(r, 1);
    }
    Tensor z = targets::sample_latent(cfg_.batch_size, cfg_.latent_dim, batch_rng_).points;
    return {std::move(z), std::move(x)};
  }

  StepLosses critic_step(const Batch& b);
  double generator_step(const Batch& b);
  void check(double value, const char* which) const;
  MetricsRecord evaluate(double critic_loss, double generator_loss, double penalty);
  FinalEval final_eval();
  void write_checkpoint(const std::string& name) const;
  void write_text(const std::string& name, const std::string& text) const;

  const TrainConfig& cfg_;
  const TrainOptions& opt_;
  Rng root_;
  Tensor train_, test_;
  nn::Network gen_, critic_;
  Rng batch_rng_{0}, eval_rng_{0}, mix_rng_{0};
  std::size_t critic_done_ = 0, gen_done_ = 0;
  std::optional<double> eval_bandwidth_;
  std::chrono::steady_clock::time_point start_;
};

StepLosses Loop::critic_step(const Batch& b) {
  const Tensor x_g = nn::evaluate(gen_.spec, gen_.store, b.z);
  ad::Graph g;
  const nn::Bound bound = nn::bind(g, critic_.store, true);
  const losses::CriticFn critic = [&](const ad::Var& x) {
    return nn::forward(critic_.spec, critic_.store, bound, x, true);
  };
  StepLosses out;
  ad::Var objective;
  switch (cfg_.method) {
    case Method::Ksgan: {
      const auto parts = losses::critic_with_score_penalty(g, critic, b.x, x_g);
      const ad::Var l_c = losses::critic_loss(parts.c_F, parts.c_G);
      out.critic = l_c.value().item();
      out.penalty = parts.penalty.value().item();
      objective = ad::sub(ad::scale(parts.penalty, cfg_.beta_score_penalty), l_c);
      break;
    }
    case Method::Gan: {
      const std::size_t n = b.x.dim(0);
      const ad::Var c = critic(ad::concat({g.constant(b.x), g.constant(x_g)}));
      const auto parts = losses::gan_losses(ad::slice_rows(c, 0, n), ad::slice_rows(c, n, c.shape()[0]),
                                            cfg_.flip_labels);
      out.critic = parts.critic.value().item();
      objective = parts.critic;
      break;
    }
    case Method::WganGp: {
      const auto parts = losses::wgan_gp_losses(g, critic, b.x, g.constant(x_g), cfg_.gp_weight, mix_rng_);
      out.critic = parts.critic.value().item();
      out.penalty = parts.penalty.value().item();
      objective = parts.critic;
      break;
    }
  }
  check(out.critic, "critic_loss");
  check(out.penalty, "score_penalty");
  nn::adam_step(critic_.store, nn::gradients(objective, bound), cfg_.adam);
  return out;
}

double Loop::generator_step(const Batch& b) {
  ad::Graph g;
  const nn::Bound gen_bound = nn::bind(g, gen_.store, true);
  const nn::Bound critic_bound = nn::bind(g, critic_.store, false);
  const ad::Var x_g = nn::forward(gen_.spec, gen_.store, gen_bound, g.constant(b.z));
  const std::size_t n = b.x.dim(0);
  const ad::Var c = nn::forward(critic_.spec, critic_.store, critic_bound,
                                ad::concat({g.constant(b.x), x_g}), false);
  const ad::Var c_f = ad::slice_rows(c, 0, n);
  const ad::Var c_g = ad::slice_rows(c, n, c.shape()[0]);
  ad::Var loss;
  switch (cfg_.method) {
    case Method::Ksgan: loss = losses::generator_loss(c_f, c_g, cfg_.loss).total; break;
    case Method::Gan: loss = losses::gan_losses(c_f, c_g, cfg_.flip_labels).generator; break;
    case Method::WganGp: loss = ad::neg(ad::mean(c_g)); break;
  }
  const double value = loss.value().item();
  check(value, "generator_loss");
  nn::adam_step(gen_.store, nn::gradients(loss, gen_bound), cfg_.adam);
  return value;
}

void Loop::check(double value, const char* which) const {
  if (std::isfinite(value)) return;
  NumericAbort abort(gen_done_, which, std::sqrt(gen_.store.squared_norm()),
                     std::sqrt(critic_.store.squared_norm()));
  write_text("abort.json", abort.to_json() + "\n");
  throw abort;
}

MetricsRecord Loop::evaluate(double critic_loss, double generator_loss, double penalty) {
  MetricsRecord rec;
  rec.generator_step = gen_done_;
  rec.critic_loss = critic_loss;
  rec.generator_loss = generator_loss;
  rec.score_penalty = penalty;
  const std::size_t n = std::min(cfg_.eval_samples, cfg_.n_test);
  const Tensor reference = test_.rows(0, n);
  const Tensor model = sample_model(gen_, n, eval_rng_).points;
  const losses::CriticEval critic = [&](const Tensor& x) { return nn::evaluate(critic_.spec, critic_.store, x); };
  rec.gks_estimate = losses::gks_estimate(reference, model, critic).value;
  if (!eval_bandwidth_) eval_bandwidth_ = metrics::median_heuristic_bandwidth(test_, cfg_.seed);
  if (model.all_finite()) {
    rec.mmd2 = metrics::mmd2(reference, model, *eval_bandwidth_).mmd2;
    if (cfg_.target == targets::Source::EightGaussians) {
      rec.modes = metrics::mode_coverage_8gaussians(model, 0.01).count;
    }
  }
  if (cfg_.record_wall_clock) {
    rec.wall_clock_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
  }
  return rec;
}

FinalEval Loop::final_eval() {
  FinalEval out;
  if (!eval_bandwidth_) eval_bandwidth_ = metrics::median_heuristic_bandwidth(test_, cfg_.seed);
  out.bandwidth = *eval_bandwidth_;
  const Tensor model = sample_model(gen_, cfg_.n_test, eval_rng_).points;
  out.mmd2 = model.all_finite() ? metrics::mmd2(test_, model, out.bandwidth).mmd2
                                : std::numeric_limits<double>::infinity();
  if (cfg_.target == targets::Source::EightGaussians && model.all_finite()) {
    out.modes = metrics::mode_coverage_8gaussians(model, 0.01).count;
  }
  return out;
}

void Loop::write_checkpoint(const std::string& name) const {
  if (opt_.out_dir.empty()) return;
  nn::Entries entries;
  nn::export_network(entries, kGeneratorPrefix, gen_.spec, gen_.store);
  nn::export_network(entries, kCriticPrefix, critic_.spec, critic_.store);
  entries["generator_step"] = Tensor::scalar(static_cast<double>(gen_done_));
  nn::write_checkpoint(opt_.out_dir / name, entries);
}

void Loop::write_text(const std::string& name, const std::string& text) const {
  if (opt_.out_dir.empty()) return;
  std::ofstream out(opt_.out_dir / name, std::ios::binary);
  out << text;
  if (!out) throw ContractError("cannot write " + (opt_.out_dir / name).string());
}

TrainResult Loop::run() {
  std::ofstream log;
  if (!opt_.out_dir.empty()) {
    std::filesystem::create_directories(opt_.out_dir);
    write_text("resolved-config.json", to_json(cfg_));
    log.open(opt_.out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!log) throw ContractError("cannot write " + (opt_.out_dir / "metrics.jsonl").string());
  }

  TrainResult result;
  const std::size_t total = cfg_.generator_updates;
  std::set<std::size_t> checkpoint_steps;
  for (std::size_t k = 1; k < 10; ++k) {
    const std::size_t s = (total * k + 9) / 10;
    if (s > 0 && s < total) checkpoint_steps.insert(s);
  }

  auto notify = [&](Phase phase, std::size_t index, const Batch& b) {
    if (opt_.on_batch) opt_.on_batch({phase, index, fnv1a(b.z), fnv1a(b.x)});
  };

  StepLosses last_critic;
  double last_generator = 0.0;
  while (gen_done_ < total) {
    Batch batch;
    for (std::size_t i = 0; i < cfg_.k_phi; ++i) {
      batch = draw();
      notify(Phase::Critic, critic_done_, batch);
      last_critic = critic_step(batch);
      ++critic_done_;
    }
    const std::size_t inner = std::min(cfg_.k_theta, total - gen_done_);
    for (std::size_t j = 0; j < inner; ++j) {
      if (j > 0) batch = draw();
      notify(Phase::Generator, gen_done_, batch);
      last_generator = generator_step(batch);
      ++gen_done_;
      if (gen_done_ % cfg_.eval_every == 0) {
        result.metrics.push_back(evaluate(last_critic.critic, last_generator, last_critic.penalty));
        if (log.is_open()) log << result.metrics.back().to_json() << '\n' << std::flush;
      }
      if (checkpoint_steps.count(gen_done_)) write_checkpoint("ckpt_" + std::to_string(gen_done_) + ".ksgn");
    }
  }
  write_checkpoint("final.ksgn");

  if (opt_.final_eval && total > 0) {
    result.final_eval = final_eval();
    json s;
    s["generator_step"] = gen_done_;
    s["critic_updates"] = critic_done_;
    s["mmd2"] = result.final_eval->mmd2;
    s["bandwidth"] = result.final_eval->bandwidth;
    s["n_test"] = cfg_.n_test;
    if (result.final_eval->modes) s["modes"] = *result.final_eval->modes;
    write_text("summary.json", s.dump(2) + "\n");
  }
  result.generator = gen_;
  result.critic = critic_;
  result.critic_updates = critic_done_;
  result.generator_updates = gen_done_;
  return result;
}

}  // namespace

std::string MetricsRecord::to_json() const {
  json j;
  j["generator_step"] = generator_step;
  j["critic_loss"] = critic_loss;
  j["generator_loss"] = generator_loss;
  j["score_penalty"] = score_penalty;
  j["gks_estimate"] = gks_estimate;
  j["mmd2"] = mmd2 ? json(*mmd2) : json(nullptr);
  if (modes) j["modes"] = *modes;
  j["wall_clock_ms"] = wall_clock_ms;
  return j.dump();
}

NumericAbort::NumericAbort(std::size_t step_, std::string loss_, double generator_norm_, double critic_norm_)
    : std::runtime_error("non-finite " + loss_ + " at generator step " + std::to_string(step_)),
      step(step_),
      loss(std::move(loss_)),
      generator_norm(generator_norm_),
      critic_norm(critic_norm_) {}

std::string NumericAbort::to_json() const {
  json j;
  j["step"] = step;
  j["loss"] = loss;
  j["generator_param_norm"] = generator_norm;
  j["critic_param_norm"] = critic_norm;
  return j.dump();
}

std::uint64_t fnv1a(const Tensor& t) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : t.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  Loop loop(config, options);
  return loop.run();
}

targets::SampleSet sample_model(const nn::Network& generator, std::size_t n, Rng& rng) {
  if (n < 1) throw ContractError("sample_model: n must be >= 1");
  targets::SampleSet out;
  out.rng = rng;
  out.source = targets::Source::Model;
  const Tensor z = targets::sample_latent(n, generator.spec.in_dim, rng).points;
  out.points = nn::evaluate(generator.spec, generator.store, z);
  return out;
}

targets::SampleSet sample_model(const std::filesystem::path& checkpoint, std::size_t n, Rng& rng) {
  const nn::Network generator = nn::import_network(nn::read_checkpoint(checkpoint), kGeneratorPrefix);
  return sample_model(generator, n, rng);
}

}  // namespace ksgan
