#include "ksgan/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ksgan/error.hpp"

namespace ksgan {
namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ContractError("config field \"" + field + "\": " + what);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "method",        "target",         "n_train",        "n_test",
      "k_phi",         "k_theta",        "batch_size",     "generator_updates",
      "lr",            "beta1",          "beta2",          "eps",
      "beta_score_penalty", "gp_weight", "mode",           "indicator",
      "smooth_tau",    "ste_clip",       "flip_labels",    "seed",
      "eval_every",    "eval_samples",   "latent_dim",     "generator_hidden",
      "critic_hidden", "generator_activation", "critic_activation",
      "generator_spectral_norm", "critic_spectral_norm", "record_wall_clock"};
  return keys;
}

std::size_t get_count(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) field_error(key, "must be non-negative, got " + v.dump());
  field_error(key, "expected an integer, got " + v.dump());
}

double get_real(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) field_error(key, "expected a number, got " + v.dump());
  return v.get<double>();
}

bool get_bool(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) field_error(key, "expected true or false, got " + v.dump());
  return v.get<bool>();
}

std::string get_string(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_string()) field_error(key, "expected a string, got " + v.dump());
  return v.get<std::string>();
}

std::vector<std::size_t> get_dims(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_array()) field_error(key, "expected an array of layer widths");
  std::vector<std::size_t> out;
  for (const json& e : v) {
    if (!e.is_number_unsigned() || e.get<std::size_t>() == 0) field_error(key, "layer widths must be positive integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

Method parse_method(const std::string& s) {
  if (s == "ksgan") return Method::Ksgan;
  if (s == "gan") return Method::Gan;
  if (s == "wgan_gp") return Method::WganGp;
  field_error("method", "unknown method \"" + s + "\" (valid: ksgan, gan, wgan_gp)");
}

nn::Activation parse_activation(const std::string& key, const std::string& s) {
  if (s == "relu") return nn::Activation::Relu;
  if (s == "leaky_relu") return nn::Activation::LeakyRelu;
  field_error(key, "unknown activation \"" + s + "\" (valid: relu, leaky_relu)");
}

std::string_view activation_name(nn::Activation a) {
  return a == nn::Activation::Relu ? "relu" : "leaky_relu";
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Ksgan: return "ksgan";
    case Method::Gan: return "gan";
    case Method::WganGp: return "wgan_gp";
  }
  return "?";
}

TrainConfig default_config(Method method) {
  TrainConfig c;
  c.method = method;
  c.k_phi = method == Method::Ksgan ? 1 : 5;
  c.generator = {c.latent_dim, {512, 512, 512}, 2, nn::Activation::Relu, true, false};
  c.critic = {2, {512, 512, 512}, 1, nn::Activation::LeakyRelu, true, method == Method::Gan};
  return c;
}

void TrainConfig::validate() const {
  if (k_phi < 1) field_error("k_phi", "must be >= 1");
  if (k_theta < 1) field_error("k_theta", "must be >= 1");
  if (batch_size < 2) field_error("batch_size", "must be >= 2");
  if (n_train < 1) field_error("n_train", "must be >= 1");
  if (n_test < 2) field_error("n_test", "must be >= 2");
  if (eval_every < 1) field_error("eval_every", "must be >= 1");
  if (eval_samples < 2) field_error("eval_samples", "must be >= 2");
  if (latent_dim < 1) field_error("latent_dim", "must be >= 1");
  if (!(adam.lr > 0.0)) field_error("lr", "must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) field_error("beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) field_error("beta2", "must lie in [0, 1)");
  if (!(adam.eps > 0.0)) field_error("eps", "must be > 0");
  if (!(beta_score_penalty >= 0.0)) field_error("beta_score_penalty", "must be >= 0");
  if (!(gp_weight >= 0.0)) field_error("gp_weight", "must be >= 0");
  if (!(loss.tau > 0.0)) field_error("smooth_tau", "must be > 0");
  if (!(loss.ste_clip >= 0.0)) field_error("ste_clip", "must be >= 0");
  if (generator.in_dim != latent_dim) field_error("latent_dim", "does not match the generator input");
  if (generator.out_dim != 2 || critic.in_dim != 2 || critic.out_dim != 1) {
    field_error("generator_hidden", "networks must map latent -> 2 -> 1");
  }
  generator.validate();
  critic.validate();
}

TrainConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ContractError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().count(key)) field_error(key, "unknown key");
  }

  Method method = Method::Ksgan;
  if (j.contains("method")) method = parse_method(get_string(j, "method"));
  TrainConfig c = default_config(method);

  if (!j.contains("target")) {
    throw ContractError("config field \"target\": missing; valid targets: " + targets::valid_target_names());
  }
  {
    const std::string name = get_string(j, "target");
    const auto src = targets::try_parse_target(name);
    if (!src) {
      field_error("target", "unknown target \"" + name + "\"; valid targets: " + targets::valid_target_names());
    }
    c.target = *src;
  }

  auto count = [&](const char* key, std::size_t& dst) {
    if (j.contains(key)) dst = get_count(j, key);
  };
  auto real = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = get_real(j, key);
  };
  auto flag = [&](const char* key, bool& dst) {
    if (j.contains(key)) dst = get_bool(j, key);
  };
  count("n_train", c.n_train);
  count("n_test", c.n_test);
  count("k_phi", c.k_phi);
  count("k_theta", c.k_theta);
  count("batch_size", c.batch_size);
  count("generator_updates", c.generator_updates);
  real("lr", c.adam.lr);
  real("beta1", c.adam.beta1);
  real("beta2", c.adam.beta2);
  real("eps", c.adam.eps);
  real("beta_score_penalty", c.beta_score_penalty);
  real("gp_weight", c.gp_weight);
  real("smooth_tau", c.loss.tau);
  real("ste_clip", c.loss.ste_clip);
  flag("flip_labels", c.flip_labels);
  flag("record_wall_clock", c.record_wall_clock);
  count("eval_every", c.eval_every);
  count("eval_samples", c.eval_samples);
  count("latent_dim", c.latent_dim);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) field_error("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("mode")) {
    const std::string m = get_string(j, "mode");
    if (m == "mean") c.loss.mode = losses::Aggregation::Mean;
    else if (m == "max") c.loss.mode = losses::Aggregation::Max;
    else field_error("mode", "expected \"mean\" or \"max\", got \"" + m + "\"");
  }
  if (j.contains("indicator")) {
    const std::string m = get_string(j, "indicator");
    if (m == "ste") c.loss.indicator = losses::IndicatorKind::Ste;
    else if (m == "smooth") c.loss.indicator = losses::IndicatorKind::Smooth;
    else field_error("indicator", "expected \"ste\" or \"smooth\", got \"" + m + "\"");
  }
  c.generator.in_dim = c.latent_dim;
  if (j.contains("generator_hidden")) c.generator.hidden = get_dims(j, "generator_hidden");
  if (j.contains("critic_hidden")) c.critic.hidden = get_dims(j, "critic_hidden");
  if (j.contains("generator_activation")) {
    c.generator.activation = parse_activation("generator_activation", get_string(j, "generator_activation"));
  }
  if (j.contains("critic_activation")) {
    c.critic.activation = parse_activation("critic_activation", get_string(j, "critic_activation"));
  }
  flag("generator_spectral_norm", c.generator.spectral_norm);
  flag("critic_spectral_norm", c.critic.spectral_norm);

  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const TrainConfig& c) {
  json j;
  j["method"] = method_name(c.method);
  j["target"] = targets::source_name(c.target);
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["k_phi"] = c.k_phi;
  j["k_theta"] = c.k_theta;
  j["batch_size"] = c.batch_size;
  j["generator_updates"] = c.generator_updates;
  j["lr"] = c.adam.lr;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["eps"] = c.adam.eps;
  j["beta_score_penalty"] = c.beta_score_penalty;
  j["gp_weight"] = c.gp_weight;
  j["mode"] = c.loss.mode == losses::Aggregation::Mean ? "mean" : "max";
  j["indicator"] = c.loss.indicator == losses::IndicatorKind::Ste ? "ste" : "smooth";
  j["smooth_tau"] = c.loss.tau;
  j["ste_clip"] = c.loss.ste_clip;
  j["flip_labels"] = c.flip_labels;
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["eval_samples"] = c.eval_samples;
  j["latent_dim"] = c.latent_dim;
  j["generator_hidden"] = c.generator.hidden;
  j["critic_hidden"] = c.critic.hidden;
  j["generator_activation"] = activation_name(c.generator.activation);
  j["critic_activation"] = activation_name(c.critic.activation);
  j["generator_spectral_norm"] = c.generator.spectral_norm;
  j["critic_spectral_norm"] = c.critic.spectral_norm;
  j["record_wall_clock"] = c.record_wall_clock;
  return j.dump(2) + "\n";
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return to_json(a) == to_json(b);
}

}  // namespace ksgan
