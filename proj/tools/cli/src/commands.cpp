#include "ksgan_cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ksgan/config.hpp"
#include "ksgan/csv.hpp"
#include "ksgan/error.hpp"
#include "ksgan/losses.hpp"
#include "ksgan/metrics.hpp"
#include "ksgan/targets.hpp"
#include "ksgan/trainer.hpp"
#include "ksgan_cli/histogram.hpp"

namespace ksgan::cli {
namespace {

using nlohmann::json;

constexpr std::size_t kDemoMinSamples = 1000;

double parse_real(const std::string& flag, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ContractError(flag + ": expected a number, got \"" + text + "\"");
  return v;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw ContractError("failed writing " + path.string());
}

struct TrainArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig config = load_config(a.config);
  if (a.seed) config.seed = *a.seed;
  TrainOptions options;
  options.out_dir = a.out;
  try {
    const TrainResult result = train(config, options);
    json j;
    j["generator_updates"] = result.generator_updates;
    j["critic_updates"] = result.critic_updates;
    if (result.final_eval) {
      j["mmd2"] = result.final_eval->mmd2;
      j["bandwidth"] = result.final_eval->bandwidth;
      if (result.final_eval->modes) j["modes"] = *result.final_eval->modes;
    }
    out << j.dump() << '\n';
  } catch (const NumericAbort& e) {
    err << "numeric abort: " << e.what() << ' ' << e.to_json() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

struct SampleArgs {
  std::string checkpoint, target, out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  if (a.n < 1) throw ContractError("--n must be >= 1");
  Rng rng(a.seed);
  const Tensor points = a.checkpoint.empty()
                            ? targets::sample_target(targets::parse_target(a.target), a.n, rng).points
                            : sample_model(std::filesystem::path(a.checkpoint), a.n, rng).points;
  if (a.out.empty() || a.out == "-") {
    io::write_points_csv(out, points);
  } else {
    io::write_points_csv(std::filesystem::path(a.out), points);
  }
  return kExitOk;
}

struct EvalArgs {
  std::string metric, a, b, bandwidth = "auto";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Tensor pa = io::read_points_csv(a.a);
  const Tensor pb = io::read_points_csv(a.b);
  if (pa.dim(1) != pb.dim(1)) {
    throw ContractError("dimension mismatch: " + a.a + " has " + std::to_string(pa.dim(1)) + " columns, " + a.b +
                        " has " + std::to_string(pb.dim(1)));
  }
  json j;
  j["metric"] = a.metric;
  j["n_a"] = pa.dim(0);
  j["n_b"] = pb.dim(0);
  if (a.metric == "ks1d") {
    if (pa.dim(1) != 1) throw ContractError("ks1d needs 1-D samples");
    j["value"] = metrics::ks_two_sample_1d(pa.data(), pb.data());
    j["bandwidth"] = nullptr;
  } else {
    double bw = 0.0;
    if (a.bandwidth == "auto") {
      const Tensor both[] = {pa, pb};
      bw = metrics::median_heuristic_bandwidth(concat_rows(both));
    } else {
      bw = parse_real("--bandwidth", a.bandwidth);
      if (!(bw > 0.0) || !std::isfinite(bw)) throw ContractError("--bandwidth must be > 0");
    }
    j["value"] = metrics::mmd2(pa, pb, bw).mmd2;
    j["bandwidth"] = bw;
  }
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_demo(std::size_t n, std::uint64_t seed, std::ostream& out) {
  if (n < kDemoMinSamples) throw ContractError("--n must be >= " + std::to_string(kDemoMinSamples));
  Rng rng(seed);
  const auto [half_normal, normal] = targets::analytic_pair_chi_gaussian(n, rng);
  const auto d = losses::chi_gaussian_discrepancy(half_normal, normal);
  json j;
  j["one_sided_sup"] = d.one_sided_sup;
  j["symmetric_gks"] = d.symmetric_gks;
  j["n"] = n;
  j["seed"] = seed;
  out << j.dump() << '\n';
  return kExitOk;
}

struct HistArgs {
  std::string in, out, format = "csv";
  std::size_t bins = 64;
  std::vector<std::string> bounds{"auto"};
};

int cmd_hist(const HistArgs& a, std::ostream& err) {
  if (a.bins < 2) throw ContractError("--bins must be >= 2");
  const Tensor points = io::read_points_csv(a.in);
  Bounds b{};
  if (a.bounds.size() == 1 && a.bounds[0] == "auto") {
    b = auto_bounds(points);
  } else if (a.bounds.size() == 4) {
    b = {parse_real("--bounds", a.bounds[0]), parse_real("--bounds", a.bounds[1]),
         parse_real("--bounds", a.bounds[2]), parse_real("--bounds", a.bounds[3])};
  } else {
    throw ContractError("--bounds expects \"auto\" or four numbers xmin xmax ymin ymax");
  }
  const HistogramGrid grid = histogram_2d(points, a.bins, b);
  if (grid.in_bounds == 0) err << "warning: no points fall inside the bounds\n";
  const std::filesystem::path path(a.out);
  std::ofstream out = open_output(path);
  if (a.format == "pgm") {
    write_histogram_pgm(out, grid);
  } else {
    write_histogram_csv(out, grid);
  }
  finish(out, path);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kolmogorov-Smirnov GAN training and evaluation"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a generator from a JSON config");
  train_cmd->add_option("--config", train_args.config, "Config JSON")->required();
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw points from a checkpoint or a synthetic target");
  auto* ckpt_opt = sample_cmd->add_option("--checkpoint", sample_args.checkpoint, "Checkpoint file");
  auto* target_opt = sample_cmd->add_option("--target", sample_args.target, "Synthetic target name");
  ckpt_opt->excludes(target_opt);
  sample_cmd->add_option("--n", sample_args.n, "Number of points")->required();
  sample_cmd->add_option("--out", sample_args.out, "Output CSV (stdout if omitted)");
  sample_cmd->add_option("--seed", sample_args.seed, "Latent seed");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Two-sample statistics between CSV point sets");
  eval_cmd->add_option("metric", eval_args.metric, "mmd2 or ks1d")
      ->required()
      ->check(CLI::IsMember({"mmd2", "ks1d"}));
  eval_cmd->add_option("--a", eval_args.a, "First CSV")->required();
  eval_cmd->add_option("--b", eval_args.b, "Second CSV")->required();
  eval_cmd->add_option("--bandwidth", eval_args.bandwidth, "Kernel bandwidth or \"auto\"");

  std::size_t demo_n = 65536;
  std::uint64_t demo_seed = 0;
  auto* demo_cmd = app.add_subcommand("demo-chi-gaussian", "Half-normal vs normal coverage discrepancies");
  demo_cmd->add_option("--n", demo_n, "Samples per distribution");
  demo_cmd->add_option("--seed", demo_seed, "Seed");

  HistArgs hist_args;
  auto* hist_cmd = app.add_subcommand("hist", "2-D histogram of a CSV point set");
  hist_cmd->add_option("--in", hist_args.in, "Input CSV")->required();
  hist_cmd->add_option("--bins", hist_args.bins, "Bins per axis");
  hist_cmd->add_option("--bounds", hist_args.bounds, "xmin xmax ymin ymax, or auto")->expected(1, 4);
  hist_cmd->add_option("--out", hist_args.out, "Output file")->required();
  hist_cmd->add_option("--format", hist_args.format, "csv or pgm")->check(CLI::IsMember({"csv", "pgm"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, out, err);
    if (sample_cmd->parsed()) {
      if (sample_args.checkpoint.empty() && sample_args.target.empty()) {
        throw ContractError("sample needs --checkpoint or --target");
      }
      return cmd_sample(sample_args, out);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (demo_cmd->parsed()) return cmd_demo(demo_n, demo_seed, out);
    if (hist_cmd->parsed()) return cmd_hist(hist_args, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace ksgan::cli
