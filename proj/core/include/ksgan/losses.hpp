#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ksgan/autodiff.hpp"
#include "ksgan/rng.hpp"
#include "ksgan/targets.hpp"
#include "ksgan/tensor.hpp"

namespace ksgan::losses {

/// A critic on the active graph: (n, d) points -> (n, 1) or (n) values.
using CriticFn = std::function<ad::Var(const ad::Var&)>;
/// Evaluation-only critic: (n, d) -> n values.
using CriticEval = std::function<Tensor(const Tensor&)>;

enum class Aggregation { Max, Mean };
enum class IndicatorKind { Ste, Smooth };

struct GeneratorLossOptions {
  Aggregation mode = Aggregation::Mean;
  IndicatorKind indicator = IndicatorKind::Ste;
  double tau = 0.1;       // temperature of the smooth indicator
  double ste_clip = 0.0;  // > 0 zeroes the surrogate where |c - lambda| > ste_clip
};

/// Sorted multiset union of the critic values of both batches.
std::vector<double> level_grid(std::span<const double> c_F, std::span<const double> c_G);

struct GeneratorLossParts {
  ad::Var loss_f;  // coverage gap over the sublevel sets {c <= lambda}
  ad::Var loss_g;  // same with critic values and thresholds negated
  ad::Var total;
  // Smallest lambda attaining each maximum (max mode only, NaN otherwise).
  double argmax_lambda_f = std::numeric_limits<double>::quiet_NaN();
  double argmax_lambda_g = std::numeric_limits<double>::quiet_NaN();
};

/// Sum of the coverage discrepancies of both orientations, aggregated over
/// the level grid by max or by mean. Thresholds are detached; the indicator
/// passes gradients straight through to the critic values.
GeneratorLossParts generator_loss(const ad::Var& c_F, const ad::Var& c_G, const GeneratorLossOptions& options = {});
/// Same with a caller-supplied threshold grid.
GeneratorLossParts generator_loss_at_levels(const ad::Var& c_F, const ad::Var& c_G, std::span<const double> levels,
                                            const GeneratorLossOptions& options = {});

/// mean(c_G) - mean(c_F); the critic maximizes it.
ad::Var critic_loss(const ad::Var& c_F, const ad::Var& c_G);

struct CriticWithPenalty {
  ad::Var c_F;
  ad::Var c_G;
  ad::Var penalty;
};

/// Evaluates the critic on both batches in one pass and returns the values
/// together with mean |grad_x c|^2 over the generated batch plus the same
/// over the real batch. The penalty is differentiable in the critic
/// parameters (double backprop).
CriticWithPenalty critic_with_score_penalty(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F,
                                            const Tensor& x_G);

ad::Var score_penalty(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F, const Tensor& x_G);

enum class Orientation { F, G };

struct GksEstimate {
  double value = 0.0;     // max of the two orientations
  double loss_f = 0.0;    // sup over sets {c <= lambda}
  double loss_g = 0.0;    // sup over sets {c >= lambda}
  double lambda = 0.0;    // smallest threshold attaining `value`
  Orientation orientation = Orientation::F;
};

/// Plug-in generalized KS distance from critic values, exact.
GksEstimate gks_from_values(std::span<const double> c_F, std::span<const double> c_G);
GksEstimate gks_estimate(const Tensor& points_F, const Tensor& points_G, const CriticEval& critic);

struct AdversarialParts {
  ad::Var critic;
  ad::Var generator;
  ad::Var penalty;  // gradient-penalty term (WGAN-GP only)
};

/// Binary cross-entropy on pre-sigmoid outputs. Real samples get label 1 and
/// generated ones label 0 (swapped when flip is set). The generator part is
/// the non-saturating loss.
AdversarialParts gan_losses(const ad::Var& d_F, const ad::Var& d_G, bool flip = false);

/// WGAN-GP with x_hat = eps * x_F + (1 - eps) * x_G, eps ~ U(0, 1) per pair.
AdversarialParts wgan_gp_losses(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F, const ad::Var& x_G,
                                double gp_weight, Rng& rng);
/// Same with explicit interpolation weights (one per pair).
AdversarialParts wgan_gp_losses(ad::Graph& graph, const CriticFn& critic, const Tensor& x_F, const ad::Var& x_G,
                                double gp_weight, const Tensor& eps);

struct ChiGaussianDiscrepancy {
  double one_sided_sup = 0.0;  // sup_alpha |P_F(C_G(alpha)) - alpha|, centered intervals
  double symmetric_gks = 0.0;  // max over the centered-interval and [0, q] families
};

/// Half-normal F vs standard normal G, each 1-D. The G family is the
/// centered intervals (critic |x|); the F family is [0, q] (critic x on
/// x >= 0, excluded otherwise).
ChiGaussianDiscrepancy chi_gaussian_discrepancy(const targets::SampleSet& half_normal,
                                                const targets::SampleSet& normal);

}  // namespace ksgan::losses
