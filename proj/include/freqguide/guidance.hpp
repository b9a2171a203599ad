#pragma once

#include <cstddef>
#include <optional>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/conv.hpp"
#include "freqguide/denoiser.hpp"
#include "freqguide/diffusion.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// Weights and step sizes of the data-consistency guidance.
struct GuidanceConfig {
  double lambda_lh = 0.1;
  double lambda_hl = 0.1;
  double lambda_hh = 0.1;
  double zeta_image = 1.0;
  double zeta_kernel = 1.0;
  double step_norm_eps = 1e-8;
  /// Differentiate through eps_theta (DPS). When false, eps_hat is held
  /// constant and x0_hat is affine in the state (cheaper, approximate).
  bool grad_through_denoiser = true;

  static GuidanceConfig with_lambda(double lambda);
  void validate() const;
};

struct LossParts {
  double total = 0.0;
  double spatial = 0.0;
  double lh = 0.0;
  double hl = 0.0;
  double hh = 0.0;
};

/// ||y - y_hat||^2 + sum_i lambda_i ||dwt(y)_i - dwt(y_hat)_i||^2 over the
/// LH, HL and HH subbands. Sums of squares, not means.
LossParts freq_loss(const ImageTensor& y, const ImageTensor& y_hat, const GuidanceConfig& cfg);

/// d freq_loss / d y_hat.
ImageTensor freq_loss_grad_yhat(const ImageTensor& y, const ImageTensor& y_hat,
                                const GuidanceConfig& cfg);

/// The forward model shared by the guidance and its finite-difference checks.
struct GuidanceProblem {
  const ImageTensor* y = nullptr;
  const NoiseSchedule* schedule = nullptr;
  const Denoiser* image_denoiser = nullptr;
  /// Null in known-kernel mode.
  const Denoiser* kernel_denoiser = nullptr;
  /// Used when kernel_denoiser is null.
  std::optional<BlurKernel> known_kernel;
  std::size_t kernel_side = 21;
  Boundary boundary = Boundary::kReflect;
};

struct GuidanceGradient {
  ImageTensor grad_x;
  /// Empty in known-kernel mode.
  ImageTensor grad_k;
  LossParts loss;
  /// Denoiser outputs at the current states, reused by the ancestral step.
  ImageTensor eps_x;
  ImageTensor eps_k;
  /// Clean estimates in pixel domain and the projected kernel estimate.
  ImageTensor x0_pixels;
  BlurKernel k0 = BlurKernel::delta(1);
};

/// Pipeline x0 = tweedie(x_t), k0 = project(decode(tweedie(k_t))),
/// y_hat = k0 * pixels(x0), loss = freq_loss(y, y_hat); returns the loss and
/// its gradients with respect to both chain states. `state_k` is ignored in
/// known-kernel mode. Throws std::runtime_error on a non-finite gradient.
GuidanceGradient freq_loss_grad(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                                const GuidanceProblem& problem, const GuidanceConfig& cfg);

/// The same pipeline with the plain spatial loss ||y - y_hat||^2, coded
/// without the subband machinery. Reference for the lambda = 0 reduction.
GuidanceGradient spatial_loss_grad(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                                   const GuidanceProblem& problem, const GuidanceConfig& cfg);

/// Loss of the pipeline above without gradients.
LossParts guidance_loss(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                        const GuidanceProblem& problem, const GuidanceConfig& cfg);

/// state - zeta / (sqrt(loss) + eps) * grad.
ImageTensor guided_update(const ImageTensor& state, const ImageTensor& grad, double loss, double zeta,
                          double eps);

}  // namespace freqguide
