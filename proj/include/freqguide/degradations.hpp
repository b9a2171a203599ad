#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/rng.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// Isotropic Gaussian sampled at pixel centres, normalized to unit mass.
BlurKernel gaussian_kernel(double sigma, std::size_t side);

/// Trajectory length of motion_kernel.
inline constexpr int kMotionSteps = 64;

/// Random camera-shake kernel.
///
/// A walk of kMotionSteps steps whose heading drifts by N(0, (1.2 intensity)^2)
/// radians per step; the path spans about side * (0.3 + 0.5 intensity)
/// pixels. Positions are splatted bilinearly around the grid centre and the
/// result is normalized. Higher intensity gives longer, more erratic paths.
BlurKernel motion_kernel(Rng& rng, double intensity, std::size_t side);

/// One blur stage of a degradation.
struct BlurStage {
  enum class Kind { kIdentity, kGaussian, kMotion, kTurbulence };
  Kind kind = Kind::kIdentity;
  /// Gaussian width, or the PSF width for turbulence.
  double sigma = 0.0;
  /// Motion intensity in (0, 1].
  double intensity = 0.0;
  /// RMS pixel displacement of the turbulence tilt field.
  double tilt_amplitude = 0.0;
};

/// Blur stages applied in order, then additive white Gaussian noise.
/// Several stages form a composite degradation.
struct DegradationSpec {
  std::vector<BlurStage> stages;
  /// Noise standard deviation in [0, 1] pixel units.
  double noise_sigma = 0.0;
  std::size_t kernel_side = 21;
  /// Seeds the random kernels and tilt fields of this degradation.
  std::uint64_t seed = 0;

  void validate() const;

  /// Compact text form, e.g. "motion:0.5", "gaussian:3", "turbulence:1.5:1",
  /// "none", joined with '+' for composites.
  std::string blur_string() const;
  static std::vector<BlurStage> parse_blur(const std::string& text);
};

/// Smoothing width of the turbulence tilt field, in pixels.
inline constexpr double kTiltFilterSigma = 4.0;

struct Degraded {
  ImageTensor y;
  /// Realized blur (the composition of all stage kernels, cropped to
  /// kernel_side). Tilt warps are not part of it.
  BlurKernel k_true = BlurKernel::delta(1);
};

/// y = k * x + n with reflect boundary. Kernels and tilts come from
/// spec.seed; the noise is drawn from `rng`.
Degraded apply_degradation(const ImageTensor& x, const DegradationSpec& spec, Rng& rng);

/// Bilinear warp of every channel by per-pixel displacements (dy, dx)
/// given as [2, H, W]; samples outside the image clamp to the border.
ImageTensor warp_bilinear(const ImageTensor& x, const ImageTensor& displacement);

/// Smooth random displacement field [2, H, W] with RMS magnitude `amplitude`.
ImageTensor tilt_field(Rng& rng, std::size_t height, std::size_t width, double amplitude);

/// Full 2D convolution of two kernels, centre-cropped to `side` and renormalized.
BlurKernel compose_kernels(const BlurKernel& a, const BlurKernel& b, std::size_t side);

}  // namespace freqguide
