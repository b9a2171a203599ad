#pragma once

#include <cstddef>

#include "freqguide/conv.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// Square, odd-sided, nonnegative kernel with unit mass.
class BlurKernel {
 public:
  static constexpr double kSumTolerance = 1e-6;

  /// Validates the invariants; throws std::invalid_argument otherwise.
  explicit BlurKernel(Kernel2D weights);

  static BlurKernel delta(std::size_t side);
  static BlurKernel uniform(std::size_t side);

  std::size_t side() const { return k_.rows; }
  const Kernel2D& weights() const { return k_; }
  double operator()(std::size_t r, std::size_t c) const { return k_(r, c); }

  /// [1, side, side] copy of the weights.
  ImageTensor to_tensor() const;
  static BlurKernel from_tensor(const ImageTensor& t);

  /// True if `k` is nonnegative, odd-square and sums to 1 within kSumTolerance.
  static bool is_valid(const Kernel2D& k);

 private:
  Kernel2D k_;
};

/// Clamps negatives to zero and rescales a [1, s, s] array to unit mass.
/// Inputs whose positive mass is below 1e-12 map to the uniform kernel.
BlurKernel project_simplex(const ImageTensor& k_raw);

/// Reverse mode of project_simplex at `k_raw`: maps dL/dk to dL/dk_raw.
/// The uniform fallback is treated as locally constant.
ImageTensor project_simplex_vjp(const ImageTensor& k_raw, const ImageTensor& grad_kernel);

/// Kernel-chain representation: the kernel is drawn centred on a
/// [1, canvas, canvas] grid as 2 k / max(k) - 1, so background sits at -1 and
/// the peak at +1, matching the [-1, 1] range of the image chain.
ImageTensor encode_kernel_canvas(const BlurKernel& k, std::size_t canvas);

/// Inverse affine map plus centre crop: (canvas + 1) / 2 restricted to the
/// central side x side window. The result still needs project_simplex.
ImageTensor decode_kernel_canvas(const ImageTensor& canvas, std::size_t side);

/// Adjoint of decode_kernel_canvas (zero-pad and scale by 1/2).
ImageTensor decode_kernel_canvas_adjoint(const ImageTensor& grad_raw, std::size_t canvas);

/// Image-chain representation: pixels in [0, 1] map to [-1, 1].
ImageTensor to_chain_domain(const ImageTensor& pixels);
ImageTensor to_pixel_domain(const ImageTensor& chain);

}  // namespace freqguide
