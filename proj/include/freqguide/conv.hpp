#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "freqguide/tensor.hpp"

namespace freqguide {

enum class Boundary { kReflect, kZero, kCircular };
enum class ConvMode { kConvolution, kCorrelation };

Boundary parse_boundary(const std::string& name);

/// Row-major 2D array of reals with odd side lengths.
struct Kernel2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> w;

  Kernel2D() = default;
  Kernel2D(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows(rows), cols(cols), w(rows * cols, fill) {}
  Kernel2D(std::size_t rows, std::size_t cols, std::vector<double> weights);

  double& operator()(std::size_t r, std::size_t c) { return w[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return w[r * cols + c]; }
  double sum() const;
  std::size_t size() const { return w.size(); }

  static Kernel2D delta(std::size_t side);
};

/// Same-size depthwise filtering. Every channel is filtered with `kernel`.
/// Convolution flips the kernel; correlation does not. Sums run in 64-bit.
ImageTensor conv2d(const ImageTensor& image, const Kernel2D& kernel, Boundary boundary,
                   ConvMode mode = ConvMode::kConvolution);

/// Adjoint of conv2d with respect to the image: returns J^T g.
ImageTensor conv2d_adjoint(const ImageTensor& grad_out, const Kernel2D& kernel, Boundary boundary,
                           ConvMode mode = ConvMode::kConvolution);

/// Gradient of <grad_out, conv2d(image, k)> with respect to k, summed over channels.
Kernel2D conv2d_kernel_grad(const ImageTensor& image, const ImageTensor& grad_out,
                            std::size_t rows, std::size_t cols, Boundary boundary,
                            ConvMode mode = ConvMode::kConvolution);

}  // namespace freqguide
