#include "freqguide/blur_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freqguide {
namespace {

constexpr double kMinMass = 1e-12;

std::size_t square_side(const ImageTensor& t, const char* what) {
  if (t.channels() != 1 || t.height() != t.width() || t.height() % 2 == 0) {
    throw std::invalid_argument(std::string(what) + ": expected [1, s, s] with odd s, got " +
                                t.shape().str());
  }
  return t.height();
}

}  // namespace

BlurKernel::BlurKernel(Kernel2D weights) : k_(std::move(weights)) {
  if (!is_valid(k_)) {
    throw std::invalid_argument("BlurKernel: weights must be odd-square, nonnegative and sum to 1 (sum " +
                                std::to_string(k_.sum()) + ")");
  }
}

bool BlurKernel::is_valid(const Kernel2D& k) {
  if (k.rows == 0 || k.rows != k.cols || k.rows % 2 == 0) return false;
  for (double v : k.w) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
  }
  return std::abs(k.sum() - 1.0) <= kSumTolerance;
}

BlurKernel BlurKernel::delta(std::size_t side) { return BlurKernel(Kernel2D::delta(side)); }

BlurKernel BlurKernel::uniform(std::size_t side) {
  return BlurKernel(Kernel2D(side, side, 1.0 / static_cast<double>(side * side)));
}

ImageTensor BlurKernel::to_tensor() const {
  return ImageTensor(Shape{1, k_.rows, k_.cols}, k_.w);
}

BlurKernel BlurKernel::from_tensor(const ImageTensor& t) {
  const std::size_t s = square_side(t, "BlurKernel::from_tensor");
  return BlurKernel(Kernel2D(s, s, std::vector<double>(t.values().begin(), t.values().end())));
}

BlurKernel project_simplex(const ImageTensor& k_raw) {
  const std::size_t s = square_side(k_raw, "project_simplex");
  Kernel2D k(s, s);
  double mass = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    k.w[i] = std::max(0.0, k_raw[i]);
    mass += k.w[i];
  }
  if (!(mass >= kMinMass) || !std::isfinite(mass)) return BlurKernel::uniform(s);
  for (double& v : k.w) v /= mass;
  return BlurKernel(std::move(k));
}

ImageTensor project_simplex_vjp(const ImageTensor& k_raw, const ImageTensor& grad_kernel) {
  square_side(k_raw, "project_simplex_vjp");
  require_same_shape(k_raw, grad_kernel, "project_simplex_vjp");
  double mass = 0.0;
  for (double v : k_raw.values()) mass += std::max(0.0, v);
  ImageTensor grad(k_raw.shape());
  if (!(mass >= kMinMass) || !std::isfinite(mass)) return grad;
  // k_i = r_i^+ / S: dk_i/dr_j = [r_j > 0] (delta_ij - k_i) / S.
  double weighted = 0.0;
  for (std::size_t i = 0; i < k_raw.size(); ++i) weighted += grad_kernel[i] * std::max(0.0, k_raw[i]);
  weighted /= mass;
  for (std::size_t j = 0; j < k_raw.size(); ++j) {
    grad[j] = k_raw[j] > 0.0 ? (grad_kernel[j] - weighted) / mass : 0.0;
  }
  return grad;
}

ImageTensor encode_kernel_canvas(const BlurKernel& k, std::size_t canvas) {
  const std::size_t side = k.side();
  if (side > canvas) {
    throw std::invalid_argument("encode_kernel_canvas: kernel side " + std::to_string(side) +
                                " exceeds canvas " + std::to_string(canvas));
  }
  const double peak = *std::max_element(k.weights().w.begin(), k.weights().w.end());
  ImageTensor out(Shape{1, canvas, canvas}, -1.0);
  const std::size_t off = (canvas - side) / 2;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) out.at(0, off + r, off + c) = 2.0 * k(r, c) / peak - 1.0;
  }
  return out;
}

ImageTensor decode_kernel_canvas(const ImageTensor& canvas, std::size_t side) {
  if (canvas.channels() != 1 || canvas.height() < side || canvas.width() < side || side % 2 == 0) {
    throw std::invalid_argument("decode_kernel_canvas: cannot crop odd side " + std::to_string(side) +
                                " from " + canvas.shape().str());
  }
  const std::size_t oy = (canvas.height() - side) / 2, ox = (canvas.width() - side) / 2;
  ImageTensor raw(Shape{1, side, side});
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) raw.at(0, r, c) = 0.5 * (canvas.at(0, oy + r, ox + c) + 1.0);
  }
  return raw;
}

ImageTensor decode_kernel_canvas_adjoint(const ImageTensor& grad_raw, std::size_t canvas) {
  const std::size_t side = grad_raw.height();
  ImageTensor grad(Shape{1, canvas, canvas});
  const std::size_t off = (canvas - side) / 2;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) grad.at(0, off + r, off + c) = 0.5 * grad_raw.at(0, r, c);
  }
  return grad;
}

ImageTensor to_chain_domain(const ImageTensor& pixels) {
  ImageTensor out = pixels;
  for (double& v : out.values()) v = 2.0 * v - 1.0;
  return out;
}

ImageTensor to_pixel_domain(const ImageTensor& chain) {
  ImageTensor out = chain;
  for (double& v : out.values()) v = 0.5 * (v + 1.0);
  return out;
}

}  // namespace freqguide
