#include "freqguide/conv.hpp"

#include <numeric>
#include <stdexcept>

namespace freqguide {
namespace {

// Source index for coordinate i in [-pad, n + pad), or -1 for a zero sample.
long map_index(long i, long n, Boundary boundary) {
  if (i >= 0 && i < n) return i;
  switch (boundary) {
    case Boundary::kZero:
      return -1;
    case Boundary::kCircular:
      return ((i % n) + n) % n;
    case Boundary::kReflect: {
      if (n == 1) return 0;
      const long period = 2 * (n - 1);
      long m = ((i % period) + period) % period;
      return m < n ? m : period - m;
    }
  }
  return -1;
}

// table[o * taps + a] = source index feeding output o through tap a.
std::vector<long> tap_table(std::size_t n, std::size_t taps, Boundary boundary, ConvMode mode) {
  const long half = static_cast<long>(taps / 2);
  std::vector<long> table(n * taps);
  for (std::size_t o = 0; o < n; ++o) {
    for (std::size_t a = 0; a < taps; ++a) {
      const long offset = mode == ConvMode::kConvolution ? half - static_cast<long>(a)
                                                         : static_cast<long>(a) - half;
      table[o * taps + a] = map_index(static_cast<long>(o) + offset, static_cast<long>(n), boundary);
    }
  }
  return table;
}

void validate(const ImageTensor& image, const Kernel2D& kernel, const char* what) {
  if (image.empty()) throw std::invalid_argument(std::string(what) + ": empty image");
  if (kernel.rows % 2 == 0 || kernel.cols % 2 == 0) {
    throw std::invalid_argument(std::string(what) + ": kernel sides must be odd, got " +
                                std::to_string(kernel.rows) + "x" + std::to_string(kernel.cols));
  }
  if (image.height() < kernel.rows || image.width() < kernel.cols) {
    throw std::invalid_argument(std::string(what) + ": image " + image.shape().str() +
                                " smaller than kernel");
  }
}

}  // namespace

Boundary parse_boundary(const std::string& name) {
  if (name == "reflect") return Boundary::kReflect;
  if (name == "zero") return Boundary::kZero;
  if (name == "circular") return Boundary::kCircular;
  throw std::invalid_argument("unknown boundary '" + name + "'");
}

Kernel2D::Kernel2D(std::size_t rows, std::size_t cols, std::vector<double> weights)
    : rows(rows), cols(cols), w(std::move(weights)) {
  if (w.size() != rows * cols) throw std::invalid_argument("Kernel2D: weight count mismatch");
}

double Kernel2D::sum() const { return std::accumulate(w.begin(), w.end(), 0.0); }

Kernel2D Kernel2D::delta(std::size_t side) {
  Kernel2D k(side, side);
  k(side / 2, side / 2) = 1.0;
  return k;
}

ImageTensor conv2d(const ImageTensor& image, const Kernel2D& kernel, Boundary boundary,
                   ConvMode mode) {
  validate(image, kernel, "conv2d");
  const std::size_t h = image.height(), w = image.width();
  const auto rows = tap_table(h, kernel.rows, boundary, mode);
  const auto cols = tap_table(w, kernel.cols, boundary, mode);
  ImageTensor out(image.shape());
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto src = image.channel(c);
    auto dst = out.channel(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t a = 0; a < kernel.rows; ++a) {
          const long sy = rows[y * kernel.rows + a];
          if (sy < 0) continue;
          const double* line = src.data() + sy * w;
          const double* krow = kernel.w.data() + a * kernel.cols;
          for (std::size_t b = 0; b < kernel.cols; ++b) {
            const long sx = cols[x * kernel.cols + b];
            if (sx >= 0) acc += krow[b] * line[sx];
          }
        }
        dst[y * w + x] = acc;
      }
    }
  }
  return out;
}

ImageTensor conv2d_adjoint(const ImageTensor& grad_out, const Kernel2D& kernel, Boundary boundary,
                           ConvMode mode) {
  validate(grad_out, kernel, "conv2d_adjoint");
  const std::size_t h = grad_out.height(), w = grad_out.width();
  const auto rows = tap_table(h, kernel.rows, boundary, mode);
  const auto cols = tap_table(w, kernel.cols, boundary, mode);
  ImageTensor grad_in(grad_out.shape());
  for (std::size_t c = 0; c < grad_out.channels(); ++c) {
    const auto g = grad_out.channel(c);
    auto dst = grad_in.channel(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double gv = g[y * w + x];
        if (gv == 0.0) continue;
        for (std::size_t a = 0; a < kernel.rows; ++a) {
          const long sy = rows[y * kernel.rows + a];
          if (sy < 0) continue;
          double* line = dst.data() + sy * w;
          const double* krow = kernel.w.data() + a * kernel.cols;
          for (std::size_t b = 0; b < kernel.cols; ++b) {
            const long sx = cols[x * kernel.cols + b];
            if (sx >= 0) line[sx] += krow[b] * gv;
          }
        }
      }
    }
  }
  return grad_in;
}

Kernel2D conv2d_kernel_grad(const ImageTensor& image, const ImageTensor& grad_out,
                            std::size_t krows, std::size_t kcols, Boundary boundary,
                            ConvMode mode) {
  require_same_shape(image, grad_out, "conv2d_kernel_grad");
  Kernel2D grad(krows, kcols);
  validate(image, grad, "conv2d_kernel_grad");
  const std::size_t h = image.height(), w = image.width();
  const auto rows = tap_table(h, krows, boundary, mode);
  const auto cols = tap_table(w, kcols, boundary, mode);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    const auto src = image.channel(c);
    const auto g = grad_out.channel(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double gv = g[y * w + x];
        if (gv == 0.0) continue;
        for (std::size_t a = 0; a < krows; ++a) {
          const long sy = rows[y * krows + a];
          if (sy < 0) continue;
          const double* line = src.data() + sy * w;
          double* grow = grad.w.data() + a * kcols;
          for (std::size_t b = 0; b < kcols; ++b) {
            const long sx = cols[x * kcols + b];
            if (sx >= 0) grow[b] += gv * line[sx];
          }
        }
      }
    }
  }
  return grad;
}

}  // namespace freqguide
