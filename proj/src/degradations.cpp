#include "freqguide/degradations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "freqguide/conv.hpp"

namespace freqguide {
namespace {

void require_odd_side(std::size_t side, std::size_t min_side, const char* what) {
  if (side % 2 == 0 || side < min_side) {
    throw std::invalid_argument(std::string(what) + ": side must be odd and >= " +
                                std::to_string(min_side) + ", got " + std::to_string(side));
  }
}

BlurKernel normalized(Kernel2D k) {
  const double s = k.sum();
  for (double& v : k.w) v /= s;
  return BlurKernel(std::move(k));
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double parse_number(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument("degradation '" + context + "': bad number '" + text + "'");
  }
  return v;
}

}  // namespace

BlurKernel gaussian_kernel(double sigma, std::size_t side) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  require_odd_side(side, 3, "gaussian_kernel");
  const auto c = static_cast<long>(side / 2);
  Kernel2D k(side, side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t q = 0; q < side; ++q) {
      const auto dy = static_cast<double>(static_cast<long>(r) - c);
      const auto dx = static_cast<double>(static_cast<long>(q) - c);
      k(r, q) = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
    }
  }
  return normalized(std::move(k));
}

BlurKernel motion_kernel(Rng& rng, double intensity, std::size_t side) {
  if (!(intensity > 0.0 && intensity <= 1.0)) {
    throw std::invalid_argument("motion_kernel: intensity must be in (0, 1]");
  }
  require_odd_side(side, 3, "motion_kernel");
  const double length = static_cast<double>(side) * (0.1 + 0.3 * intensity);
  const double step = length / (kMotionSteps - 1);
  const double wobble = 1.2 * intensity;

  std::vector<double> py(kMotionSteps), px(kMotionSteps);
  double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int n = 1; n < kMotionSteps; ++n) {
    heading += wobble * rng.normal();
    py[n] = py[n - 1] + step * std::sin(heading);
    px[n] = px[n - 1] + step * std::cos(heading);
  }

  // Centre the path on its bounding box and shrink it if it would leave the grid.
  const auto [ymin, ymax] = std::minmax_element(py.begin(), py.end());
  const auto [xmin, xmax] = std::minmax_element(px.begin(), px.end());
  const double cy = 0.5 * (*ymin + *ymax), cx = 0.5 * (*xmin + *xmax);
  const double half_extent = 0.5 * std::max(*ymax - *ymin, *xmax - *xmin);
  const double limit = static_cast<double>(side) / 2.0 - 1.0;
  const double shrink = half_extent > limit ? limit / half_extent : 1.0;

  const double centre = static_cast<double>(side / 2);
  Kernel2D k(side, side);
  for (int n = 0; n < kMotionSteps; ++n) {
    const double y = centre + shrink * (py[n] - cy);
    const double x = centre + shrink * (px[n] - cx);
    const double fy = std::floor(y), fx = std::floor(x);
    const double wy = y - fy, wx = x - fx;
    const auto r = static_cast<std::size_t>(fy);
    const auto c = static_cast<std::size_t>(fx);
    k(r, c) += (1.0 - wy) * (1.0 - wx);
    k(r, c + 1) += (1.0 - wy) * wx;
    k(r + 1, c) += wy * (1.0 - wx);
    k(r + 1, c + 1) += wy * wx;
  }
  return normalized(std::move(k));
}

void DegradationSpec::validate() const {
  require_odd_side(kernel_side, 1, "DegradationSpec.kernel_side");
  if (!(noise_sigma >= 0.0 && noise_sigma <= 1.0)) {
    throw std::invalid_argument("DegradationSpec: noise_sigma must be in [0, 1]");
  }
  for (const BlurStage& s : stages) {
    switch (s.kind) {
      case BlurStage::Kind::kIdentity:
        break;
      case BlurStage::Kind::kGaussian:
        if (!(s.sigma > 0.0)) throw std::invalid_argument("gaussian blur: sigma must be > 0");
        break;
      case BlurStage::Kind::kMotion:
        if (!(s.intensity > 0.0 && s.intensity <= 1.0)) {
          throw std::invalid_argument("motion blur: intensity must be in (0, 1]");
        }
        break;
      case BlurStage::Kind::kTurbulence:
        if (!(s.sigma > 0.0)) throw std::invalid_argument("turbulence: PSF sigma must be > 0");
        if (!(s.tilt_amplitude >= 0.0)) throw std::invalid_argument("turbulence: tilt must be >= 0");
        break;
    }
  }
}

std::string DegradationSpec::blur_string() const {
  if (stages.empty()) return "none";
  std::string out;
  for (const BlurStage& s : stages) {
    if (!out.empty()) out += '+';
    switch (s.kind) {
      case BlurStage::Kind::kIdentity:
        out += "none";
        break;
      case BlurStage::Kind::kGaussian:
        out += "gaussian:" + format_number(s.sigma);
        break;
      case BlurStage::Kind::kMotion:
        out += "motion:" + format_number(s.intensity);
        break;
      case BlurStage::Kind::kTurbulence:
        out += "turbulence:" + format_number(s.sigma) + ":" + format_number(s.tilt_amplitude);
        break;
    }
  }
  return out;
}

std::vector<BlurStage> DegradationSpec::parse_blur(const std::string& text) {
  std::vector<BlurStage> stages;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, '+')) {
    std::vector<std::string> f;
    std::stringstream fields(part);
    std::string field;
    while (std::getline(fields, field, ':')) f.push_back(field);
    if (f.empty()) throw std::invalid_argument("degradation: empty blur stage in '" + text + "'");
    BlurStage s;
    if (f[0] == "none" && f.size() == 1) {
      s.kind = BlurStage::Kind::kIdentity;
    } else if (f[0] == "gaussian" && f.size() == 2) {
      s.kind = BlurStage::Kind::kGaussian;
      s.sigma = parse_number(f[1], text);
    } else if (f[0] == "motion" && f.size() == 2) {
      s.kind = BlurStage::Kind::kMotion;
      s.intensity = parse_number(f[1], text);
    } else if (f[0] == "turbulence" && f.size() == 3) {
      s.kind = BlurStage::Kind::kTurbulence;
      s.sigma = parse_number(f[1], text);
      s.tilt_amplitude = parse_number(f[2], text);
    } else {
      throw std::invalid_argument("degradation: cannot parse blur stage '" + part +
                                  "' (expected none, gaussian:S, motion:I or turbulence:S:A)");
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw std::invalid_argument("degradation: empty blur description");
  return stages;
}

BlurKernel compose_kernels(const BlurKernel& a, const BlurKernel& b, std::size_t side) {
  require_odd_side(side, 1, "compose_kernels");
  const std::size_t sa = a.side(), sb = b.side();
  const std::size_t full = sa + sb - 1;
  Kernel2D f(full, full);
  for (std::size_t i = 0; i < sa; ++i) {
    for (std::size_t j = 0; j < sa; ++j) {
      const double w = a(i, j);
      if (w == 0.0) continue;
      for (std::size_t p = 0; p < sb; ++p) {
        for (std::size_t q = 0; q < sb; ++q) f(i + p, j + q) += w * b(p, q);
      }
    }
  }
  Kernel2D out(side, side);
  const long off = static_cast<long>(full / 2) - static_cast<long>(side / 2);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const long fr = static_cast<long>(r) + off, fc = static_cast<long>(c) + off;
      if (fr >= 0 && fc >= 0 && fr < static_cast<long>(full) && fc < static_cast<long>(full)) {
        out(r, c) = f(static_cast<std::size_t>(fr), static_cast<std::size_t>(fc));
      }
    }
  }
  if (!(out.sum() > 0.0)) return BlurKernel::delta(side);
  return normalized(std::move(out));
}

ImageTensor tilt_field(Rng& rng, std::size_t height, std::size_t width, double amplitude) {
  ImageTensor field(Shape{2, height, width});
  if (amplitude == 0.0) return field;
  field = gaussian_noise(rng, field.shape());
  std::size_t side = 2 * static_cast<std::size_t>(std::ceil(3.0 * kTiltFilterSigma)) + 1;
  const std::size_t fit = std::min(height, width);
  if (side > fit) side = fit % 2 == 1 ? fit : fit - 1;
  if (side >= 3) field = conv2d(field, gaussian_kernel(kTiltFilterSigma, side).weights(), Boundary::kReflect);
  const double rms = std::sqrt(reduce_sq_norm(field) / static_cast<double>(height * width));
  if (rms > 0.0) field *= amplitude / rms;
  return field;
}

ImageTensor warp_bilinear(const ImageTensor& x, const ImageTensor& displacement) {
  const std::size_t h = x.height(), w = x.width();
  if (displacement.shape() != Shape{2, h, w}) {
    throw std::invalid_argument("warp_bilinear: displacement " + displacement.shape().str() +
                                " does not match image " + x.shape().str());
  }
  const double ymax = static_cast<double>(h - 1), xmax = static_cast<double>(w - 1);
  ImageTensor out(x.shape());
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double sy = std::clamp(static_cast<double>(i) + displacement.at(0, i, j), 0.0, ymax);
      const double sx = std::clamp(static_cast<double>(j) + displacement.at(1, i, j), 0.0, xmax);
      const auto y0 = static_cast<std::size_t>(sy), x0 = static_cast<std::size_t>(sx);
      const std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
      const double wy = sy - static_cast<double>(y0), wx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < x.channels(); ++c) {
        out.at(c, i, j) = (1.0 - wy) * ((1.0 - wx) * x.at(c, y0, x0) + wx * x.at(c, y0, x1)) +
                          wy * ((1.0 - wx) * x.at(c, y1, x0) + wx * x.at(c, y1, x1));
      }
    }
  }
  return out;
}

Degraded apply_degradation(const ImageTensor& x, const DegradationSpec& spec, Rng& rng) {
  spec.validate();
  if (x.empty()) throw std::invalid_argument("apply_degradation: empty image");
  const Rng root(spec.seed);
  Degraded out;
  out.y = x;
  out.k_true = BlurKernel::delta(spec.kernel_side);
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const BlurStage& s = spec.stages[i];
    BlurKernel k = BlurKernel::delta(spec.kernel_side);
    switch (s.kind) {
      case BlurStage::Kind::kIdentity:
        continue;
      case BlurStage::Kind::kGaussian:
        k = gaussian_kernel(s.sigma, spec.kernel_side);
        break;
      case BlurStage::Kind::kMotion: {
        Rng r = root.substream("motion_kernel", i);
        k = motion_kernel(r, s.intensity, spec.kernel_side);
        break;
      }
      case BlurStage::Kind::kTurbulence: {
        Rng r = root.substream("tilt", i);
        out.y = warp_bilinear(out.y, tilt_field(r, x.height(), x.width(), s.tilt_amplitude));
        k = gaussian_kernel(s.sigma, spec.kernel_side);
        break;
      }
    }
    out.y = conv2d(out.y, k.weights(), Boundary::kReflect);
    out.k_true = compose_kernels(out.k_true, k, spec.kernel_side);
  }
  if (spec.noise_sigma > 0.0) out.y += spec.noise_sigma * gaussian_noise(rng, x.shape());
  return out;
}

}  // namespace freqguide
