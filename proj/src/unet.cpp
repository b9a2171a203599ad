#include "freqguide/unet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace freqguide {
namespace {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
void silu(const std::vector<Scalar>& pre, std::vector<Scalar>& act) {
  act.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) act[i] = pre[i] * sigmoid(pre[i]);
}

// grad <- grad * silu'(pre), in place.
template <typename Scalar>
void silu_backward(const std::vector<Scalar>& pre, std::vector<Scalar>& grad) {
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const Scalar s = sigmoid(pre[i]);
    grad[i] *= s * (Scalar(1) + pre[i] * (Scalar(1) - s));
  }
}

// Sample-major [B][C][P] <-> channel-major [C][B][P].
template <typename Scalar>
void transpose_batch(const Scalar* src, Scalar* dst, std::size_t outer, std::size_t inner,
                     std::size_t plane) {
  for (std::size_t a = 0; a < outer; ++a) {
    for (std::size_t b = 0; b < inner; ++b) {
      std::copy_n(src + (a * inner + b) * plane, plane, dst + (b * outer + a) * plane);
    }
  }
}

template <typename Scalar>
void avg_pool(const std::vector<Scalar>& in, std::size_t planes, std::size_t h, std::size_t w,
              std::vector<Scalar>& out) {
  const std::size_t oh = h / 2, ow = w / 2;
  out.assign(planes * oh * ow, Scalar(0));
  for (std::size_t p = 0; p < planes; ++p) {
    const Scalar* src = in.data() + p * h * w;
    Scalar* dst = out.data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        dst[y * ow + x] = Scalar(0.25) * (src[2 * y * w + 2 * x] + src[2 * y * w + 2 * x + 1] +
                                          src[(2 * y + 1) * w + 2 * x] +
                                          src[(2 * y + 1) * w + 2 * x + 1]);
      }
    }
  }
}

// Adds the pooling adjoint of `grad` (low resolution) into `out` (high resolution).
template <typename Scalar>
void avg_pool_backward_add(const std::vector<Scalar>& grad, std::size_t planes, std::size_t h,
                           std::size_t w, std::vector<Scalar>& out) {
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    const Scalar* src = grad.data() + p * oh * ow;
    Scalar* dst = out.data() + p * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) dst[y * w + x] += Scalar(0.25) * src[(y / 2) * ow + x / 2];
    }
  }
}

// Nearest-neighbour 2x upsampling from (h, w).
template <typename Scalar>
void upsample(const std::vector<Scalar>& in, std::size_t planes, std::size_t h, std::size_t w,
              std::vector<Scalar>& out) {
  const std::size_t oh = 2 * h, ow = 2 * w;
  out.resize(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p) {
    const Scalar* src = in.data() + p * h * w;
    Scalar* dst = out.data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) dst[y * ow + x] = src[(y / 2) * w + x / 2];
    }
  }
}

template <typename Scalar>
void upsample_backward(const std::vector<Scalar>& grad, std::size_t planes, std::size_t h,
                       std::size_t w, std::vector<Scalar>& out) {
  const std::size_t oh = 2 * h, ow = 2 * w;
  out.assign(planes * h * w, Scalar(0));
  for (std::size_t p = 0; p < planes; ++p) {
    const Scalar* src = grad.data() + p * oh * ow;
    Scalar* dst = out.data() + p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) dst[(y / 2) * w + x / 2] += src[y * ow + x];
    }
  }
}

// col[(ci * 9 + ky * 3 + kx)][n] for n over the batch * h * w positions of channel-major input.
template <typename Scalar>
void im2col(const Scalar* in, std::size_t cin, std::size_t n_planes_per_channel, std::size_t h,
            std::size_t w, Scalar* col) {
  const std::size_t plane = h * w;
  const std::size_t n = n_planes_per_channel * plane;
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        Scalar* row = col + ((ci * 3 + ky) * 3 + kx) * n;
        for (std::size_t b = 0; b < n_planes_per_channel; ++b) {
          const Scalar* src = in + (ci * n_planes_per_channel + b) * plane;
          Scalar* dst = row + b * plane;
          for (std::size_t y = 0; y < h; ++y) {
            const long sy = static_cast<long>(y) + static_cast<long>(ky) - 1;
            Scalar* drow = dst + y * w;
            if (sy < 0 || sy >= static_cast<long>(h)) {
              std::fill_n(drow, w, Scalar(0));
              continue;
            }
            const Scalar* srow = src + sy * w;
            const std::size_t x0 = kx == 0 ? 1 : 0;
            const std::size_t x1 = kx == 2 ? w - 1 : w;
            if (x0 > 0) drow[0] = Scalar(0);
            if (x1 < w) drow[w - 1] = Scalar(0);
            std::copy(srow + x0 + kx - 1, srow + x1 + kx - 1, drow + x0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const Scalar* col, std::size_t cin, std::size_t n_planes_per_channel, std::size_t h,
            std::size_t w, Scalar* out) {
  const std::size_t plane = h * w;
  const std::size_t n = n_planes_per_channel * plane;
  std::fill_n(out, cin * n, Scalar(0));
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const Scalar* row = col + ((ci * 3 + ky) * 3 + kx) * n;
        for (std::size_t b = 0; b < n_planes_per_channel; ++b) {
          Scalar* dst = out + (ci * n_planes_per_channel + b) * plane;
          const Scalar* src = row + b * plane;
          for (std::size_t y = 0; y < h; ++y) {
            const long sy = static_cast<long>(y) + static_cast<long>(ky) - 1;
            if (sy < 0 || sy >= static_cast<long>(h)) continue;
            Scalar* drow = dst + sy * w;
            const Scalar* srow = src + y * w;
            const std::size_t x0 = kx == 0 ? 1 : 0;
            const std::size_t x1 = kx == 2 ? w - 1 : w;
            Scalar* dshift = drow + (static_cast<std::ptrdiff_t>(kx) - 1);
            for (std::size_t x = x0; x < x1; ++x) dshift[x] += srow[x];
          }
        }
      }
    }
  }
}

}  // namespace

void UNetArch::validate() const {
  if (channels == 0 || widths.empty()) throw std::invalid_argument("UNetArch: empty architecture");
  const std::size_t scale = std::size_t{1} << (widths.size() - 1);
  if (height % scale != 0 || width % scale != 0 || height / scale < 1 || width / scale < 1) {
    throw std::invalid_argument("UNetArch: " + std::to_string(height) + "x" +
                                std::to_string(width) + " not divisible by 2^(levels-1)");
  }
  if (time_dim == 0 || time_dim % 2 != 0 || embed_dim == 0) {
    throw std::invalid_argument("UNetArch: time_dim must be positive and even");
  }
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("UNetArch: zero-width level");
  }
}

void to_json(nlohmann::json& j, const UNetArch& a) {
  j = nlohmann::json{{"channels", a.channels}, {"height", a.height},     {"width", a.width},
                     {"widths", a.widths},     {"time_dim", a.time_dim}, {"embed_dim", a.embed_dim}};
}

void from_json(const nlohmann::json& j, UNetArch& a) {
  j.at("channels").get_to(a.channels);
  j.at("height").get_to(a.height);
  j.at("width").get_to(a.width);
  j.at("widths").get_to(a.widths);
  j.at("time_dim").get_to(a.time_dim);
  j.at("embed_dim").get_to(a.embed_dim);
}

std::vector<double> step_embedding(int step, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> e(dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    e[i] = std::sin(step * freq);
    e[half + i] = std::cos(step * freq);
  }
  return e;
}

template <typename Scalar>
UNet<Scalar>::UNet(UNetArch arch) : arch_(std::move(arch)) {
  arch_.validate();
  const std::size_t levels = arch_.levels();
  embed_ = add_dense(arch_.time_dim, arch_.embed_dim);
  for (std::size_t l = 0; l < levels; ++l) step_proj_.push_back(add_dense(arch_.embed_dim, arch_.widths[l]));
  for (std::size_t l = 0; l < levels; ++l) {
    enc1_.push_back(add_conv(l == 0 ? arch_.channels : arch_.widths[l - 1], arch_.widths[l]));
    enc2_.push_back(add_conv(arch_.widths[l], arch_.widths[l]));
  }
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    up_.push_back(add_conv(arch_.widths[l + 1], arch_.widths[l]));
    dec_.push_back(add_conv(arch_.widths[l], arch_.widths[l]));
  }
  out_ = add_conv(arch_.widths[0], arch_.channels);
  params_.assign(param_count_, Scalar(0));
}

template <typename Scalar>
typename UNet<Scalar>::Dense UNet<Scalar>::add_dense(std::size_t in, std::size_t out) {
  Dense d{in, out, param_count_, param_count_ + in * out};
  param_count_ += in * out + out;
  return d;
}

template <typename Scalar>
typename UNet<Scalar>::Conv UNet<Scalar>::add_conv(std::size_t in, std::size_t out) {
  Conv c{in, out, param_count_, param_count_ + out * in * 9};
  param_count_ += out * in * 9 + out;
  return c;
}

template <typename Scalar>
void UNet<Scalar>::init(Rng& rng) {
  std::fill(params_.begin(), params_.end(), Scalar(0));
  auto fill = [&](std::size_t offset, std::size_t count, double stddev) {
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = static_cast<Scalar>(stddev * rng.normal());
  };
  fill(embed_.weight, embed_.in * embed_.out, std::sqrt(1.0 / embed_.in));
  for (const Dense& d : step_proj_) fill(d.weight, d.in * d.out, std::sqrt(1.0 / d.in));
  auto he = [&](const Conv& c, double gain) { fill(c.weight, c.out * c.in * 9, gain * std::sqrt(2.0 / (c.in * 9))); };
  for (const Conv& c : enc1_) he(c, 1.0);
  for (const Conv& c : enc2_) he(c, 1.0);
  for (const Conv& c : up_) he(c, 0.7);
  for (const Conv& c : dec_) he(c, 1.0);
  he(out_, 0.01);
}

template <typename Scalar>
void UNet<Scalar>::conv_forward(const Conv& conv, const Scalar* in, std::size_t batch, std::size_t h,
                                std::size_t w, Scalar* out, std::vector<Scalar>& col) const {
  const std::size_t n = batch * h * w;
  const std::size_t k = conv.in * 9;
  col.resize(std::max(col.size(), k * n));
  im2col(in, conv.in, batch, h, w, col.data());
  Eigen::Map<const RowMat<Scalar>> weight(params_.data() + conv.weight, conv.out, k);
  Eigen::Map<const Vec<Scalar>> bias(params_.data() + conv.bias, conv.out);
  Eigen::Map<const RowMat<Scalar>> cols(col.data(), k, n);
  Eigen::Map<RowMat<Scalar>> result(out, conv.out, n);
  result.noalias() = weight * cols;
  result.colwise() += bias;
}

template <typename Scalar>
void UNet<Scalar>::conv_backward(const Conv& conv, const Scalar* in, const Scalar* grad_out,
                                 std::size_t batch, std::size_t h, std::size_t w,
                                 Scalar* grad_params, Scalar* grad_in,
                                 std::vector<Scalar>& col) const {
  const std::size_t n = batch * h * w;
  const std::size_t k = conv.in * 9;
  col.resize(std::max(col.size(), k * n));
  Eigen::Map<const RowMat<Scalar>> dy(grad_out, conv.out, n);
  Eigen::Map<RowMat<Scalar>> cols(col.data(), k, n);
  if (grad_params != nullptr) {
    im2col(in, conv.in, batch, h, w, col.data());
    Eigen::Map<RowMat<Scalar>> dw(grad_params + conv.weight, conv.out, k);
    dw.noalias() += dy * cols.transpose();
    // Plain loop: Eigen's vectorized reductions peel by address, which
    // would make the summation order depend on heap alignment.
    for (std::size_t o = 0; o < conv.out; ++o) {
      const Scalar* row = grad_out + o * n;
      Scalar acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += row[i];
      grad_params[conv.bias + o] += acc;
    }
  }
  if (grad_in != nullptr) {
    Eigen::Map<const RowMat<Scalar>> weight(params_.data() + conv.weight, conv.out, k);
    cols.noalias() = weight.transpose() * dy;
    col2im(col.data(), conv.in, batch, h, w, grad_in);
  }
}

template <typename Scalar>
void UNet<Scalar>::forward(std::span<const Scalar> x, std::span<const int> steps,
                           std::span<Scalar> out, Tape& tape) const {
  const std::size_t batch = steps.size();
  const std::size_t levels = arch_.levels();
  const std::size_t plane0 = arch_.height * arch_.width;
  if (batch == 0 || x.size() != batch * arch_.input_size() || out.size() != x.size()) {
    throw std::invalid_argument("UNet::forward: input/output sizes do not match the architecture");
  }
  tape.batch = batch;

  // Step embedding MLP: sinus -> dense -> SiLU -> one dense projection per level.
  const std::size_t td = arch_.time_dim, ed = arch_.embed_dim;
  tape.sinus.resize(batch * td);
  tape.embed_pre.resize(batch * ed);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto e = step_embedding(steps[b], td);
    for (std::size_t i = 0; i < td; ++i) tape.sinus[b * td + i] = static_cast<Scalar>(e[i]);
    for (std::size_t o = 0; o < ed; ++o) {
      Scalar acc = params_[embed_.bias + o];
      const Scalar* wrow = params_.data() + embed_.weight + o * td;
      for (std::size_t i = 0; i < td; ++i) acc += wrow[i] * tape.sinus[b * td + i];
      tape.embed_pre[b * ed + o] = acc;
    }
  }
  silu(tape.embed_pre, tape.embed_act);
  tape.step_bias.resize(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    const Dense& d = step_proj_[l];
    auto& sb = tape.step_bias[l];
    sb.resize(d.out * batch);
    for (std::size_t c = 0; c < d.out; ++c) {
      const Scalar* wrow = params_.data() + d.weight + c * ed;
      for (std::size_t b = 0; b < batch; ++b) {
        Scalar acc = params_[d.bias + c];
        for (std::size_t i = 0; i < ed; ++i) acc += wrow[i] * tape.embed_act[b * ed + i];
        sb[c * batch + b] = acc;
      }
    }
  }

  tape.enc_in.resize(levels);
  tape.pre1.resize(levels);
  tape.act1.resize(levels);
  tape.pre2.resize(levels);
  tape.act2.resize(levels);
  tape.enc_in[0].resize(batch * arch_.input_size());
  transpose_batch(x.data(), tape.enc_in[0].data(), batch, arch_.channels, plane0);

  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t h = level_h(l), w = level_w(l), plane = h * w;
    const std::size_t width = arch_.widths[l];
    if (l > 0) avg_pool(tape.act2[l - 1], arch_.widths[l - 1] * batch, level_h(l - 1), level_w(l - 1), tape.enc_in[l]);
    tape.pre1[l].resize(width * batch * plane);
    conv_forward(enc1_[l], tape.enc_in[l].data(), batch, h, w, tape.pre1[l].data(), tape.col);
    for (std::size_t cb = 0; cb < width * batch; ++cb) {
      const Scalar bias = tape.step_bias[l][cb];
      Scalar* p = tape.pre1[l].data() + cb * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += bias;
    }
    silu(tape.pre1[l], tape.act1[l]);
    tape.pre2[l].resize(width * batch * plane);
    conv_forward(enc2_[l], tape.act1[l].data(), batch, h, w, tape.pre2[l].data(), tape.col);
    silu(tape.pre2[l], tape.act2[l]);
  }

  const std::size_t dec_levels = levels - 1;
  tape.up_in.resize(dec_levels);
  tape.pre3.resize(dec_levels);
  tape.act3.resize(dec_levels);
  tape.pre4.resize(dec_levels);
  tape.act4.resize(dec_levels);
  const std::vector<Scalar>* h_act = &tape.act2[levels - 1];
  std::vector<Scalar> low;
  for (std::size_t step = 0; step < dec_levels; ++step) {
    const std::size_t l = dec_levels - 1 - step;
    const std::size_t h = level_h(l), w = level_w(l), plane = h * w;
    const std::size_t width = arch_.widths[l];
    tape.up_in[l] = *h_act;
    low.resize(width * batch * level_h(l + 1) * level_w(l + 1));
    conv_forward(up_[l], tape.up_in[l].data(), batch, level_h(l + 1), level_w(l + 1), low.data(), tape.col);
    upsample(low, width * batch, level_h(l + 1), level_w(l + 1), tape.pre3[l]);
    for (std::size_t i = 0; i < tape.pre3[l].size(); ++i) tape.pre3[l][i] += tape.act2[l][i];
    silu(tape.pre3[l], tape.act3[l]);
    tape.pre4[l].resize(width * batch * plane);
    conv_forward(dec_[l], tape.act3[l].data(), batch, h, w, tape.pre4[l].data(), tape.col);
    silu(tape.pre4[l], tape.act4[l]);
    h_act = &tape.act4[l];
  }

  std::vector<Scalar> out_cm(batch * arch_.input_size());
  conv_forward(out_, h_act->data(), batch, arch_.height, arch_.width, out_cm.data(), tape.col);
  transpose_batch(out_cm.data(), out.data(), arch_.channels, batch, plane0);
}

template <typename Scalar>
void UNet<Scalar>::backward(Tape& tape, std::span<const Scalar> grad_out,
                            std::span<Scalar> grad_params, std::span<Scalar> grad_in) const {
  const std::size_t batch = tape.batch;
  const std::size_t levels = arch_.levels();
  const std::size_t plane0 = arch_.height * arch_.width;
  if (grad_out.size() != batch * arch_.input_size()) {
    throw std::invalid_argument("UNet::backward: gradient size does not match the last forward");
  }
  if (!grad_params.empty() && grad_params.size() != params_.size()) {
    throw std::invalid_argument("UNet::backward: parameter gradient size mismatch");
  }
  if (!grad_in.empty() && grad_in.size() != grad_out.size()) {
    throw std::invalid_argument("UNet::backward: input gradient size mismatch");
  }
  Scalar* gp = grad_params.empty() ? nullptr : grad_params.data();

  std::vector<Scalar> g_out(grad_out.size());
  transpose_batch(grad_out.data(), g_out.data(), batch, arch_.channels, plane0);

  const std::size_t dec_levels = levels - 1;
  const std::vector<Scalar>& h_final = dec_levels > 0 ? tape.act4[0] : tape.act2[0];
  std::vector<Scalar> g_h(h_final.size());
  conv_backward(out_, h_final.data(), g_out.data(), batch, arch_.height, arch_.width, gp, g_h.data(), tape.col);

  std::vector<std::vector<Scalar>> g_act2(levels);
  for (std::size_t l = 0; l < levels; ++l) g_act2[l].assign(tape.act2[l].size(), Scalar(0));

  std::vector<Scalar> g_tmp, g_up;
  for (std::size_t l = 0; l < dec_levels; ++l) {
    const std::size_t h = level_h(l), w = level_w(l);
    silu_backward(tape.pre4[l], g_h);
    g_tmp.resize(tape.act3[l].size());
    conv_backward(dec_[l], tape.act3[l].data(), g_h.data(), batch, h, w, gp, g_tmp.data(), tape.col);
    silu_backward(tape.pre3[l], g_tmp);
    for (std::size_t i = 0; i < g_tmp.size(); ++i) g_act2[l][i] += g_tmp[i];
    upsample_backward(g_tmp, arch_.widths[l] * batch, level_h(l + 1), level_w(l + 1), g_up);
    g_h.resize(tape.up_in[l].size());
    conv_backward(up_[l], tape.up_in[l].data(), g_up.data(), batch, level_h(l + 1), level_w(l + 1), gp,
                  g_h.data(), tape.col);
  }
  for (std::size_t i = 0; i < g_h.size(); ++i) g_act2[levels - 1][i] += g_h[i];

  std::vector<std::vector<Scalar>> g_step_bias(levels);
  std::vector<Scalar> g_in;
  for (std::size_t step = 0; step < levels; ++step) {
    const std::size_t l = levels - 1 - step;
    const std::size_t h = level_h(l), w = level_w(l), plane = h * w;
    const std::size_t width = arch_.widths[l];
    auto& g = g_act2[l];
    silu_backward(tape.pre2[l], g);
    g_tmp.resize(tape.act1[l].size());
    conv_backward(enc2_[l], tape.act1[l].data(), g.data(), batch, h, w, gp, g_tmp.data(), tape.col);
    silu_backward(tape.pre1[l], g_tmp);
    if (gp != nullptr) {
      auto& gsb = g_step_bias[l];
      gsb.assign(width * batch, Scalar(0));
      for (std::size_t cb = 0; cb < width * batch; ++cb) {
        const Scalar* p = g_tmp.data() + cb * plane;
        Scalar acc = 0;
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
        gsb[cb] = acc;
      }
    }
    const bool need_input = l > 0 || !grad_in.empty();
    g_in.resize(tape.enc_in[l].size());
    conv_backward(enc1_[l], tape.enc_in[l].data(), g_tmp.data(), batch, h, w, gp,
                  need_input ? g_in.data() : nullptr, tape.col);
    if (l > 0) {
      avg_pool_backward_add(g_in, arch_.widths[l - 1] * batch, level_h(l - 1), level_w(l - 1), g_act2[l - 1]);
    } else if (!grad_in.empty()) {
      transpose_batch(g_in.data(), grad_in.data(), arch_.channels, batch, plane0);
    }
  }

  if (gp == nullptr) return;
  const std::size_t td = arch_.time_dim, ed = arch_.embed_dim;
  std::vector<Scalar> g_embed(batch * ed, Scalar(0));
  for (std::size_t l = 0; l < levels; ++l) {
    const Dense& d = step_proj_[l];
    const auto& gsb = g_step_bias[l];
    for (std::size_t c = 0; c < d.out; ++c) {
      Scalar* gw = gp + d.weight + c * ed;
      const Scalar* wrow = params_.data() + d.weight + c * ed;
      for (std::size_t b = 0; b < batch; ++b) {
        const Scalar gv = gsb[c * batch + b];
        gp[d.bias + c] += gv;
        for (std::size_t i = 0; i < ed; ++i) {
          gw[i] += gv * tape.embed_act[b * ed + i];
          g_embed[b * ed + i] += gv * wrow[i];
        }
      }
    }
  }
  silu_backward(tape.embed_pre, g_embed);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < ed; ++o) {
      const Scalar gv = g_embed[b * ed + o];
      gp[embed_.bias + o] += gv;
      Scalar* gw = gp + embed_.weight + o * td;
      for (std::size_t i = 0; i < td; ++i) gw[i] += gv * tape.sinus[b * td + i];
    }
  }
}

template class UNet<float>;
template class UNet<double>;

}  // namespace freqguide
