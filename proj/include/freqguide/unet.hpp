#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "freqguide/rng.hpp"

namespace freqguide {

/// Architecture of the convolutional encoder-decoder noise predictor.
///
/// Level l runs at resolution (H, W) / 2^l with widths[l] channels. Each
/// encoder level is conv3x3 -> (+time embedding) -> SiLU -> conv3x3 -> SiLU;
/// levels are joined by 2x2 average pooling on the way down and by conv3x3
/// at the coarse level, nearest upsampling and an additive skip on the way up. A final conv3x3 maps
/// back to `channels`. One level gives a three-layer network.
struct UNetArch {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::vector<std::size_t> widths{32, 64, 64};
  std::size_t time_dim = 32;
  std::size_t embed_dim = 64;

  std::size_t levels() const { return widths.size(); }
  std::size_t input_size() const { return channels * height * width; }
  void validate() const;
  bool operator==(const UNetArch&) const = default;
};

void to_json(nlohmann::json& j, const UNetArch& a);
void from_json(const nlohmann::json& j, UNetArch& a);

/// Sinusoidal embedding of an integer step, `dim` entries (sin half, cos half).
std::vector<double> step_embedding(int step, std::size_t dim);

/// The network itself, with hand-written reverse mode.
///
/// Batched tensors passed in and out are sample-major [B][C][H][W]. The
/// network never mutates itself during forward/backward; all activations
/// live in the caller-owned Tape, so one instance can serve many threads.
template <typename Scalar>
class UNet {
 public:
  struct Tape {
    std::size_t batch = 0;
    std::vector<Scalar> sinus, embed_pre, embed_act;
    std::vector<std::vector<Scalar>> step_bias;
    std::vector<std::vector<Scalar>> enc_in, pre1, act1, pre2, act2;
    std::vector<std::vector<Scalar>> up_in, pre3, act3, pre4, act4;
    std::vector<Scalar> col;
  };

  explicit UNet(UNetArch arch);

  const UNetArch& arch() const { return arch_; }
  std::size_t num_params() const { return params_.size(); }
  std::vector<Scalar>& params() { return params_; }
  const std::vector<Scalar>& params() const { return params_; }

  /// He-scaled normal weights, zero biases, and a near-zero output layer.
  void init(Rng& rng);

  void forward(std::span<const Scalar> x, std::span<const int> steps, std::span<Scalar> out,
               Tape& tape) const;

  /// Reverse pass for the tape of the latest forward. grad_params is
  /// accumulated into (may be empty); grad_in is overwritten (may be empty).
  void backward(Tape& tape, std::span<const Scalar> grad_out, std::span<Scalar> grad_params,
                std::span<Scalar> grad_in) const;

 private:
  struct Dense {
    std::size_t in = 0, out = 0, weight = 0, bias = 0;
  };
  struct Conv {
    std::size_t in = 0, out = 0, weight = 0, bias = 0;
  };

  Dense add_dense(std::size_t in, std::size_t out);
  Conv add_conv(std::size_t in, std::size_t out);

  std::size_t level_h(std::size_t l) const { return arch_.height >> l; }
  std::size_t level_w(std::size_t l) const { return arch_.width >> l; }

  void conv_forward(const Conv& conv, const Scalar* in, std::size_t batch, std::size_t h,
                    std::size_t w, Scalar* out, std::vector<Scalar>& col) const;
  void conv_backward(const Conv& conv, const Scalar* in, const Scalar* grad_out, std::size_t batch,
                     std::size_t h, std::size_t w, Scalar* grad_params, Scalar* grad_in,
                     std::vector<Scalar>& col) const;

  UNetArch arch_;
  std::vector<Scalar> params_;
  std::size_t param_count_ = 0;
  Dense embed_;
  std::vector<Dense> step_proj_;
  std::vector<Conv> enc1_, enc2_, up_, dec_;
  Conv out_;
};

extern template class UNet<float>;
extern template class UNet<double>;

}  // namespace freqguide
