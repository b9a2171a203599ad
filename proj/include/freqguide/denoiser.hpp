#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "freqguide/diffusion.hpp"
#include "freqguide/tensor.hpp"
#include "freqguide/unet.hpp"

namespace freqguide {

/// Noise predictor eps_theta(x_t, step). `step` is the index in the
/// schedule the model was trained on (see NoiseSchedule::model_step).
class Denoiser {
 public:
  /// One forward pass kept alive for reverse-mode input gradients.
  class Evaluation {
   public:
    virtual ~Evaluation() = default;
    const ImageTensor& eps() const { return eps_; }
    /// J^T cotangent: gradient of <cotangent, eps_theta(.)> at the evaluated input.
    virtual ImageTensor vjp(const ImageTensor& cotangent) = 0;

   protected:
    ImageTensor eps_;
  };

  virtual ~Denoiser() = default;

  virtual Shape input_shape() const = 0;
  virtual ImageTensor predict(const ImageTensor& x_t, int step) const = 0;
  virtual std::unique_ptr<Evaluation> evaluate(const ImageTensor& x_t, int step) const = 0;

  /// evaluate() followed by vjp(); writes eps_theta(x_t) to *eps when given.
  ImageTensor predict_vjp(const ImageTensor& x_t, int step, const ImageTensor& cotangent,
                          ImageTensor* eps = nullptr) const;
};

using DenoiserHandle = std::shared_ptr<const Denoiser>;

/// Everything a checkpoint records beside the weights.
struct CheckpointInfo {
  static constexpr int kFormatVersion = 1;

  std::string kind = "image";  // "image" or "kernel"
  UNetArch arch;
  int schedule_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::uint64_t train_seed = 0;
  long train_steps = 0;
  nlohmann::json optimizer = nlohmann::json::object();
  double final_loss = 0.0;
};

void to_json(nlohmann::json& j, const CheckpointInfo& info);
void from_json(const nlohmann::json& j, CheckpointInfo& info);

/// UNet-backed denoiser computing in `Scalar` precision. Evaluation is const
/// and allocates its own tape, so a finished handle is safe to share.
template <typename Scalar>
class UNetDenoiser final : public Denoiser {
 public:
  explicit UNetDenoiser(UNet<Scalar> net, CheckpointInfo info = {});

  Shape input_shape() const override;
  ImageTensor predict(const ImageTensor& x_t, int step) const override;
  std::unique_ptr<Evaluation> evaluate(const ImageTensor& x_t, int step) const override;

  const UNet<Scalar>& net() const { return net_; }
  UNet<Scalar>& net() { return net_; }
  const CheckpointInfo& info() const { return info_; }
  CheckpointInfo& info() { return info_; }

 private:
  UNet<Scalar> net_;
  CheckpointInfo info_;
};

extern template class UNetDenoiser<float>;
extern template class UNetDenoiser<double>;

/// Binary checkpoint: "FGCK", u32 version, u64 header length, JSON header
/// (CheckpointInfo), u64 parameter count, float32 little-endian weights.
void save_checkpoint(const std::filesystem::path& path, const UNetDenoiser<float>& model);
std::shared_ptr<UNetDenoiser<float>> load_checkpoint(const std::filesystem::path& path);

}  // namespace freqguide
