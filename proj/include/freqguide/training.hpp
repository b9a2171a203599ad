#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "freqguide/denoiser.hpp"
#include "freqguide/diffusion.hpp"
#include "freqguide/rng.hpp"

namespace freqguide {

/// Optimizer and loop settings for eps-prediction training (Adam).
struct TrainParams {
  long steps = 4000;
  std::size_t batch = 16;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  long warmup = 100;
  /// Final learning rate as a fraction of `lr` (cosine decay after warmup).
  double final_lr_fraction = 0.1;
  /// Random horizontal flips of training examples.
  bool hflip = true;
};

void to_json(nlohmann::json& j, const TrainParams& p);

struct TrainLogEntry {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::shared_ptr<UNetDenoiser<float>> model;
  /// Per-step mean squared eps error.
  std::vector<double> losses;
};

/// Draws one clean training example.
using ExampleSource = std::function<ImageTensor(Rng&)>;

/// Trains a fresh UNet on examples drawn from `source`. All randomness
/// (init, batches, steps, noise) derives from `rng`; the loop is
/// single-threaded, so equal seeds give bit-identical weights.
TrainResult train_denoiser(const Rng& rng, const ExampleSource& source, const NoiseSchedule& schedule,
                           const UNetArch& arch, const TrainParams& params,
                           const std::function<void(const TrainLogEntry&)>& log = {});

/// Same, sampling uniformly from a fixed dataset of equally shaped tensors.
TrainResult train_denoiser(const Rng& rng, const std::vector<ImageTensor>& dataset,
                           const NoiseSchedule& schedule, const UNetArch& arch,
                           const TrainParams& params,
                           const std::function<void(const TrainLogEntry&)>& log = {});

/// Mean per-element eps-prediction error over `data`, `repeats` noise draws each.
double heldout_loss(const Denoiser& model, const std::vector<ImageTensor>& data,
                    const NoiseSchedule& schedule, const Rng& rng, int repeats = 1);

/// Mean of losses[first, last).
double mean_loss(const std::vector<double>& losses, std::size_t first, std::size_t last);

}  // namespace freqguide
