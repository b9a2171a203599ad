#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freqguide/degradations.hpp"
#include "freqguide/diffusion.hpp"
#include "freqguide/guidance.hpp"
#include "freqguide/training.hpp"
#include "freqguide/unet.hpp"

namespace freqguide {

/// Every tunable of the harness. The text form is one `section.key = value`
/// per line; '#' starts a comment. Keys are listed in README.md.
struct ExperimentConfig {
  struct Data {
    std::string corpus_dir = "corpus";
    std::size_t count = 512;
    std::size_t height = 32;
    std::size_t width = 32;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::string split = "test";
    std::size_t max_images = 20;
  } data;

  struct Schedule {
    int train_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int sample_steps = 300;
  } schedule;

  struct Denoiser {
    std::string image_checkpoint = "priors/image.ckpt";
    std::string kernel_checkpoint = "priors/kernel.ckpt";
    std::vector<std::size_t> image_widths{32, 64, 64};
    std::vector<std::size_t> kernel_widths{16, 32, 32};
    std::size_t kernel_canvas = 32;
    std::size_t time_dim = 32;
    std::size_t embed_dim = 64;
    long train_steps = 4000;
    long kernel_train_steps = 4000;
    std::size_t batch = 16;
    double lr = 1e-3;
    long warmup = 100;
    double grad_clip = 1.0;
    double final_lr_fraction = 0.1;
    bool hflip = true;
  } denoiser;

  GuidanceConfig guidance;

  struct Degradation {
    std::string blur = "gaussian:3";
    double noise_sigma = 0.0;
    std::size_t kernel_side = 21;
  } degradation;

  struct Run {
    std::string mode = "blind";  // "blind" or "known"
    std::string boundary = "reflect";
    std::size_t threads = 1;
    bool previews = true;
    std::string label = "run";
  } run;

  std::uint64_t seed = 0;

  /// Applies one assignment; throws std::invalid_argument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Applies every assignment in `text`; `source` names it in errors.
  void apply_text(const std::string& text, const std::string& source);
  void load_file(const std::filesystem::path& path);
  /// Fully resolved form, one line per key (round-trips through apply_text).
  std::string to_text() const;
  void validate() const;

  static std::vector<std::string> keys();

  NoiseSchedule train_schedule() const;
  NoiseSchedule sample_schedule() const;
  UNetArch image_arch() const;
  UNetArch kernel_arch() const;
  TrainParams train_params(bool kernel) const;
  DegradationSpec degradation_spec(std::uint64_t kernel_seed) const;
};

}  // namespace freqguide
