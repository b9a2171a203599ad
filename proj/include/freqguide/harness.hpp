#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "freqguide/config.hpp"
#include "freqguide/metrics.hpp"

namespace freqguide {

namespace fs = std::filesystem;

/// Command-line failures that are the caller's fault (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes N synthetic images plus `manifest.csv` (id,split,path) into out_dir.
void cmd_synth_data(const ExperimentConfig& cfg, const fs::path& out_dir);

struct CorpusImage {
  std::string id;
  std::string split;
  fs::path path;
};
std::vector<CorpusImage> read_corpus_manifest(const fs::path& corpus_dir);

/// Trains the image prior on the corpus train split. Writes the checkpoint
/// to `checkpoint` and a loss log next to it (<checkpoint>.log.csv).
void cmd_train_denoiser(const ExperimentConfig& cfg, const fs::path& corpus_dir, const fs::path& checkpoint);

/// Trains the kernel prior on random motion and Gaussian kernels.
void cmd_train_kernel_prior(const ExperimentConfig& cfg, const fs::path& checkpoint);

/// One degraded observation as listed in a degradation manifest.
struct DegradedItem {
  std::string id;
  std::string blur;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  fs::path clean, degraded, kernel;
};

/// Degrades the first data.max_images images of data.split with
/// `degradation.*`. Image i uses kernel seed and noise stream derived from
/// (cfg.seed, i). Writes clean/degraded/kernel tensors and manifest.csv.
void cmd_degrade(const ExperimentConfig& cfg, const fs::path& corpus_dir, const fs::path& out_dir);
std::vector<DegradedItem> read_degraded_manifest(const fs::path& dir);

struct RunSummary {
  std::string label;
  MetricSummary metrics;
  /// Every recovered kernel was nonnegative with unit mass (1e-6).
  bool kernels_valid = true;
  /// Every trace entry was finite.
  bool traces_finite = true;
  /// Fraction of jobs whose final guidance loss is below the first.
  double loss_decreased_fraction = 0.0;
  /// Mean PSNR of the degraded inputs against the clean images.
  double input_psnr_db = 0.0;
};

/// Restores every item of a degradation directory. Writes per-image
/// x_rec/k_rec tensors, trace CSVs and preview grids, metrics.csv and the
/// resolved config.
RunSummary cmd_restore(const ExperimentConfig& cfg, const fs::path& inputs, const fs::path& out_dir);

/// Lambdas of the guidance-strength sweep.
inline const std::vector<double> kLambdaSweep{0.0, 0.01, 0.1, 0.5, 1.0, 5.0};

/// Restore once per lambda (broadcast to all three subbands) into
/// out_dir/lambda_<v>/, then write out_dir/ablation.csv.
std::vector<RunSummary> cmd_ablate_lambda(const ExperimentConfig& cfg, const fs::path& inputs,
                                          const fs::path& out_dir);

/// Restore with L2, L2+LH, L2+LH+HL and L2+LH+HL+HH, the included subbands
/// weighted by cfg.guidance.lambda_lh, the others 0.
std::vector<RunSummary> cmd_ablate_subbands(const ExperimentConfig& cfg, const fs::path& inputs,
                                            const fs::path& out_dir);

inline constexpr const char* kAblationHeader =
    "label,lambda_lh,lambda_hl,lambda_hh,n,psnr_db,ssim,kernel_mse,input_psnr_db";

/// Aggregates run directories (each holding metrics.csv or ablation.csv)
/// into out_dir/summary.csv plus PNG plots. Returns the number of rows.
std::size_t cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir);

/// Resolved config text written into every output directory.
void write_resolved_config(const ExperimentConfig& cfg, const fs::path& out_dir);

}  // namespace freqguide
