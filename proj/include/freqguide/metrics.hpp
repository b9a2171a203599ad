#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// 10 log10(peak^2 / MSE), or nullopt when the inputs are identical.
std::optional<double> psnr(const ImageTensor& a, const ImageTensor& b, double peak = 1.0);

/// Value substituted for identical inputs when averaging PSNR.
inline constexpr double kIdenticalPsnrDb = 100.0;
double psnr_or_cap(const std::optional<double>& db);

/// Mean local SSIM with a Gaussian window (sigma 1.5, odd `window` side),
/// K1 = 0.01, K2 = 0.03 and dynamic range 1. Only windows fully inside the
/// image are used; channels are averaged.
double ssim(const ImageTensor& a, const ImageTensor& b, std::size_t window = 7);

/// Mean squared difference after resampling both kernels so their centres
/// of mass sit on the grid centre. The smaller kernel is zero-padded.
double kernel_mse(const BlurKernel& k_rec, const BlurKernel& k_true);

struct MetricRecord {
  std::string image_id;
  std::string run_label;
  std::optional<double> psnr_db;
  double ssim = 0.0;
  /// NaN when no reference kernel exists.
  double kernel_mse = 0.0;
};

inline constexpr const char* kMetricsHeader = "image_id,run_label,psnr_db,ssim,kernel_mse";

/// Writes the header and one row per record. PSNR of identical inputs is
/// written as "identical".
void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records);
std::vector<MetricRecord> read_metrics_csv(std::istream& in, const std::string& source);

/// Column means; identical PSNR counts as kIdenticalPsnrDb, NaN kernel errors are skipped.
struct MetricSummary {
  std::size_t count = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double kernel_mse = 0.0;
};
MetricSummary summarize(const std::vector<MetricRecord>& records);

/// Shortest text that reads back to the same double.
std::string format_real(double v);

}  // namespace freqguide
