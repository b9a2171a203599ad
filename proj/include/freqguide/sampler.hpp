#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/conv.hpp"
#include "freqguide/denoiser.hpp"
#include "freqguide/diffusion.hpp"
#include "freqguide/guidance.hpp"

namespace freqguide {

/// One restoration problem. Blind mode when `known_kernel` is empty.
struct RestorationJob {
  ImageTensor y;
  std::optional<BlurKernel> known_kernel;
  DenoiserHandle image_denoiser;
  /// Required in blind mode, ignored otherwise.
  DenoiserHandle kernel_denoiser;
  NoiseSchedule schedule;
  GuidanceConfig cfg;
  std::size_t kernel_side = 21;
  Boundary boundary = Boundary::kReflect;
  std::uint64_t seed = 0;

  bool blind() const { return !known_kernel.has_value(); }
  /// Throws std::invalid_argument on missing models or incompatible shapes.
  void validate() const;
};

struct TraceRecord {
  int step = 0;  // 0 for the first (noisiest) update
  int t = 0;
  LossParts loss;
  double grad_x_norm = 0.0;
  double grad_k_norm = 0.0;
};

struct RestorationResult {
  /// Pixel-domain estimate clamped to [0, 1].
  ImageTensor x_rec;
  BlurKernel k_rec = BlurKernel::delta(1);
  std::vector<TraceRecord> trace;
};

/// Parallel reverse diffusion of the image and kernel chains. At every t
/// both chains take an ancestral step and then a guided update along the
/// gradient of the frequency-aware loss evaluated at the pre-step states.
/// Initial states and per-step noise come from substreams of job.seed, so
/// the result depends on nothing else.
RestorationResult restore(const RestorationJob& job,
                          const std::function<void(const TraceRecord&)>& on_step = {});

inline constexpr const char* kTraceHeader = "step,t,loss,spatial,lh,hl,hh,grad_x_norm,grad_k_norm";
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

}  // namespace freqguide
