#include "freqguide/sampler.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "freqguide/metrics.hpp"
#include "freqguide/rng.hpp"

namespace freqguide {

void RestorationJob::validate() const {
  if (!image_denoiser) throw std::invalid_argument("restore: image denoiser missing");
  if (y.empty()) throw std::invalid_argument("restore: empty observation");
  require_finite(y, "restore: observation");
  if (image_denoiser->input_shape() != y.shape()) {
    throw std::invalid_argument("restore: observation " + y.shape().str() +
                                " does not match the image prior " +
                                image_denoiser->input_shape().str());
  }
  if (schedule.steps() < 1) throw std::invalid_argument("restore: empty schedule");
  cfg.validate();
  if (blind()) {
    if (!kernel_denoiser) throw std::invalid_argument("restore: blind mode needs a kernel prior");
    const Shape ks = kernel_denoiser->input_shape();
    if (ks.channels != 1 || ks.height != ks.width || ks.height < kernel_side || kernel_side % 2 == 0) {
      throw std::invalid_argument("restore: kernel prior canvas " + ks.str() +
                                  " cannot hold odd kernel side " + std::to_string(kernel_side));
    }
  }
}

RestorationResult restore(const RestorationJob& job,
                          const std::function<void(const TraceRecord&)>& on_step) {
  job.validate();
  const NoiseSchedule& s = job.schedule;
  const Rng root(job.seed);

  GuidanceProblem problem;
  problem.y = &job.y;
  problem.schedule = &s;
  problem.image_denoiser = job.image_denoiser.get();
  problem.boundary = job.boundary;
  if (job.blind()) {
    problem.kernel_denoiser = job.kernel_denoiser.get();
    problem.kernel_side = job.kernel_side;
  } else {
    problem.known_kernel = job.known_kernel;
    problem.kernel_side = job.known_kernel->side();
  }

  Rng init_x = root.substream("image_init");
  ImageTensor x = gaussian_noise(init_x, job.y.shape());
  ImageTensor k;
  if (job.blind()) {
    Rng init_k = root.substream("kernel_init");
    k = gaussian_noise(init_k, job.kernel_denoiser->input_shape());
  }

  RestorationResult result;
  result.trace.reserve(static_cast<std::size_t>(s.steps()));
  for (int t = s.steps(); t >= 1; --t) {
    const GuidanceGradient g = freq_loss_grad(x, k, t, problem, job.cfg);

    ImageTensor z_x(x.shape());
    if (t > 1) {
      Rng r = root.substream("x_z", static_cast<std::uint64_t>(t));
      z_x = gaussian_noise(r, x.shape());
    }
    x = guided_update(ancestral_step(s, x, t, g.eps_x, z_x), g.grad_x, g.loss.total,
                      job.cfg.zeta_image, job.cfg.step_norm_eps);

    if (job.blind()) {
      ImageTensor z_k(k.shape());
      if (t > 1) {
        Rng r = root.substream("k_z", static_cast<std::uint64_t>(t));
        z_k = gaussian_noise(r, k.shape());
      }
      k = guided_update(ancestral_step(s, k, t, g.eps_k, z_k), g.grad_k, g.loss.total,
                        job.cfg.zeta_kernel, job.cfg.step_norm_eps);
    }

    TraceRecord rec;
    rec.step = s.steps() - t;
    rec.t = t;
    rec.loss = g.loss;
    rec.grad_x_norm = std::sqrt(reduce_sq_norm(g.grad_x));
    rec.grad_k_norm = job.blind() ? std::sqrt(reduce_sq_norm(g.grad_k)) : 0.0;
    if (!x.all_finite() || !k.all_finite() || !std::isfinite(rec.loss.total)) {
      throw std::runtime_error("restore: non-finite state at step " + std::to_string(rec.step) +
                               " (t = " + std::to_string(t) + ")");
    }
    result.trace.push_back(rec);
    if (on_step) on_step(rec);
  }

  result.x_rec = clamp(to_pixel_domain(x), 0.0, 1.0);
  result.k_rec = job.blind() ? project_simplex(decode_kernel_canvas(k, job.kernel_side))
                             : *job.known_kernel;
  return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << kTraceHeader << '\n';
  for (const TraceRecord& r : trace) {
    out << r.step << ',' << r.t << ',' << format_real(r.loss.total) << ',' << format_real(r.loss.spatial)
        << ',' << format_real(r.loss.lh) << ',' << format_real(r.loss.hl) << ',' << format_real(r.loss.hh)
        << ',' << format_real(r.grad_x_norm) << ',' << format_real(r.grad_k_norm) << '\n';
  }
}

}  // namespace freqguide
