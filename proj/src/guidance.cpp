#include "freqguide/guidance.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "freqguide/wavelet.hpp"

namespace freqguide {
namespace {

struct ObservationLoss {
  LossParts parts;
  ImageTensor grad_yhat;
};

using LossFn = std::function<ObservationLoss(const ImageTensor&, const ImageTensor&, bool)>;

void check_problem(const GuidanceProblem& p) {
  if (p.y == nullptr || p.schedule == nullptr || p.image_denoiser == nullptr) {
    throw std::invalid_argument("guidance: observation, schedule and image denoiser are required");
  }
  if (p.kernel_denoiser == nullptr && !p.known_kernel) {
    throw std::invalid_argument("guidance: known-kernel mode needs a kernel");
  }
}

void require_finite_grad(const ImageTensor& g, int t, const char* which) {
  if (!g.all_finite()) {
    throw std::runtime_error(std::string("guidance: non-finite ") + which + " gradient at t = " +
                             std::to_string(t));
  }
}

GuidanceGradient run_pipeline(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                              const GuidanceProblem& problem, const GuidanceConfig& cfg,
                              bool need_grad, const LossFn& loss_fn) {
  check_problem(problem);
  const NoiseSchedule& s = *problem.schedule;
  const int model_step = s.model_step(t);
  const double abar = s.alpha_bar(t);
  const double inv_a = 1.0 / std::sqrt(abar);
  const double b_over_a = std::sqrt(1.0 - abar) * inv_a;
  const bool through = need_grad && cfg.grad_through_denoiser;
  const bool blind = problem.kernel_denoiser != nullptr;

  GuidanceGradient out;
  std::unique_ptr<Denoiser::Evaluation> eval_x, eval_k;
  if (through) {
    eval_x = problem.image_denoiser->evaluate(state_x, model_step);
    out.eps_x = eval_x->eps();
  } else {
    out.eps_x = problem.image_denoiser->predict(state_x, model_step);
  }
  out.x0_pixels = to_pixel_domain(tweedie_x0(s, state_x, t, out.eps_x));

  ImageTensor k_raw;
  if (blind) {
    if (through) {
      eval_k = problem.kernel_denoiser->evaluate(state_k, model_step);
      out.eps_k = eval_k->eps();
    } else {
      out.eps_k = problem.kernel_denoiser->predict(state_k, model_step);
    }
    k_raw = decode_kernel_canvas(tweedie_x0(s, state_k, t, out.eps_k), problem.kernel_side);
    out.k0 = project_simplex(k_raw);
  } else {
    out.k0 = *problem.known_kernel;
  }

  const ImageTensor y_hat = conv2d(out.x0_pixels, out.k0.weights(), problem.boundary);
  ObservationLoss obs = loss_fn(*problem.y, y_hat, need_grad);
  out.loss = obs.parts;
  if (!need_grad) return out;

  // Image chain: y_hat = k0 * (x0 + 1) / 2, x0 = inv_a x_t - b_over_a eps(x_t).
  ImageTensor g_x0 = conv2d_adjoint(obs.grad_yhat, out.k0.weights(), problem.boundary);
  g_x0 *= 0.5;
  out.grad_x = inv_a * g_x0;
  if (eval_x) out.grad_x -= b_over_a * eval_x->vjp(g_x0);
  require_finite_grad(out.grad_x, t, "image");

  if (blind) {
    const std::size_t side = problem.kernel_side;
    const Kernel2D gk = conv2d_kernel_grad(out.x0_pixels, obs.grad_yhat, side, side, problem.boundary);
    const ImageTensor g_kernel(Shape{1, side, side}, gk.w);
    const ImageTensor g_canvas =
        decode_kernel_canvas_adjoint(project_simplex_vjp(k_raw, g_kernel), state_k.height());
    out.grad_k = inv_a * g_canvas;
    if (eval_k) out.grad_k -= b_over_a * eval_k->vjp(g_canvas);
    require_finite_grad(out.grad_k, t, "kernel");
  }
  return out;
}

LossFn frequency_loss_fn(const GuidanceConfig& cfg) {
  return [&cfg](const ImageTensor& y, const ImageTensor& y_hat, bool need_grad) {
    ObservationLoss r;
    r.parts = freq_loss(y, y_hat, cfg);
    if (need_grad) r.grad_yhat = freq_loss_grad_yhat(y, y_hat, cfg);
    return r;
  };
}

ObservationLoss spatial_loss(const ImageTensor& y, const ImageTensor& y_hat, bool need_grad) {
  require_same_shape(y, y_hat, "spatial_loss");
  ObservationLoss r;
  if (need_grad) r.grad_yhat = ImageTensor(y.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    acc += d * d;
    if (need_grad) r.grad_yhat[i] = -2.0 * d;
  }
  r.parts.spatial = acc;
  r.parts.total = acc;
  return r;
}

}  // namespace

GuidanceConfig GuidanceConfig::with_lambda(double lambda) {
  GuidanceConfig cfg;
  cfg.lambda_lh = cfg.lambda_hl = cfg.lambda_hh = lambda;
  return cfg;
}

void GuidanceConfig::validate() const {
  if (!(lambda_lh >= 0.0 && lambda_hl >= 0.0 && lambda_hh >= 0.0)) {
    throw std::invalid_argument("GuidanceConfig: subband weights must be >= 0");
  }
  if (!(zeta_image > 0.0 && zeta_kernel > 0.0)) {
    throw std::invalid_argument("GuidanceConfig: step sizes must be > 0");
  }
  if (!(step_norm_eps > 0.0)) throw std::invalid_argument("GuidanceConfig: step_norm_eps must be > 0");
}

LossParts freq_loss(const ImageTensor& y, const ImageTensor& y_hat, const GuidanceConfig& cfg) {
  require_same_shape(y, y_hat, "freq_loss");
  const SubbandSet sy = dwt2(y);
  const SubbandSet sh = dwt2(y_hat);
  LossParts p;
  p.spatial = reduce_sq_norm(y - y_hat);
  p.lh = reduce_sq_norm(sy.lh - sh.lh);
  p.hl = reduce_sq_norm(sy.hl - sh.hl);
  p.hh = reduce_sq_norm(sy.hh - sh.hh);
  p.total = p.spatial + cfg.lambda_lh * p.lh + cfg.lambda_hl * p.hl + cfg.lambda_hh * p.hh;
  return p;
}

ImageTensor freq_loss_grad_yhat(const ImageTensor& y, const ImageTensor& y_hat,
                                const GuidanceConfig& cfg) {
  require_same_shape(y, y_hat, "freq_loss_grad_yhat");
  const ImageTensor residual = y - y_hat;
  SubbandSet weighted = dwt2(residual);
  weighted.ll *= 0.0;
  weighted.lh *= cfg.lambda_lh;
  weighted.hl *= cfg.lambda_hl;
  weighted.hh *= cfg.lambda_hh;
  ImageTensor grad = dwt2_adjoint(weighted);
  grad += residual;
  grad *= -2.0;
  return grad;
}

GuidanceGradient freq_loss_grad(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                                const GuidanceProblem& problem, const GuidanceConfig& cfg) {
  return run_pipeline(state_x, state_k, t, problem, cfg, true, frequency_loss_fn(cfg));
}

GuidanceGradient spatial_loss_grad(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                                   const GuidanceProblem& problem, const GuidanceConfig& cfg) {
  return run_pipeline(state_x, state_k, t, problem, cfg, true, spatial_loss);
}

LossParts guidance_loss(const ImageTensor& state_x, const ImageTensor& state_k, int t,
                        const GuidanceProblem& problem, const GuidanceConfig& cfg) {
  return run_pipeline(state_x, state_k, t, problem, cfg, false, frequency_loss_fn(cfg)).loss;
}

ImageTensor guided_update(const ImageTensor& state, const ImageTensor& grad, double loss, double zeta,
                          double eps) {
  require_same_shape(state, grad, "guided_update");
  if (!(zeta > 0.0)) throw std::invalid_argument("guided_update: zeta must be > 0");
  const double scale = zeta / (std::sqrt(std::max(loss, 0.0)) + eps);
  return axpby(1.0, state, -scale, grad);
}

}  // namespace freqguide
