#include "freqguide/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace freqguide {
namespace {

void check_step(const NoiseSchedule& s, int t, const char* what) {
  if (t < 1 || t > s.steps()) {
    throw std::invalid_argument(std::string(what) + ": step " + std::to_string(t) +
                                " outside [1, " + std::to_string(s.steps()) + "]");
  }
}

}  // namespace

void NoiseSchedule::fill_from_betas(std::vector<double> betas) {
  beta_ = std::move(betas);
  const std::size_t n = beta_.size();
  alpha_.resize(n);
  alpha_bar_.resize(n);
  sigma_.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    alpha_[i] = 1.0 - beta_[i];
    running *= alpha_[i];
    alpha_bar_[i] = running;
    sigma_[i] = i == 0 ? 0.0 : std::sqrt(beta_[i]);
  }
}

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw std::invalid_argument("make_schedule: need at least 2 steps");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("make_schedule: require 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  for (int i = 0; i < steps; ++i) {
    betas[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) / (steps - 1);
  }
  NoiseSchedule s;
  s.fill_from_betas(std::move(betas));
  s.model_step_.resize(steps);
  for (int i = 0; i < steps; ++i) s.model_step_[i] = i + 1;
  s.train_steps_ = steps;
  s.beta_start_ = beta_start;
  s.beta_end_ = beta_end;
  return s;
}

NoiseSchedule respace(const NoiseSchedule& base, int steps) {
  const int n = base.steps();
  if (steps < 2 || steps > n) {
    throw std::invalid_argument("respace: steps must lie in [2, " + std::to_string(n) + "]");
  }
  const int gaps = steps - 1;
  const int span = n - 1;
  const int stride = span / gaps;
  const int long_gaps = span % gaps;

  std::vector<int> visit(steps);
  visit[0] = 1;
  for (int i = 1; i < steps; ++i) {
    visit[i] = visit[i - 1] + stride + (i > gaps - long_gaps ? 1 : 0);
  }

  std::vector<double> betas(steps);
  double prev = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double abar = base.alpha_bar(visit[i]);
    betas[i] = 1.0 - abar / prev;
    prev = abar;
  }
  NoiseSchedule s;
  s.fill_from_betas(std::move(betas));
  s.model_step_.resize(steps);
  for (int i = 0; i < steps; ++i) s.model_step_[i] = base.model_step(visit[i]);
  s.train_steps_ = base.train_steps_;
  s.beta_start_ = base.beta_start_;
  s.beta_end_ = base.beta_end_;
  return s;
}

ImageTensor q_sample(const NoiseSchedule& s, const ImageTensor& x0, int t, const ImageTensor& eps) {
  check_step(s, t, "q_sample");
  require_same_shape(x0, eps, "q_sample");
  const double abar = s.alpha_bar(t);
  return axpby(std::sqrt(abar), x0, std::sqrt(1.0 - abar), eps);
}

ImageTensor tweedie_x0(const NoiseSchedule& s, const ImageTensor& x_t, int t,
                       const ImageTensor& eps_hat) {
  check_step(s, t, "tweedie_x0");
  require_same_shape(x_t, eps_hat, "tweedie_x0");
  const double abar = s.alpha_bar(t);
  const double inv = 1.0 / std::sqrt(abar);
  return axpby(inv, x_t, -std::sqrt(1.0 - abar) * inv, eps_hat);
}

ImageTensor ancestral_step(const NoiseSchedule& s, const ImageTensor& x_t, int t,
                           const ImageTensor& eps_hat, const ImageTensor& z) {
  check_step(s, t, "ancestral_step");
  require_same_shape(x_t, eps_hat, "ancestral_step");
  require_same_shape(x_t, z, "ancestral_step");
  if (t == 1) {
    for (double v : z.values()) {
      if (v != 0.0) throw std::invalid_argument("ancestral_step: z must be zero at t = 1");
    }
  }
  const double alpha = s.alpha(t);
  const double inv = 1.0 / std::sqrt(alpha);
  const double eps_coef = (1.0 - alpha) / std::sqrt(1.0 - s.alpha_bar(t));
  const double sigma = s.sigma(t);
  ImageTensor out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv * (x_t[i] - eps_coef * eps_hat[i]) + sigma * z[i];
  }
  return out;
}

ImageTensor oracle_eps(const NoiseSchedule& s, const ImageTensor& x_t, int t, const ImageTensor& x0) {
  check_step(s, t, "oracle_eps");
  require_same_shape(x_t, x0, "oracle_eps");
  const double abar = s.alpha_bar(t);
  return axpby(1.0 / std::sqrt(1.0 - abar), x_t, -std::sqrt(abar) / std::sqrt(1.0 - abar), x0);
}

}  // namespace freqguide
