#pragma once

#include <vector>

#include "freqguide/tensor.hpp"

namespace freqguide {

/// Per-step DDPM tables for t = 1..T (1-based accessors).
///
/// A schedule may be a strided sub-schedule of a longer training schedule;
/// `model_step(t)` is then the training-schedule index the denoiser was
/// conditioned on for sampling step t.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_.at(t - 1); }
  double alpha(int t) const { return alpha_.at(t - 1); }
  double alpha_bar(int t) const { return alpha_bar_.at(t - 1); }
  /// sqrt(beta_t) for t > 1; 0 at t = 1 (the final step is deterministic).
  double sigma(int t) const { return sigma_.at(t - 1); }
  int model_step(int t) const { return model_step_.at(t - 1); }

  /// Parameters of the training schedule this one was derived from.
  int train_steps() const { return train_steps_; }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

  friend NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);
  friend NoiseSchedule respace(const NoiseSchedule& base, int steps);

 private:
  void fill_from_betas(std::vector<double> betas);

  std::vector<double> beta_, alpha_, alpha_bar_, sigma_;
  std::vector<int> model_step_;
  int train_steps_ = 0;
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
};

/// Linear beta from beta_start to beta_end over `steps` steps.
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

/// Sub-schedule visiting `steps` indices of `base`, always including 1 and
/// base.steps(). Strides are nondecreasing (short strides first), so the
/// derived betas stay monotone. alpha_bar is re-accumulated from the derived
/// alphas so alpha_bar[t] == alpha_bar[t-1] * alpha[t] holds exactly.
NoiseSchedule respace(const NoiseSchedule& base, int steps);

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
ImageTensor q_sample(const NoiseSchedule& s, const ImageTensor& x0, int t, const ImageTensor& eps);

/// Clean estimate (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t); inverts q_sample exactly.
ImageTensor tweedie_x0(const NoiseSchedule& s, const ImageTensor& x_t, int t,
                       const ImageTensor& eps_hat);

/// One reverse transition:
/// (x_t - (1 - alpha_t) / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t) + sigma_t z.
/// z must be all zero at t = 1.
ImageTensor ancestral_step(const NoiseSchedule& s, const ImageTensor& x_t, int t,
                           const ImageTensor& eps_hat, const ImageTensor& z);

/// Noise that q_sample would have needed to produce x_t from x0. Used as a
/// perfect denoiser in tests and diagnostics.
ImageTensor oracle_eps(const NoiseSchedule& s, const ImageTensor& x_t, int t, const ImageTensor& x0);

}  // namespace freqguide
