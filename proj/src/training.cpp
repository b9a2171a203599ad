#include "freqguide/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace freqguide {
namespace {

void flip_horizontal(ImageTensor& x) {
  const std::size_t w = x.width();
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < x.height(); ++y) {
      for (std::size_t i = 0; i < w / 2; ++i) std::swap(x.at(c, y, i), x.at(c, y, w - 1 - i));
    }
  }
}

double learning_rate(const TrainParams& p, long step) {
  if (step < p.warmup) return p.lr * static_cast<double>(step + 1) / static_cast<double>(p.warmup);
  const double span = std::max<long>(1, p.steps - p.warmup);
  const double progress = std::min(1.0, static_cast<double>(step - p.warmup) / span);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return p.lr * (p.final_lr_fraction + (1.0 - p.final_lr_fraction) * cosine);
}

}  // namespace

void to_json(nlohmann::json& j, const TrainParams& p) {
  j = nlohmann::json{{"optimizer", "adam"},
                     {"steps", p.steps},
                     {"batch", p.batch},
                     {"lr", p.lr},
                     {"beta1", p.beta1},
                     {"beta2", p.beta2},
                     {"adam_eps", p.adam_eps},
                     {"grad_clip", p.grad_clip},
                     {"warmup", p.warmup},
                     {"final_lr_fraction", p.final_lr_fraction},
                     {"hflip", p.hflip}};
}

TrainResult train_denoiser(const Rng& rng, const ExampleSource& source, const NoiseSchedule& schedule,
                           const UNetArch& arch, const TrainParams& params,
                           const std::function<void(const TrainLogEntry&)>& log) {
  if (params.batch == 0 || params.steps < 0) throw std::invalid_argument("train_denoiser: bad batch/steps");
  const Shape shape{arch.channels, arch.height, arch.width};
  UNet<float> net(arch);
  Rng init_rng = rng.substream("init");
  net.init(init_rng);

  const std::size_t n_params = net.num_params();
  const std::size_t sample = shape.size();
  const std::size_t batch = params.batch;
  std::vector<float> grad(n_params), m(n_params, 0.0f), v(n_params, 0.0f);
  std::vector<float> input(batch * sample), target(batch * sample), output(batch * sample);
  std::vector<int> steps(batch);
  UNet<float>::Tape tape;
  TrainResult result;
  result.losses.reserve(static_cast<std::size_t>(params.steps));

  for (long step = 0; step < params.steps; ++step) {
    Rng step_rng = rng.substream("batch", static_cast<std::uint64_t>(step));
    for (std::size_t b = 0; b < batch; ++b) {
      ImageTensor x0 = source(step_rng);
      if (x0.shape() != shape) {
        throw std::invalid_argument("train_denoiser: example shape " + x0.shape().str() +
                                    " does not match model input " + shape.str());
      }
      if (params.hflip && step_rng.uniform() < 0.5) flip_horizontal(x0);
      const int t = 1 + static_cast<int>(step_rng.below(static_cast<std::uint64_t>(schedule.steps())));
      const ImageTensor eps = gaussian_noise(step_rng, shape);
      const ImageTensor xt = q_sample(schedule, x0, t, eps);
      steps[b] = schedule.model_step(t);
      for (std::size_t i = 0; i < sample; ++i) {
        input[b * sample + i] = static_cast<float>(xt[i]);
        target[b * sample + i] = static_cast<float>(eps[i]);
      }
    }
    net.forward(input, steps, output, tape);

    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch * sample);
    for (std::size_t i = 0; i < output.size(); ++i) {
      const double d = static_cast<double>(output[i]) - target[i];
      loss += d * d;
      output[i] = static_cast<float>(2.0 * d * inv_n);
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_denoiser: non-finite loss at step " + std::to_string(step) +
                               " (lr " + std::to_string(learning_rate(params, step)) + ")");
    }
    result.losses.push_back(loss);

    std::fill(grad.begin(), grad.end(), 0.0f);
    net.backward(tape, output, grad, {});

    double gnorm = 0.0;
    for (float g : grad) gnorm += static_cast<double>(g) * g;
    gnorm = std::sqrt(gnorm);
    const double clip = (params.grad_clip > 0.0 && gnorm > params.grad_clip) ? params.grad_clip / gnorm : 1.0;

    const double lr = learning_rate(params, step);
    const double bc1 = 1.0 - std::pow(params.beta1, static_cast<double>(step + 1));
    const double bc2 = 1.0 - std::pow(params.beta2, static_cast<double>(step + 1));
    auto& w = net.params();
    const float b1 = static_cast<float>(params.beta1), b2 = static_cast<float>(params.beta2);
    for (std::size_t i = 0; i < n_params; ++i) {
      const float g = static_cast<float>(grad[i] * clip);
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + params.adam_eps));
    }
    if (log) log(TrainLogEntry{step, loss, lr});
  }

  CheckpointInfo info;
  info.arch = arch;
  info.schedule_steps = schedule.train_steps();
  info.beta_start = schedule.beta_start();
  info.beta_end = schedule.beta_end();
  info.train_seed = rng.seed();
  info.train_steps = params.steps;
  info.optimizer = params;
  info.final_loss = result.losses.empty() ? 0.0 : result.losses.back();
  result.model = std::make_shared<UNetDenoiser<float>>(std::move(net), info);
  return result;
}

TrainResult train_denoiser(const Rng& rng, const std::vector<ImageTensor>& dataset,
                           const NoiseSchedule& schedule, const UNetArch& arch,
                           const TrainParams& params,
                           const std::function<void(const TrainLogEntry&)>& log) {
  if (dataset.empty()) throw std::invalid_argument("train_denoiser: empty dataset");
  for (const auto& x : dataset) {
    if (x.shape() != dataset.front().shape()) {
      throw std::invalid_argument("train_denoiser: dataset shapes are not uniform");
    }
    require_finite(x, "train_denoiser dataset");
  }
  const ExampleSource source = [&dataset](Rng& r) { return dataset[r.below(dataset.size())]; };
  return train_denoiser(rng, source, schedule, arch, params, log);
}

double heldout_loss(const Denoiser& model, const std::vector<ImageTensor>& data,
                    const NoiseSchedule& schedule, const Rng& rng, int repeats) {
  if (data.empty()) throw std::invalid_argument("heldout_loss: empty data");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int r = 0; r < repeats; ++r) {
      Rng draw = rng.substream("heldout", i * 1000003ULL + static_cast<std::uint64_t>(r));
      const int t = 1 + static_cast<int>(draw.below(static_cast<std::uint64_t>(schedule.steps())));
      const ImageTensor eps = gaussian_noise(draw, data[i].shape());
      const ImageTensor pred = model.predict(q_sample(schedule, data[i], t, eps), schedule.model_step(t));
      total += reduce_sq_norm(pred - eps);
      count += eps.size();
    }
  }
  return total / static_cast<double>(count);
}

double mean_loss(const std::vector<double>& losses, std::size_t first, std::size_t last) {
  last = std::min(last, losses.size());
  if (first >= last) throw std::invalid_argument("mean_loss: empty range");
  return std::accumulate(losses.begin() + static_cast<long>(first),
                         losses.begin() + static_cast<long>(last), 0.0) /
         static_cast<double>(last - first);
}

}  // namespace freqguide
