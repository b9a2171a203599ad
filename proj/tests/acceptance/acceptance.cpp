// Acceptance run: prints one PASS/FAIL line per criterion 1..10.
//
// Usage: acceptance [--workdir DIR] [N ...]
// With no criterion numbers every criterion runs. Trained priors and the
// corpus are cached in the work directory, keyed by the resolved config.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/config.hpp"
#include "freqguide/corpus.hpp"
#include "freqguide/diffusion.hpp"
#include "freqguide/guidance.hpp"
#include "freqguide/harness.hpp"
#include "freqguide/metrics.hpp"
#include "freqguide/rng.hpp"
#include "freqguide/tensor_io.hpp"
#include "freqguide/training.hpp"
#include "freqguide/unet.hpp"
#include "freqguide/wavelet.hpp"

#ifndef ACCEPTANCE_WORKDIR
#define ACCEPTANCE_WORKDIR "acceptance_work"
#endif

using namespace freqguide;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel_l2(const ImageTensor& a, const ImageTensor& b) {
  const double denom = std::sqrt(reduce_sq_norm(b));
  return std::sqrt(reduce_sq_norm(a - b)) / (denom > 0.0 ? denom : 1.0);
}

ImageTensor uniform_tensor(Rng& rng, Shape shape) {
  ImageTensor t(shape);
  for (double& v : t.values()) v = rng.uniform();
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- 1

Outcome wavelet_exactness() {
  const auto start = Clock::now();
  Rng rng(101);
  double max_err = 0.0, max_parseval = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t c = rng.uniform() < 0.5 ? 1 : 3;
    const std::size_t h = 2 * (1 + static_cast<std::size_t>(rng.uniform() * 32.0));
    const std::size_t w = 2 * (1 + static_cast<std::size_t>(rng.uniform() * 32.0));
    const ImageTensor x = quantize_f32(uniform_tensor(rng, Shape{c, h, w}));
    const SubbandSet s = dwt2(x);
    max_err = std::max(max_err, max_abs_diff(quantize_f32(idwt2(s)), x));
    const auto n = subband_sq_norms(s);
    const double energy = 4.0 * reduce_sq_norm(x);
    max_parseval = std::max(max_parseval, std::abs(n[0] + n[1] + n[2] + n[3] - energy) / energy);
  }
  ImageTensor block(Shape{1, 2, 2});
  block[0] = 1, block[1] = 2, block[2] = 3, block[3] = 4;
  const SubbandSet b = dwt2(block);
  const bool exact = b.ll[0] == 10.0 && b.lh[0] == 4.0 && b.hl[0] == 2.0 && b.hh[0] == 0.0;
  const double secs = seconds_since(start);
  return {max_err < 1e-5 && max_parseval < 1e-6 && exact && secs < 5.0,
          "roundtrip " + fmt("%.2e", max_err) + ", parseval " + fmt("%.2e", max_parseval) +
              ", block (10,4,2,0) " + (exact ? "exact" : "WRONG") + ", " + fmt("%.2f s", secs)};
}

// ---------------------------------------------------------------- 2

Outcome loss_identities() {
  const auto start = Clock::now();
  Rng rng(202);
  double zero_err = 0.0, band_err = 0.0, four_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ImageTensor y = uniform_tensor(rng, Shape{3, 32, 32});
    const ImageTensor yh = uniform_tensor(rng, Shape{3, 32, 32});
    const double spatial = reduce_sq_norm(y - yh);

    zero_err = std::max(zero_err, std::abs(freq_loss(y, yh, GuidanceConfig::with_lambda(0.0)).total - spatial) / spatial);

    const SubbandSet of_residual = dwt2(y - yh);
    const SubbandSet residual_of = dwt2(y) - dwt2(yh);
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
      num += reduce_sq_norm(of_residual.band(b) - residual_of.band(b));
      den += reduce_sq_norm(of_residual.band(b));
    }
    band_err = std::max(band_err, std::sqrt(num / den));

    const LossParts l = freq_loss(y, yh, GuidanceConfig::with_lambda(1.0));
    const double ll = reduce_sq_norm(residual_of.ll);
    four_err = std::max(four_err, std::abs(l.lh + l.hl + l.hh + ll - 4.0 * l.spatial) / (4.0 * l.spatial));
  }
  const double secs = seconds_since(start);
  return {zero_err < 1e-10 && band_err < 1e-6 && four_err < 1e-6 && secs < 5.0,
          "lambda=0 " + fmt("%.2e", zero_err) + ", subband linearity " + fmt("%.2e", band_err) +
              ", four-band energy " + fmt("%.2e", four_err) + ", " + fmt("%.2f s", secs)};
}

// ---------------------------------------------------------------- 3

std::shared_ptr<UNetDenoiser<double>> small_net(std::size_t channels, std::size_t width, std::uint64_t seed) {
  UNetArch arch;
  arch.channels = channels;
  arch.height = arch.width = 16;
  arch.widths = {width};  // one level: three convolution layers
  arch.time_dim = 8;
  arch.embed_dim = 16;
  UNet<double> net(arch);
  Rng rng(seed);
  net.init(rng);
  for (double& p : net.params()) p += 0.05 * rng.normal();
  return std::make_shared<UNetDenoiser<double>>(std::move(net));
}

ImageTensor central_differences(const std::function<double(const ImageTensor&)>& f, const ImageTensor& x, double h) {
  ImageTensor g(x.shape());
  ImageTensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = probe[i];
    probe[i] = keep + h;
    const double up = f(probe);
    probe[i] = keep - h;
    const double down = f(probe);
    probe[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  const NoiseSchedule schedule = make_schedule(1000, 1e-4, 0.02);
  const auto image_net = small_net(3, 6, 301);
  const auto kernel_net = small_net(1, 4, 302);
  Rng rng(303);
  const ImageTensor y = uniform_tensor(rng, Shape{3, 16, 16});
  GuidanceProblem p;
  p.y = &y;
  p.schedule = &schedule;
  p.image_denoiser = image_net.get();
  p.kernel_denoiser = kernel_net.get();
  p.kernel_side = 5;
  const GuidanceConfig cfg = GuidanceConfig::with_lambda(0.1);

  double worst = 0.0;
  int worst_t = 0;
  for (int pair = 0; pair < 10; ++pair) {
    const int t = 1 + static_cast<int>(rng.uniform() * 999.0);
    const ImageTensor sx = gaussian_noise(rng, Shape{3, 16, 16});
    const ImageTensor sk = gaussian_noise(rng, Shape{1, 16, 16});
    const GuidanceGradient g = freq_loss_grad(sx, sk, t, p, cfg);
    // The clean estimate scales states by 1/sqrt(abar_t); scale the probe to match.
    const double h = 1e-3 * std::sqrt(schedule.alpha_bar(t));
    const ImageTensor fx =
        central_differences([&](const ImageTensor& v) { return guidance_loss(v, sk, t, p, cfg).total; }, sx, h);
    const ImageTensor fk =
        central_differences([&](const ImageTensor& v) { return guidance_loss(sx, v, t, p, cfg).total; }, sk, h);
    const double err = std::max(rel_l2(g.grad_x, fx), rel_l2(g.grad_k, fk));
    if (err > worst) worst = err, worst_t = t;
  }
  const double secs = seconds_since(start);
  return {worst < 1e-3 && secs < 120.0, "worst relative L2 error " + fmt("%.2e", worst) + " (t = " +
                                             std::to_string(worst_t) + ") over 10 pairs, " + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------- 4

Outcome diffusion_sanity(const ExperimentConfig& base) {
  const auto start = Clock::now();
  const NoiseSchedule full = base.train_schedule();
  Rng rng(401);
  double roundtrip = 0.0;
  for (int t = 1; t <= full.steps(); ++t) {
    const ImageTensor x0 = uniform_tensor(rng, Shape{3, 8, 8});
    const ImageTensor eps = gaussian_noise(rng, x0.shape());
    roundtrip = std::max(roundtrip, max_abs_diff(tweedie_x0(full, q_sample(full, x0, t, eps), t, eps), x0));
  }

  CorpusOptions opts;
  opts.count = 64;
  const auto corpus = synth_corpus(base.seed, opts);
  std::vector<ImageTensor> train;
  for (const CorpusEntry& e : corpus) {
    if (e.split == "train") train.push_back(to_chain_domain(e.image));
  }
  const ImageTensor& target = train.front();
  const NoiseSchedule sampled = base.sample_schedule();
  ImageTensor x = gaussian_noise(rng, target.shape());
  for (int t = sampled.steps(); t >= 1; --t) {
    const ImageTensor z = t > 1 ? gaussian_noise(rng, x.shape()) : ImageTensor(x.shape());
    x = ancestral_step(sampled, x, t, oracle_eps(sampled, x, t, target), z);
  }
  const double oracle_db =
      psnr_or_cap(psnr(clamp(to_pixel_domain(x), 0.0, 1.0), to_pixel_domain(target)));

  UNetArch arch;
  arch.widths = {16, 32};
  arch.time_dim = 16;
  arch.embed_dim = 32;
  TrainParams params;
  params.steps = 2000;
  params.batch = 8;
  params.warmup = 50;
  const TrainResult trained = train_denoiser(Rng(402), train, full, arch, params);
  constexpr std::size_t kWindow = 50;
  const auto window_mean = [&](std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end - kWindow; i < end; ++i) s += trained.losses[i];
    return s / kWindow;
  };
  const double initial = window_mean(kWindow);
  long halved_at = -1;
  for (std::size_t end = kWindow; end <= trained.losses.size(); ++end) {
    if (window_mean(end) <= 0.5 * initial) {
      halved_at = static_cast<long>(end);
      break;
    }
  }
  const double secs = seconds_since(start);
  return {roundtrip < 1e-5 && oracle_db > 30.0 && halved_at > 0 && secs < 900.0,
          "q_sample/tweedie " + fmt("%.2e", roundtrip) + ", oracle reverse pass " + fmt("%.2f dB", oracle_db) +
              ", running loss halved at step " + std::to_string(halved_at) + " (initial " + fmt("%.4f", initial) +
              "), " + fmt("%.0f s", secs)};
}

// ---------------------------------------------------------------- shared setup for 5..10

class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) {
    cfg_.denoiser.image_checkpoint = (root_ / "priors" / "image.ckpt").string();
    cfg_.denoiser.kernel_checkpoint = (root_ / "priors" / "kernel.ckpt").string();
    cfg_.run.previews = false;
  }

  const ExperimentConfig& config() const { return cfg_; }
  const fs::path& root() const { return root_; }

  /// Corpus and both priors, rebuilt only when the config they came from changed.
  void prepare() {
    const std::string stamp = cfg_.to_text();
    const fs::path stamp_file = root_ / "priors" / "config.stamp";
    const bool fresh = fs::exists(stamp_file) && slurp(stamp_file) == stamp &&
                       fs::exists(cfg_.denoiser.image_checkpoint) && fs::exists(cfg_.denoiser.kernel_checkpoint) &&
                       fs::exists(corpus() / "manifest.csv");
    if (fresh) {
      std::cout << "using cached corpus and priors in " << root_ << std::endl;
      return;
    }
    fs::remove_all(root_ / "priors");
    fs::remove_all(corpus());
    fs::create_directories(root_ / "priors");
    auto t0 = Clock::now();
    cmd_synth_data(cfg_, corpus());
    cmd_train_denoiser(cfg_, corpus(), cfg_.denoiser.image_checkpoint);
    std::cout << "trained image prior in " << fmt("%.0f s", seconds_since(t0)) << std::endl;
    t0 = Clock::now();
    cmd_train_kernel_prior(cfg_, cfg_.denoiser.kernel_checkpoint);
    std::cout << "trained kernel prior in " << fmt("%.0f s", seconds_since(t0)) << std::endl;
    std::ofstream(stamp_file) << stamp;
  }

  fs::path corpus() const { return root_ / "corpus"; }

  /// Degraded sets live under <root>/<tag>/; `tag` separates the first run from the rerun.
  fs::path degrade(const std::string& tag, const std::string& blur, double noise) const {
    ExperimentConfig c = cfg_;
    c.degradation.blur = blur;
    c.degradation.noise_sigma = noise;
    const fs::path out = root_ / tag / ("inputs_" + blur);
    fs::remove_all(out);
    cmd_degrade(c, corpus(), out);
    return out;
  }

 private:
  fs::path root_;
  ExperimentConfig cfg_;
};

const RunSummary* find_label(const std::vector<RunSummary>& runs, const std::string& label) {
  for (const RunSummary& r : runs) {
    if (r.label == label) return &r;
  }
  return nullptr;
}

/// Everything criteria 5 to 8 need, produced under one tag.
struct TrendRuns {
  std::vector<RunSummary> lambda, bands;
  RunSummary motion;
  double lambda_secs = 0.0, bands_secs = 0.0, motion_secs = 0.0;

  std::vector<const RunSummary*> all() const {
    std::vector<const RunSummary*> out;
    for (const auto& r : lambda) out.push_back(&r);
    for (const auto& r : bands) out.push_back(&r);
    out.push_back(&motion);
    return out;
  }
};

TrendRuns run_trends(const Workspace& ws, const std::string& tag, bool with_bands, bool with_motion) {
  TrendRuns out;
  const fs::path dir = ws.root() / tag;
  const fs::path gauss = ws.degrade(tag, "gaussian:3", 0.0);
  auto t0 = Clock::now();
  fs::remove_all(dir / "lambda");
  out.lambda = cmd_ablate_lambda(ws.config(), gauss, dir / "lambda");
  out.lambda_secs = seconds_since(t0);
  if (with_bands) {
    t0 = Clock::now();
    fs::remove_all(dir / "subbands");
    out.bands = cmd_ablate_subbands(ws.config(), gauss, dir / "subbands");
    out.bands_secs = seconds_since(t0);
  }
  if (with_motion) {
    const fs::path motion = ws.degrade(tag, "motion:0.5", 10.0 / 255.0);
    t0 = Clock::now();
    ExperimentConfig c = ws.config();
    c.run.label = "motion_noise";
    fs::remove_all(dir / "motion");
    out.motion = cmd_restore(c, motion, dir / "motion");
    out.motion_secs = seconds_since(t0);
  }
  return out;
}

Outcome trend_lambda_small(const TrendRuns& r) {
  const RunSummary* l0 = find_label(r.lambda, "lambda_0");
  const RunSummary* l01 = find_label(r.lambda, "lambda_0.1");
  if (!l0 || !l01) return {false, "lambda sweep is missing runs"};
  const bool enough = l0->metrics.count >= 20 && l01->metrics.count >= 20;
  return {enough && l01->metrics.psnr_db >= l0->metrics.psnr_db && r.lambda_secs < 1800.0,
          "PSNR lambda=0.1 " + fmt("%.3f dB", l01->metrics.psnr_db) + " vs lambda=0 " +
              fmt("%.3f dB", l0->metrics.psnr_db) + " (n = " + std::to_string(l0->metrics.count) +
              ", degraded input " + fmt("%.3f dB", l0->input_psnr_db) + "), sweep " +
              fmt("%.0f s", r.lambda_secs)};
}

Outcome trend_lambda_large(const TrendRuns& r) {
  const RunSummary* l01 = find_label(r.lambda, "lambda_0.1");
  const RunSummary* l5 = find_label(r.lambda, "lambda_5");
  if (!l01 || !l5) return {false, "lambda sweep is missing runs"};
  return {l5->metrics.psnr_db <= l01->metrics.psnr_db,
          "PSNR lambda=5 " + fmt("%.3f dB", l5->metrics.psnr_db) + " vs lambda=0.1 " +
              fmt("%.3f dB", l01->metrics.psnr_db)};
}

Outcome trend_subbands(const TrendRuns& r) {
  const RunSummary* l2 = find_label(r.bands, "L2");
  const RunSummary* h3 = find_label(r.bands, "L2+H3");
  if (!l2 || !h3) return {false, "subband ablation is missing runs"};
  return {l2->metrics.count >= 20 && h3->metrics.psnr_db >= l2->metrics.psnr_db && r.bands_secs < 1800.0,
          "PSNR L2+H3 " + fmt("%.3f dB", h3->metrics.psnr_db) + " vs L2 " + fmt("%.3f dB", l2->metrics.psnr_db) +
              ", ablation " + fmt("%.0f s", r.bands_secs)};
}

Outcome multiple_degradations(const TrendRuns& r) {
  const RunSummary& m = r.motion;
  return {m.metrics.count >= 20 && m.traces_finite && m.metrics.psnr_db > m.input_psnr_db && r.motion_secs < 1800.0,
          "restored " + fmt("%.3f dB", m.metrics.psnr_db) + " vs degraded " + fmt("%.3f dB", m.input_psnr_db) +
              " (n = " + std::to_string(m.metrics.count) + ", traces " + (m.traces_finite ? "finite" : "NON-FINITE") +
              "), " + fmt("%.0f s", r.motion_secs)};
}

Outcome reproducibility(const Workspace& ws) {
  std::size_t compared = 0, differing = 0;
  const fs::path a = ws.root() / "run1", b = ws.root() / "run2";
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name != "metrics.csv" && name != "ablation.csv") continue;
    const fs::path twin = b / fs::relative(entry.path(), a);
    ++compared;
    if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
      ++differing;
      std::cout << "  differs: " << fs::relative(entry.path(), a).string() << std::endl;
    }
  }
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " metrics files compared, " + std::to_string(differing) + " differ"};
}

Outcome kernel_validity(const std::vector<const TrendRuns*>& runs) {
  std::size_t n_runs = 0, invalid = 0;
  for (const TrendRuns* r : runs) {
    for (const RunSummary* s : r->all()) {
      if (s->metrics.count == 0) continue;
      ++n_runs;
      invalid += s->kernels_valid ? 0 : 1;
    }
  }
  return {n_runs > 0 && invalid == 0,
          std::to_string(n_runs) + " runs checked, " + std::to_string(invalid) + " with an invalid kernel"};
}

void report(int n, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = ACCEPTANCE_WORKDIR;
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else {
      try {
        const int n = std::stoi(arg);
        if (n < 1 || n > 10) throw std::out_of_range(arg);
        wanted.insert(n);
      } catch (const std::exception&) {
        std::cerr << "usage: acceptance [--workdir DIR] [criterion ...]\n";
        return 1;
      }
    }
  }
  const auto want = [&](int n) { return wanted.empty() || wanted.count(n) > 0; };

  bool all_pass = true;
  const auto run = [&](int n, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    report(n, o);
  };

  try {
    Workspace ws(workdir);
    if (want(1)) run(1, wavelet_exactness);
    if (want(2)) run(2, loss_identities);
    if (want(3)) run(3, gradient_fidelity);
    if (want(4)) run(4, [&] { return diffusion_sanity(ws.config()); });

    const bool trends = want(5) || want(6) || want(7) || want(8) || want(9) || want(10);
    if (trends) {
      fs::create_directories(workdir);
      ws.prepare();
      const bool bands = want(7) || want(9) || want(10);
      const bool motion = want(8) || want(9) || want(10);
      const TrendRuns first = run_trends(ws, "run1", bands, motion);
      if (want(5)) run(5, [&] { return trend_lambda_small(first); });
      if (want(6)) run(6, [&] { return trend_lambda_large(first); });
      if (want(7)) run(7, [&] { return trend_subbands(first); });
      if (want(8)) run(8, [&] { return multiple_degradations(first); });
      std::vector<const TrendRuns*> runs{&first};
      TrendRuns second;
      if (want(9)) {
        second = run_trends(ws, "run2", bands, motion);
        runs.push_back(&second);
        run(9, [&] { return reproducibility(ws); });
      }
      if (want(10)) run(10, [&] { return kernel_validity(runs); });
    }
  } catch (const std::exception& e) {
    std::cout << "FAIL setup: " << e.what() << std::endl;
    return 2;
  }
  return all_pass ? 0 : 1;
}
