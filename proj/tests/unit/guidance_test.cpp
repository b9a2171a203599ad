#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "freqguide/guidance.hpp"
#include "freqguide/wavelet.hpp"
#include "test_support.hpp"

using namespace freqguide;
using namespace freqguide::testing;

TEST(FreqLoss, Examples) {
  const ImageTensor y(Shape{1, 2, 2}, {1, 2, 3, 4});
  const ImageTensor zero(y.shape());
  EXPECT_EQ(freq_loss(y, y, GuidanceConfig::with_lambda(5.0)).total, 0.0);
  EXPECT_EQ(freq_loss(y, zero, GuidanceConfig::with_lambda(0.0)).total, reduce_sq_norm(y));
  const LossParts p = freq_loss(y, zero, GuidanceConfig::with_lambda(1.0));
  EXPECT_EQ(p.total, 50.0);
  EXPECT_EQ(p.spatial, 30.0);
  EXPECT_EQ(p.lh, 16.0);
  EXPECT_EQ(p.hl, 4.0);
  EXPECT_EQ(p.hh, 0.0);
}

TEST(FreqLoss, ShapeErrors) {
  const GuidanceConfig cfg;
  EXPECT_THROW(freq_loss(ImageTensor(Shape{1, 4, 4}), ImageTensor(Shape{1, 4, 2}), cfg), std::invalid_argument);
  EXPECT_THROW(freq_loss(ImageTensor(Shape{1, 3, 4}), ImageTensor(Shape{1, 3, 4}), cfg), std::invalid_argument);
}

TEST(FreqLoss, ZeroLambdaIsSpatial) {
  const ImageTensor y = random_tensor(1, Shape{3, 8, 8}), yh = random_tensor(2, Shape{3, 8, 8});
  const double total = freq_loss(y, yh, GuidanceConfig::with_lambda(0.0)).total;
  EXPECT_LT(std::abs(total - reduce_sq_norm(y - yh)) / total, 1e-10);
}

TEST(FreqLoss, SubbandOfResidualMatchesResidualOfSubbands) {
  const ImageTensor y = random_tensor(3, Shape{3, 16, 16}), yh = random_tensor(4, Shape{3, 16, 16});
  const LossParts p = freq_loss(y, yh, GuidanceConfig::with_lambda(1.0));
  const auto n = subband_sq_norms(dwt2(y - yh));
  EXPECT_LT(std::abs(p.lh - n[1]) / n[1], 1e-6);
  EXPECT_LT(std::abs(p.hl - n[2]) / n[2], 1e-6);
  EXPECT_LT(std::abs(p.hh - n[3]) / n[3], 1e-6);
}

TEST(FreqLoss, ParsevalCrossCheck) {
  const ImageTensor y = random_tensor(5, Shape{3, 16, 16}), yh = random_tensor(6, Shape{3, 16, 16});
  const LossParts p = freq_loss(y, yh, GuidanceConfig::with_lambda(1.0));
  const double ll = subband_sq_norms(dwt2(y) - dwt2(yh))[0];
  const double freq = ll + p.lh + p.hl + p.hh;
  EXPECT_LT(std::abs(freq - 4.0 * p.spatial) / (4.0 * p.spatial), 1e-6);
}

TEST(FreqLoss, MonotoneInEachLambda) {
  const ImageTensor y = random_tensor(7, Shape{1, 8, 8}), yh = random_tensor(8, Shape{1, 8, 8});
  for (int band = 0; band < 3; ++band) {
    double prev = -1.0;
    for (double lambda : {0.0, 0.01, 0.1, 0.5, 1.0, 5.0}) {
      GuidanceConfig cfg = GuidanceConfig::with_lambda(0.2);
      (band == 0 ? cfg.lambda_lh : band == 1 ? cfg.lambda_hl : cfg.lambda_hh) = lambda;
      const double total = freq_loss(y, yh, cfg).total;
      EXPECT_GE(total, prev);
      prev = total;
    }
  }
}

TEST(FreqLoss, GradientWrtYhat) {
  const ImageTensor y = random_tensor(9, Shape{2, 6, 8}), yh = random_tensor(10, Shape{2, 6, 8});
  GuidanceConfig cfg;
  cfg.lambda_lh = 0.3;
  cfg.lambda_hl = 1.7;
  cfg.lambda_hh = 0.05;
  const ImageTensor g = freq_loss_grad_yhat(y, yh, cfg);
  const ImageTensor fd = numeric_gradient([&](const ImageTensor& v) { return freq_loss(y, v, cfg).total; }, yh);
  EXPECT_LT(rel_l2(g, fd), 1e-8);
}

TEST(GuidanceConfig, Validation) {
  GuidanceConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.lambda_lh, 0.1);
  EXPECT_EQ(cfg.lambda_hl, 0.1);
  EXPECT_EQ(cfg.lambda_hh, 0.1);
  cfg.lambda_hl = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = GuidanceConfig{};
  cfg.zeta_kernel = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = GuidanceConfig{};
  cfg.step_norm_eps = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(GuidedUpdate, Examples) {
  const ImageTensor s = random_tensor(11, Shape{1, 4, 4});
  EXPECT_EQ(max_abs_diff(guided_update(s, ImageTensor(s.shape()), 3.0, 1.0, 1e-8), s), 0.0);
  const ImageTensor g(s.shape(), 1.0);
  const ImageTensor d1 = guided_update(s, g, 4.0, 0.5, 1e-8) - s;
  const ImageTensor d2 = guided_update(s, g, 4.0, 1.0, 1e-8) - s;
  EXPECT_LT(max_abs_diff(2.0 * d1, d2), 1e-15);
  const ImageTensor moved = guided_update(s, g, 1.0, 0.5, 0.0) - s;
  for (double v : moved.values()) EXPECT_NEAR(v, -0.5, 1e-15);
  EXPECT_THROW(guided_update(s, g, 1.0, 0.0, 1e-8), std::invalid_argument);
}

namespace {

struct Fixture {
  NoiseSchedule schedule = make_schedule(1000, 1e-4, 0.02);
  std::shared_ptr<Denoiser> image = tiny_unet(3, 16, {6}, 21);
  std::shared_ptr<Denoiser> kernel = tiny_unet(1, 16, {4}, 22);
  ImageTensor y = random_uniform(23, Shape{3, 16, 16});

  GuidanceProblem blind() const {
    GuidanceProblem p;
    p.y = &y;
    p.schedule = &schedule;
    p.image_denoiser = image.get();
    p.kernel_denoiser = kernel.get();
    p.kernel_side = 5;
    return p;
  }
  GuidanceProblem known(const BlurKernel& k) const {
    GuidanceProblem p = blind();
    p.kernel_denoiser = nullptr;
    p.known_kernel = k;
    return p;
  }
};

}  // namespace

TEST(FreqLossGrad, MatchesFiniteDifferencesBlind) {
  Fixture f;
  const GuidanceConfig cfg = GuidanceConfig::with_lambda(0.5);
  const GuidanceProblem p = f.blind();
  for (int t : {30, 600}) {
    const ImageTensor sx = random_tensor(30 + t, Shape{3, 16, 16});
    const ImageTensor sk = random_tensor(31 + t, Shape{1, 16, 16});
    const GuidanceGradient g = freq_loss_grad(sx, sk, t, p, cfg);
    const ImageTensor fd_x =
        numeric_gradient([&](const ImageTensor& v) { return guidance_loss(v, sk, t, p, cfg).total; }, sx);
    const ImageTensor fd_k =
        numeric_gradient([&](const ImageTensor& v) { return guidance_loss(sx, v, t, p, cfg).total; }, sk);
    EXPECT_LT(rel_l2(g.grad_x, fd_x), 1e-3) << "t = " << t;
    EXPECT_LT(rel_l2(g.grad_k, fd_k), 1e-3) << "t = " << t;
    EXPECT_EQ(g.loss.total, guidance_loss(sx, sk, t, p, cfg).total);
  }
}

TEST(FreqLossGrad, MatchesFiniteDifferencesKnownKernel) {
  Fixture f;
  Kernel2D w(5, 5);
  Rng rng(40);
  for (double& v : w.w) v = rng.uniform();
  const double s = w.sum();
  for (double& v : w.w) v /= s;
  const GuidanceProblem p = f.known(BlurKernel(w));
  const GuidanceConfig cfg;
  const ImageTensor sx = random_tensor(41, Shape{3, 16, 16});
  const GuidanceGradient g = freq_loss_grad(sx, ImageTensor(), 250, p, cfg);
  EXPECT_TRUE(g.grad_k.empty());
  const ImageTensor fd =
      numeric_gradient([&](const ImageTensor& v) { return guidance_loss(v, ImageTensor(), 250, p, cfg).total; }, sx);
  EXPECT_LT(rel_l2(g.grad_x, fd), 1e-3);
}

TEST(FreqLossGrad, ZeroAtConsistentObservation) {
  Fixture f;
  const ImageTensor sx = random_tensor(50, Shape{3, 16, 16});
  const ImageTensor sk = random_tensor(51, Shape{1, 16, 16});
  GuidanceProblem p = f.blind();
  const GuidanceGradient first = freq_loss_grad(sx, sk, 100, p, GuidanceConfig{});
  ImageTensor y = conv2d(first.x0_pixels, first.k0.weights(), Boundary::kReflect);
  p.y = &y;
  const GuidanceGradient g = freq_loss_grad(sx, sk, 100, p, GuidanceConfig{});
  EXPECT_EQ(g.loss.total, 0.0);
  EXPECT_LT(std::sqrt(reduce_sq_norm(g.grad_x)), 1e-8);
  EXPECT_LT(std::sqrt(reduce_sq_norm(g.grad_k)), 1e-8);
}

TEST(FreqLossGrad, ZeroLambdaEqualsSpatialPath) {
  Fixture f;
  const GuidanceProblem p = f.blind();
  const ImageTensor sx = random_tensor(60, Shape{3, 16, 16});
  const ImageTensor sk = random_tensor(61, Shape{1, 16, 16});
  const GuidanceConfig cfg = GuidanceConfig::with_lambda(0.0);
  const GuidanceGradient a = freq_loss_grad(sx, sk, 420, p, cfg);
  const GuidanceGradient b = spatial_loss_grad(sx, sk, 420, p, cfg);
  EXPECT_LT(rel_l2(a.grad_x, b.grad_x), 1e-10);
  EXPECT_LT(rel_l2(a.grad_k, b.grad_k), 1e-10);
}

// With an input-independent eps_theta the denoiser Jacobian vanishes, so
// the through-denoiser and Tweedie-only gradients must coincide.
TEST(FreqLossGrad, ModesAgreeForConstantDenoiser) {
  Fixture f;
  const ConstantDenoiser img(random_tensor(70, Shape{3, 16, 16}, 0.3));
  const ConstantDenoiser ker(random_tensor(71, Shape{1, 16, 16}, 0.3));
  GuidanceProblem p = f.blind();
  p.image_denoiser = &img;
  p.kernel_denoiser = &ker;
  const ImageTensor sx = random_tensor(72, Shape{3, 16, 16});
  const ImageTensor sk = random_tensor(73, Shape{1, 16, 16});
  GuidanceConfig through, cheap;
  cheap.grad_through_denoiser = false;
  const GuidanceGradient a = freq_loss_grad(sx, sk, 300, p, through);
  const GuidanceGradient b = freq_loss_grad(sx, sk, 300, p, cheap);
  EXPECT_LT(rel_l2(a.grad_x, b.grad_x), 1e-10);
  EXPECT_LT(rel_l2(a.grad_k, b.grad_k), 1e-10);
}

TEST(FreqLossGrad, CheapModeDiffersForRealNetwork) {
  Fixture f;
  const GuidanceProblem p = f.blind();
  const ImageTensor sx = random_tensor(80, Shape{3, 16, 16});
  const ImageTensor sk = random_tensor(81, Shape{1, 16, 16});
  GuidanceConfig cheap;
  cheap.grad_through_denoiser = false;
  EXPECT_GT(rel_l2(freq_loss_grad(sx, sk, 700, p, GuidanceConfig{}).grad_x,
                   freq_loss_grad(sx, sk, 700, p, cheap).grad_x),
            1e-6);
}

TEST(FreqLossGrad, NonFiniteGradientAborts) {
  Fixture f;
  const ConstantDenoiser bad(ImageTensor(Shape{3, 16, 16}, std::numeric_limits<double>::quiet_NaN()));
  GuidanceProblem p = f.known(BlurKernel::delta(3));
  p.image_denoiser = &bad;
  try {
    freq_loss_grad(random_tensor(90, Shape{3, 16, 16}), ImageTensor(), 17, p, GuidanceConfig{});
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("t = 17"), std::string::npos);
  }
}

TEST(FreqLossGrad, RejectsIncompleteProblems) {
  Fixture f;
  GuidanceProblem p = f.blind();
  p.kernel_denoiser = nullptr;
  EXPECT_THROW(freq_loss_grad(ImageTensor(Shape{3, 16, 16}), ImageTensor(), 5, p, GuidanceConfig{}),
               std::invalid_argument);
}
