#include <gtest/gtest.h>

#include <cmath>

#include "freqguide/corpus.hpp"
#include "freqguide/degradations.hpp"
#include "freqguide/wavelet.hpp"
#include "test_support.hpp"

using namespace freqguide;
using namespace freqguide::testing;

namespace {

double high_band_energy(const ImageTensor& x) {
  const auto n = subband_sq_norms(dwt2(x));
  return n[1] + n[2] + n[3];
}

DegradationSpec spec_of(const std::string& blur, double noise = 0.0, std::uint64_t seed = 0) {
  DegradationSpec s;
  s.stages = DegradationSpec::parse_blur(blur);
  s.noise_sigma = noise;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(GaussianKernel, NearDeltaForTinySigma) {
  EXPECT_GT(gaussian_kernel(0.1, 21)(10, 10), 0.999);
}

TEST(GaussianKernel, RotationSymmetricAndNormalized) {
  for (double sigma : {0.5, 1.7, 3.0, 6.0}) {
    const BlurKernel k = gaussian_kernel(sigma, 21);
    double asym = 0.0;
    for (std::size_t r = 0; r < 21; ++r) {
      for (std::size_t c = 0; c < 21; ++c) asym = std::max(asym, std::abs(k(r, c) - k(c, 20 - r)));
    }
    EXPECT_LT(asym, 1e-12);
    EXPECT_NEAR(k.weights().sum(), 1.0, 1e-9);
  }
}

TEST(GaussianKernel, RejectsBadArguments) {
  EXPECT_THROW(gaussian_kernel(0.0, 21), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(1.0, 20), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(1.0, 1), std::invalid_argument);
}

TEST(MotionKernel, ReproducibleAndValid) {
  Rng a(11), b(11);
  const BlurKernel ka = motion_kernel(a, 0.5, 21), kb = motion_kernel(b, 0.5, 21);
  EXPECT_EQ(ka.weights().w, kb.weights().w);
  EXPECT_TRUE(BlurKernel::is_valid(ka.weights()));
}

TEST(MotionKernel, SupportWithinRegressionRange) {
  const Rng root(12);
  for (std::size_t i = 0; i < 100; ++i) {
    Rng rng = root.substream("motion", i);
    const BlurKernel k = motion_kernel(rng, 0.5, 21);
    EXPECT_TRUE(BlurKernel::is_valid(k.weights()));
    std::size_t support = 0;
    for (double v : k.weights().w) support += v > 1e-4 ? 1 : 0;
    EXPECT_GE(support, 5u) << "draw " << i;
    EXPECT_LE(support, 21u * 21u / 2u) << "draw " << i;
  }
}

TEST(MotionKernel, IntensityBounds) {
  Rng rng(13);
  EXPECT_THROW(motion_kernel(rng, 0.0, 21), std::invalid_argument);
  EXPECT_THROW(motion_kernel(rng, 1.5, 21), std::invalid_argument);
  EXPECT_NO_THROW(motion_kernel(rng, 1.0, 21));
}

TEST(DegradationSpec, ParseAndFormat) {
  for (const std::string text : {"none", "gaussian:3", "motion:0.5", "turbulence:1.5:1", "motion:0.5+gaussian:1"}) {
    EXPECT_EQ(spec_of(text).blur_string(), text);
  }
  EXPECT_THROW(DegradationSpec::parse_blur("gaussian"), std::invalid_argument);
  EXPECT_THROW(spec_of("gaussian:-1").validate(), std::invalid_argument);
  EXPECT_THROW(spec_of("motion:2").validate(), std::invalid_argument);
  EXPECT_THROW(DegradationSpec::parse_blur("defocus:2"), std::invalid_argument);
  EXPECT_THROW(DegradationSpec::parse_blur(""), std::invalid_argument);
  DegradationSpec bad = spec_of("gaussian:1", -0.1);
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ApplyDegradation, DeltaNoNoiseIsExact) {
  const ImageTensor x = random_uniform(1, Shape{3, 16, 16});
  Rng rng(2);
  const Degraded d = apply_degradation(x, spec_of("none"), rng);
  EXPECT_EQ(max_abs_diff(d.y, x), 0.0);
  EXPECT_EQ(d.k_true(d.k_true.side() / 2, d.k_true.side() / 2), 1.0);
}

TEST(ApplyDegradation, NoiseLevel) {
  const ImageTensor x = random_uniform(3, Shape{1, 64, 64});
  Rng rng(4);
  const Degraded d = apply_degradation(x, spec_of("none", 10.0 / 255.0), rng);
  const ImageTensor r = d.y - x;
  double mean = 0.0;
  for (double v : r.values()) mean += v;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r.values()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(r.size()));
  EXPECT_NEAR(sd / (10.0 / 255.0), 1.0, 0.05);
}

TEST(ApplyDegradation, ConstantImageStaysConstant) {
  const ImageTensor x(Shape{3, 32, 32}, 0.42);
  for (const std::string blur : {"gaussian:3", "motion:0.8", "gaussian:1+motion:0.3", "turbulence:2:0"}) {
    Rng rng(5);
    const Degraded d = apply_degradation(x, spec_of(blur, 0.0, 9), rng);
    EXPECT_LT(max_abs_diff(d.y, x), 1e-12) << blur;
    EXPECT_TRUE(BlurKernel::is_valid(d.k_true.weights())) << blur;
  }
}

TEST(ApplyDegradation, DeterministicGivenSpecAndSeed) {
  const ImageTensor x = random_uniform(6, Shape{3, 32, 32});
  for (const std::string blur : {"motion:0.5", "turbulence:1.5:1"}) {
    Rng r1(7), r2(7);
    const Degraded a = apply_degradation(x, spec_of(blur, 0.05, 21), r1);
    const Degraded b = apply_degradation(x, spec_of(blur, 0.05, 21), r2);
    EXPECT_EQ(max_abs_diff(a.y, b.y), 0.0);
    EXPECT_EQ(a.k_true.weights().w, b.k_true.weights().w);
  }
}

TEST(ApplyDegradation, KernelSeedControlsKernel) {
  const ImageTensor x = random_uniform(8, Shape{1, 32, 32});
  Rng r1(1), r2(1);
  const Degraded a = apply_degradation(x, spec_of("motion:0.5", 0.0, 1), r1);
  const Degraded b = apply_degradation(x, spec_of("motion:0.5", 0.0, 2), r2);
  EXPECT_NE(a.k_true.weights().w, b.k_true.weights().w);
}

TEST(ApplyDegradation, GaussianBlurReducesHighFrequencies) {
  CorpusOptions opts;
  const auto corpus = synth_corpus(3, opts);
  for (double sigma : {1.0, 3.0}) {
    std::size_t reduced = 0;
    for (const CorpusEntry& e : corpus) {
      Rng rng(0);
      const Degraded d = apply_degradation(e.image, spec_of("gaussian:" + std::to_string(sigma)), rng);
      reduced += high_band_energy(d.y) <= high_band_energy(e.image) ? 1 : 0;
    }
    EXPECT_EQ(reduced, corpus.size()) << "sigma " << sigma;
  }
}

TEST(ComposeKernels, DeltaIsNeutral) {
  const BlurKernel g = gaussian_kernel(1.5, 11);
  EXPECT_LT(max_abs_diff(compose_kernels(g, BlurKernel::delta(5), 11).to_tensor(), g.to_tensor()), 1e-15);
  const BlurKernel c = compose_kernels(gaussian_kernel(1.0, 11), gaussian_kernel(1.0, 11), 21);
  EXPECT_NEAR(c(10, 10), gaussian_kernel(std::sqrt(2.0), 21)(10, 10), 1e-3);
}

TEST(Warp, ZeroFieldIsIdentity) {
  const ImageTensor x = random_uniform(9, Shape{3, 12, 10});
  EXPECT_EQ(max_abs_diff(warp_bilinear(x, ImageTensor(Shape{2, 12, 10})), x), 0.0);
  Rng rng(10);
  EXPECT_EQ(reduce_sq_norm(tilt_field(rng, 12, 10, 0.0)), 0.0);
  const ImageTensor f = tilt_field(rng, 32, 32, 1.5);
  EXPECT_NEAR(std::sqrt(reduce_sq_norm(f) / (32.0 * 32.0)), 1.5, 1e-9);
}

TEST(Warp, IntegerShift) {
  const ImageTensor x = random_uniform(11, Shape{1, 6, 6});
  ImageTensor d(Shape{2, 6, 6});
  for (std::size_t i = 0; i < 36; ++i) d[36 + i] = 1.0;  // dx = +1
  const ImageTensor w = warp_bilinear(x, d);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c + 1 < 6; ++c) EXPECT_DOUBLE_EQ(w.at(0, r, c), x.at(0, r, c + 1));
    EXPECT_DOUBLE_EQ(w.at(0, r, 5), x.at(0, r, 5));
  }
}
