#include <gtest/gtest.h>

#include <cmath>

#include "freqguide/conv.hpp"
#include "freqguide/rng.hpp"
#include "freqguide/tensor.hpp"
#include "test_support.hpp"

using namespace freqguide;
using freqguide::testing::random_tensor;

TEST(ReduceSqNorm, Examples) {
  EXPECT_EQ(reduce_sq_norm(ImageTensor(Shape{1, 3, 3})), 0.0);
  EXPECT_EQ(reduce_sq_norm(ImageTensor(Shape{1, 2, 2}, {1, 2, 3, 4})), 30.0);
  const ImageTensor x = random_tensor(1, Shape{2, 5, 5});
  EXPECT_EQ(reduce_sq_norm(x), reduce_sq_norm(-1.0 * x));
}

TEST(Tensor, ShapeMismatchRejected) {
  ImageTensor a(Shape{1, 2, 2}), b(Shape{1, 2, 3});
  EXPECT_THROW(a += b, std::invalid_argument);
  EXPECT_THROW(require_same_shape(a, b, "test"), std::invalid_argument);
  EXPECT_THROW(ImageTensor(Shape{1, 2, 2}, std::vector<double>(3)), std::invalid_argument);
}

TEST(Tensor, RequireFiniteFlagsNan) {
  ImageTensor a(Shape{1, 2, 2});
  a[3] = std::nan("");
  EXPECT_FALSE(a.all_finite());
  EXPECT_THROW(require_finite(a, "probe"), std::runtime_error);
}

TEST(Rng, SameLabelIsBitIdentical) {
  const Rng root(42);
  Rng a = root.substream("noise", 3), b = root.substream("noise", 3);
  const ImageTensor x = gaussian_noise(a, Shape{1, 4, 4});
  const ImageTensor y = gaussian_noise(b, Shape{1, 4, 4});
  EXPECT_EQ(max_abs_diff(x, y), 0.0);
}

TEST(Rng, SubstreamIndependentOfParentConsumption) {
  Rng root(9);
  const Rng before = root.substream("x", 1);
  root.normal();
  root.next_u64();
  Rng a = before, b = root.substream("x", 1);
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, GaussianMoments) {
  Rng rng(2024);
  const ImageTensor x = gaussian_noise(rng, Shape{1, 1000, 1000});
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(Rng, DifferentLabelsUncorrelated) {
  const Rng root(5);
  Rng a = root.substream("alpha"), b = root.substream("beta");
  const std::size_t n = 100000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.normal(), y = b.normal();
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double dn = static_cast<double>(n);
  const double cov = sab / dn - sa / dn * sb / dn;
  const double corr = cov / std::sqrt((saa / dn - sa * sa / dn / dn) * (sbb / dn - sb * sb / dn / dn));
  EXPECT_LT(std::abs(corr), 0.01);
}

TEST(Rng, EmptyShapeRejected) {
  Rng rng(1);
  EXPECT_THROW(gaussian_noise(rng, Shape{0, 4, 4}), std::invalid_argument);
}

TEST(Conv2d, OneByOneIdentity) {
  const ImageTensor x = random_tensor(3, Shape{3, 7, 6});
  for (Boundary b : {Boundary::kReflect, Boundary::kZero, Boundary::kCircular}) {
    EXPECT_EQ(max_abs_diff(conv2d(x, Kernel2D(1, 1, 1.0), b), x), 0.0);
  }
}

TEST(Conv2d, DeltaKernelIsExactIdentity) {
  const ImageTensor x = random_tensor(4, Shape{2, 9, 9});
  for (Boundary b : {Boundary::kReflect, Boundary::kZero, Boundary::kCircular}) {
    EXPECT_EQ(max_abs_diff(conv2d(x, Kernel2D::delta(5), b), x), 0.0);
  }
}

TEST(Conv2d, ReflectPreservesConstants) {
  const ImageTensor x(Shape{3, 8, 8}, 0.37);
  Rng rng(11);
  Kernel2D k(5, 5);
  double s = 0.0;
  for (double& v : k.w) s += (v = rng.uniform());
  for (double& v : k.w) v /= s;
  EXPECT_LT(max_abs_diff(conv2d(x, k, Boundary::kReflect), x), 1e-15);
}

TEST(Conv2d, BoxOnRampCentreIsMean) {
  const ImageTensor x(Shape{1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const ImageTensor y = conv2d(x, Kernel2D(3, 3, 1.0 / 9.0), Boundary::kZero);
  EXPECT_NEAR(y.at(0, 1, 1), 5.0, 1e-15);
}

TEST(Conv2d, ConvolutionFlipsKernel) {
  ImageTensor x(Shape{1, 3, 3});
  x.at(0, 1, 1) = 1.0;
  Kernel2D k(3, 3);
  k(0, 0) = 1.0;
  // Convolving an impulse reproduces the kernel; correlation mirrors it.
  EXPECT_EQ(conv2d(x, k, Boundary::kZero).at(0, 0, 0), 1.0);
  EXPECT_EQ(conv2d(x, k, Boundary::kZero, ConvMode::kCorrelation).at(0, 2, 2), 1.0);
}

TEST(Conv2d, LinearityInFloat32Tolerance) {
  const ImageTensor u = random_tensor(5, Shape{3, 16, 16}), v = random_tensor(6, Shape{3, 16, 16});
  const Kernel2D k(5, 5, 0.04);
  const ImageTensor lhs = conv2d(axpby(0.7, u, -1.3, v), k, Boundary::kReflect);
  const ImageTensor rhs = axpby(0.7, conv2d(u, k, Boundary::kReflect), -1.3, conv2d(v, k, Boundary::kReflect));
  EXPECT_LT(freqguide::testing::rel_l2(lhs, rhs), 1e-6);
}

TEST(Conv2d, AdjointDotProduct) {
  const ImageTensor x = random_tensor(7, Shape{2, 11, 10}), g = random_tensor(8, Shape{2, 11, 10});
  Kernel2D k(5, 3);
  Rng rng(1);
  for (double& v : k.w) v = rng.normal();
  for (Boundary b : {Boundary::kReflect, Boundary::kZero, Boundary::kCircular}) {
    for (ConvMode m : {ConvMode::kConvolution, ConvMode::kCorrelation}) {
      const double lhs = dot(conv2d(x, k, b, m), g);
      const double rhs = dot(x, conv2d_adjoint(g, k, b, m));
      EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs) + 1e-12);
    }
  }
}

TEST(Conv2d, KernelGradientMatchesDefinition) {
  const ImageTensor x = random_tensor(9, Shape{3, 9, 9}), g = random_tensor(10, Shape{3, 9, 9});
  const Kernel2D gk = conv2d_kernel_grad(x, g, 3, 3, Boundary::kReflect);
  for (std::size_t i = 0; i < 9; ++i) {
    Kernel2D e(3, 3);
    e.w[i] = 1.0;
    EXPECT_NEAR(gk.w[i], dot(conv2d(x, e, Boundary::kReflect), g), 1e-10);
  }
}

TEST(Conv2d, RejectsBadInputs) {
  const ImageTensor x(Shape{1, 4, 4});
  EXPECT_THROW(conv2d(x, Kernel2D(2, 2, 0.25), Boundary::kReflect), std::invalid_argument);
  EXPECT_THROW(conv2d(ImageTensor(), Kernel2D(1, 1, 1.0), Boundary::kReflect), std::invalid_argument);
  EXPECT_THROW(conv2d(x, Kernel2D(5, 5, 0.04), Boundary::kReflect), std::invalid_argument);
  EXPECT_THROW(parse_boundary("mirror"), std::invalid_argument);
}
