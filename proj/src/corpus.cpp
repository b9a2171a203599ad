#include "freqguide/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "freqguide/degradations.hpp"

namespace freqguide {
namespace {

constexpr int kSuper = 4;  // supersampling factor for shape coverage

using Colour = std::array<double, 3>;

Colour random_colour(Rng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

void blend(ImageTensor& img, std::size_t i, std::size_t j, const Colour& c, double alpha) {
  for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, i, j) = (1.0 - alpha) * img.at(ch, i, j) + alpha * c[ch];
}

template <typename Inside>
void paint_shape(ImageTensor& img, const Colour& c, double opacity, Inside inside) {
  for (std::size_t i = 0; i < img.height(); ++i) {
    for (std::size_t j = 0; j < img.width(); ++j) {
      int hits = 0;
      for (int a = 0; a < kSuper; ++a) {
        for (int b = 0; b < kSuper; ++b) {
          const double y = static_cast<double>(i) + (a + 0.5) / kSuper;
          const double x = static_cast<double>(j) + (b + 0.5) / kSuper;
          hits += inside(y, x) ? 1 : 0;
        }
      }
      if (hits > 0) blend(img, i, j, c, opacity * hits / (kSuper * kSuper));
    }
  }
}

void add_disk(ImageTensor& img, Rng& rng) {
  const double h = static_cast<double>(img.height()), w = static_cast<double>(img.width());
  const double cy = rng.uniform(0.1 * h, 0.9 * h), cx = rng.uniform(0.1 * w, 0.9 * w);
  const double r = rng.uniform(0.08, 0.3) * std::min(h, w);
  const Colour c = random_colour(rng);
  paint_shape(img, c, rng.uniform(0.6, 1.0),
              [=](double y, double x) { return (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r; });
}

void add_polygon(ImageTensor& img, Rng& rng) {
  const double h = static_cast<double>(img.height()), w = static_cast<double>(img.width());
  const double cy = rng.uniform(0.15 * h, 0.85 * h), cx = rng.uniform(0.15 * w, 0.85 * w);
  const double r = rng.uniform(0.12, 0.4) * std::min(h, w);
  const int n = 3 + static_cast<int>(rng.below(4));
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<std::array<double, 2>> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double a = phase + 2.0 * std::numbers::pi * k / n;
    const double rk = r * rng.uniform(0.7, 1.0);
    v[static_cast<std::size_t>(k)] = {cy + rk * std::sin(a), cx + rk * std::cos(a)};
  }
  const Colour c = random_colour(rng);
  // Vertices are in angular order, so the polygon is convex and counter-clockwise in (x, y).
  paint_shape(img, c, rng.uniform(0.6, 1.0), [&](double y, double x) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto& p = v[k];
      const auto& q = v[(k + 1) % v.size()];
      if ((q[1] - p[1]) * (y - p[0]) - (q[0] - p[0]) * (x - p[1]) < 0.0) return false;
    }
    return true;
  });
}

void add_texture(ImageTensor& img, Rng& rng) {
  const double period = rng.uniform(2.2, 8.0);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amp = rng.uniform(0.05, 0.2);
  const Colour tint = random_colour(rng);
  const double ky = 2.0 * std::numbers::pi / period * std::sin(theta);
  const double kx = 2.0 * std::numbers::pi / period * std::cos(theta);
  for (std::size_t i = 0; i < img.height(); ++i) {
    for (std::size_t j = 0; j < img.width(); ++j) {
      const double s = amp * std::sin(ky * static_cast<double>(i) + kx * static_cast<double>(j) + phase);
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, i, j) += s * (0.5 + tint[ch]);
    }
  }
}

}  // namespace

ImageTensor synth_image(Rng& rng, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw std::invalid_argument("synth_image: empty size");
  ImageTensor img(Shape{3, height, width});
  const Colour c0 = random_colour(rng), c1 = random_colour(rng);
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double dy = std::sin(theta), dx = std::cos(theta);
  const double span = std::abs(dy) * static_cast<double>(height) + std::abs(dx) * static_cast<double>(width);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const double py = static_cast<double>(i) - 0.5 * static_cast<double>(height);
      const double px = static_cast<double>(j) - 0.5 * static_cast<double>(width);
      const double s = std::clamp(0.5 + (py * dy + px * dx) / span, 0.0, 1.0);
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, i, j) = (1.0 - s) * c0[ch] + s * c1[ch];
    }
  }
  if (rng.uniform() < 0.7) add_texture(img, rng);
  const int shapes = 1 + static_cast<int>(rng.below(4));
  for (int k = 0; k < shapes; ++k) {
    if (rng.uniform() < 0.5) {
      add_disk(img, rng);
    } else {
      add_polygon(img, rng);
    }
  }
  if (rng.uniform() < 0.3) add_texture(img, rng);
  return clamp(img, 0.0, 1.0);
}

std::vector<CorpusEntry> synth_corpus(std::uint64_t seed, const CorpusOptions& opts) {
  if (opts.count == 0) throw std::invalid_argument("synth_corpus: count must be > 0");
  if (!(opts.val_fraction >= 0.0 && opts.test_fraction >= 0.0 && opts.val_fraction + opts.test_fraction < 1.0)) {
    throw std::invalid_argument("synth_corpus: split fractions must be >= 0 and sum below 1");
  }
  const Rng root(seed);
  std::vector<CorpusEntry> corpus(opts.count);
  for (std::size_t i = 0; i < opts.count; ++i) {
    Rng r = root.substream("corpus_image", i);
    char id[16];
    std::snprintf(id, sizeof(id), "img%04zu", i);
    corpus[i].id = id;
    corpus[i].image = synth_image(r, opts.height, opts.width);
  }
  std::vector<std::size_t> order(opts.count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle = root.substream("corpus_split");
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
  const auto n_test = static_cast<std::size_t>(std::lround(opts.test_fraction * static_cast<double>(opts.count)));
  const auto n_val = static_cast<std::size_t>(std::lround(opts.val_fraction * static_cast<double>(opts.count)));
  for (std::size_t k = 0; k < order.size(); ++k) {
    corpus[order[k]].split = k < n_test ? "test" : (k < n_test + n_val ? "val" : "train");
  }
  return corpus;
}

BlurKernel random_training_kernel(Rng& rng, std::size_t side) {
  if (rng.uniform() < 0.5) return motion_kernel(rng, rng.uniform(0.1, 1.0), side);
  return gaussian_kernel(rng.uniform(0.5, 4.0), side);
}

}  // namespace freqguide
