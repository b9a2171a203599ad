#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/rng.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// One synthetic RGB image in [0, 1]: a smooth colour gradient overlaid
/// with oriented sinusoidal textures and anti-aliased disks and convex
/// polygons, so every image carries detail in all Haar subbands.
ImageTensor synth_image(Rng& rng, std::size_t height = 32, std::size_t width = 32);

struct CorpusEntry {
  std::string id;
  std::string split;  // "train", "val" or "test"
  ImageTensor image;
};

struct CorpusOptions {
  std::size_t count = 512;
  std::size_t height = 32;
  std::size_t width = 32;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
};

/// Image i is drawn from substream ("corpus_image", i); the split is a
/// seeded shuffle, so the corpus depends only on the seed and options.
std::vector<CorpusEntry> synth_corpus(std::uint64_t seed, const CorpusOptions& opts);

/// Random training kernel for the kernel prior: a motion kernel with
/// intensity in [0.1, 1] or a Gaussian with sigma in [0.5, 4], equally likely.
BlurKernel random_training_kernel(Rng& rng, std::size_t side);

}  // namespace freqguide
