#pragma once

#include <array>

#include "freqguide/tensor.hpp"

namespace freqguide {

/// Single-level Haar decomposition of a [C, H, W] image into four
/// [C, H/2, W/2] subbands.
struct SubbandSet {
  ImageTensor ll, lh, hl, hh;
  Shape source_shape;

  const ImageTensor& band(std::size_t i) const;
  ImageTensor& band(std::size_t i);
};

enum class Subband : std::size_t { kLL = 0, kLH = 1, kHL = 2, kHH = 3 };

/// The four unnormalized 2x2 analysis filters (entries +-1), row-major,
/// in LL, LH, HL, HH order. Each has squared norm 4 and they are mutually
/// orthogonal, so the transform scales energy by exactly 4.
inline constexpr std::array<std::array<int, 4>, 4> kHaarFilters = {{
    {{1, 1, 1, 1}},
    {{-1, -1, 1, 1}},
    {{-1, 1, -1, 1}},
    {{1, -1, -1, 1}},
}};

/// Stride-2 correlation with kHaarFilters. Rejects odd H or W.
SubbandSet dwt2(const ImageTensor& x);

/// Exact inverse of dwt2 (1/4 of the adjoint).
ImageTensor idwt2(const SubbandSet& s);

/// Adjoint of dwt2: maps subband cotangents back to image space.
/// Equals 4 * idwt2(s) up to rounding.
ImageTensor dwt2_adjoint(const SubbandSet& s);

/// Squared Frobenius norms in LL, LH, HL, HH order.
std::array<double, 4> subband_sq_norms(const SubbandSet& s);

SubbandSet operator-(const SubbandSet& a, const SubbandSet& b);

}  // namespace freqguide
