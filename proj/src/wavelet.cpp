#include "freqguide/wavelet.hpp"

#include <stdexcept>

namespace freqguide {
namespace {

void require_consistent(const SubbandSet& s) {
  const Shape& b = s.ll.shape();
  if (s.lh.shape() != b || s.hl.shape() != b || s.hh.shape() != b) {
    throw std::invalid_argument("idwt2: subband shapes differ (LL " + b.str() + ", LH " +
                                s.lh.shape().str() + ", HL " + s.hl.shape().str() + ", HH " +
                                s.hh.shape().str() + ")");
  }
  const Shape& src = s.source_shape;
  if (src.channels != b.channels || src.height != 2 * b.height || src.width != 2 * b.width) {
    throw std::invalid_argument("idwt2: source shape " + src.str() +
                                " inconsistent with subband shape " + b.str());
  }
}

// Block synthesis shared by the inverse and the adjoint; they differ by `scale`.
ImageTensor synthesize(const SubbandSet& s, double scale) {
  require_consistent(s);
  ImageTensor x(s.source_shape);
  const std::size_t hh = s.ll.height(), hw = s.ll.width();
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t i = 0; i < hh; ++i) {
      for (std::size_t j = 0; j < hw; ++j) {
        const double ll = s.ll.at(c, i, j), lh = s.lh.at(c, i, j);
        const double hl = s.hl.at(c, i, j), hhv = s.hh.at(c, i, j);
        x.at(c, 2 * i, 2 * j) = scale * (ll - lh - hl + hhv);
        x.at(c, 2 * i, 2 * j + 1) = scale * (ll - lh + hl - hhv);
        x.at(c, 2 * i + 1, 2 * j) = scale * (ll + lh - hl - hhv);
        x.at(c, 2 * i + 1, 2 * j + 1) = scale * (ll + lh + hl + hhv);
      }
    }
  }
  return x;
}

}  // namespace

const ImageTensor& SubbandSet::band(std::size_t i) const {
  switch (i) {
    case 0: return ll;
    case 1: return lh;
    case 2: return hl;
    case 3: return hh;
  }
  throw std::out_of_range("SubbandSet::band: index " + std::to_string(i));
}

ImageTensor& SubbandSet::band(std::size_t i) {
  return const_cast<ImageTensor&>(std::as_const(*this).band(i));
}

SubbandSet dwt2(const ImageTensor& x) {
  const Shape src = x.shape();
  if (src.height % 2 != 0 || src.width % 2 != 0 || x.empty()) {
    throw std::invalid_argument("dwt2: height and width must be even and nonzero, got " +
                                src.str() + " (odd inputs are not padded)");
  }
  const Shape half{src.channels, src.height / 2, src.width / 2};
  SubbandSet s{ImageTensor(half), ImageTensor(half), ImageTensor(half), ImageTensor(half), src};
  for (std::size_t c = 0; c < src.channels; ++c) {
    for (std::size_t i = 0; i < half.height; ++i) {
      for (std::size_t j = 0; j < half.width; ++j) {
        const double a = x.at(c, 2 * i, 2 * j);
        const double b = x.at(c, 2 * i, 2 * j + 1);
        const double cc = x.at(c, 2 * i + 1, 2 * j);
        const double d = x.at(c, 2 * i + 1, 2 * j + 1);
        s.ll.at(c, i, j) = a + b + cc + d;
        s.lh.at(c, i, j) = -a - b + cc + d;
        s.hl.at(c, i, j) = -a + b - cc + d;
        s.hh.at(c, i, j) = a - b - cc + d;
      }
    }
  }
  return s;
}

ImageTensor idwt2(const SubbandSet& s) { return synthesize(s, 0.25); }

ImageTensor dwt2_adjoint(const SubbandSet& s) { return synthesize(s, 1.0); }

std::array<double, 4> subband_sq_norms(const SubbandSet& s) {
  return {reduce_sq_norm(s.ll), reduce_sq_norm(s.lh), reduce_sq_norm(s.hl), reduce_sq_norm(s.hh)};
}

SubbandSet operator-(const SubbandSet& a, const SubbandSet& b) {
  if (a.source_shape != b.source_shape) {
    throw std::invalid_argument("SubbandSet difference: source shapes differ");
  }
  return SubbandSet{a.ll - b.ll, a.lh - b.lh, a.hl - b.hl, a.hh - b.hh, a.source_shape};
}

}  // namespace freqguide
