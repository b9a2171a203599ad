#include "freqguide/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace freqguide {
namespace {

// 3x5 glyphs, one row per 3-bit value (MSB = left column).
struct Glyph {
  char ch;
  std::uint8_t rows[5];
};

constexpr Glyph kFont[] = {
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
    {'+', {0, 2, 7, 2, 0}}, {'=', {0, 7, 0, 7, 0}}, {':', {0, 2, 0, 2, 0}}, {'A', {2, 5, 7, 5, 5}},
    {'B', {6, 5, 6, 5, 6}}, {'C', {7, 4, 4, 4, 7}}, {'D', {6, 5, 5, 5, 6}}, {'E', {7, 4, 6, 4, 7}},
    {'F', {7, 4, 6, 4, 4}}, {'G', {7, 4, 5, 5, 7}}, {'H', {5, 5, 7, 5, 5}}, {'I', {7, 2, 2, 2, 7}},
    {'J', {1, 1, 1, 5, 7}}, {'K', {5, 5, 6, 5, 5}}, {'L', {4, 4, 4, 4, 7}}, {'M', {5, 7, 7, 5, 5}},
    {'N', {6, 5, 5, 5, 5}}, {'O', {7, 5, 5, 5, 7}}, {'P', {7, 5, 7, 4, 4}}, {'Q', {7, 5, 5, 7, 1}},
    {'R', {7, 5, 6, 5, 5}}, {'S', {7, 4, 7, 1, 7}}, {'T', {7, 2, 2, 2, 2}}, {'U', {5, 5, 5, 5, 7}},
    {'V', {5, 5, 5, 5, 2}}, {'W', {5, 5, 7, 7, 5}}, {'X', {5, 5, 2, 5, 5}}, {'Y', {5, 5, 2, 2, 2}},
    {'Z', {7, 1, 2, 4, 7}},
};

const Glyph* find_glyph(char ch) {
  const char up = (ch >= 'a' && ch <= 'z') ? static_cast<char>(ch - 'a' + 'A') : ch;
  for (const Glyph& g : kFont) {
    if (g.ch == up) return &g;
  }
  return nullptr;
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

constexpr Canvas::Rgb kBlack{0, 0, 0};
constexpr Canvas::Rgb kGrey{200, 200, 200};
constexpr Canvas::Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}};

struct PlotFrame {
  long left = 40, top = 24, right, bottom;
  double lo, hi;
  long y_of(double v) const {
    return bottom - static_cast<long>(std::lround((v - lo) / (hi - lo) * static_cast<double>(bottom - top)));
  }
};

PlotFrame draw_frame(Canvas& cv, const std::string& title, double lo, double hi) {
  PlotFrame f;
  f.right = static_cast<long>(cv.width()) - 12;
  f.bottom = static_cast<long>(cv.height()) - 30;
  const double pad = std::max(1e-6, 0.1 * (hi - lo));
  f.lo = lo - pad;
  f.hi = hi + pad;
  cv.text(f.left, 6, title, kBlack, 2);
  cv.line(f.left, f.top, f.left, f.bottom, kBlack);
  cv.line(f.left, f.bottom, f.right, f.bottom, kBlack);
  for (int i = 0; i <= 4; ++i) {
    const double v = f.lo + (f.hi - f.lo) * i / 4.0;
    const long y = f.y_of(v);
    cv.line(f.left + 1, y, f.right, y, kGrey);
    cv.text(2, y - 2, short_number(v), kBlack);
  }
  return f;
}

}  // namespace

Canvas::Canvas(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), px_(width * height * 3) {
  for (std::size_t i = 0; i < width * height; ++i) std::copy(fill.begin(), fill.end(), px_.begin() + 3 * i);
}

void Canvas::set(long x, long y, Rgb c) {
  if (x < 0 || y < 0 || x >= static_cast<long>(width_) || y >= static_cast<long>(height_)) return;
  std::copy(c.begin(), c.end(), px_.begin() + 3 * (static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)));
}

void Canvas::fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
  for (long y = std::min(y0, y1); y <= std::max(y0, y1); ++y) {
    for (long x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }
}

void Canvas::line(long x0, long y0, long x1, long y1, Rgb c) {
  const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::text(long x, long y, const std::string& s, Rgb c, int scale) {
  for (char ch : s) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int r = 0; r < 5; ++r) {
        for (int q = 0; q < 3; ++q) {
          if (g->rows[r] & (4 >> q)) fill_rect(x + q * scale, y + r * scale, x + (q + 1) * scale - 1, y + (r + 1) * scale - 1, c);
        }
      }
    }
    x += 4 * scale;
  }
}

std::uint8_t quantize_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void Canvas::blit(const ImageTensor& img, long x, long y, int scale) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw std::invalid_argument("Canvas::blit: expected 1 or 3 channels, got " + img.shape().str());
  }
  for (std::size_t i = 0; i < img.height(); ++i) {
    for (std::size_t j = 0; j < img.width(); ++j) {
      Rgb c;
      for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = quantize_u8(img.at(img.channels() == 3 ? ch : 0, i, j));
      const long px = x + static_cast<long>(j) * scale, py = y + static_cast<long>(i) * scale;
      fill_rect(px, py, px + scale - 1, py + scale - 1, c);
    }
  }
}

void Canvas::save_png(const std::filesystem::path& path) const {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open PNG for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height_; ++r) {
    png_write_row(png, const_cast<png_bytep>(px_.data() + r * width_ * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png(const std::filesystem::path& path, const ImageTensor& img) {
  Canvas cv(img.width(), img.height());
  cv.blit(img, 0, 0);
  cv.save_png(path);
}

ImageTensor kernel_preview(const BlurKernel& k) {
  ImageTensor t = k.to_tensor();
  const double peak = *std::max_element(t.values().begin(), t.values().end());
  if (peak > 0.0) t *= 1.0 / peak;
  return t;
}

void write_panel_row(const std::filesystem::path& path, const std::vector<ImageTensor>& panels,
                     std::size_t height) {
  constexpr long kGap = 4;
  std::vector<int> scales;
  long width = kGap;
  for (const ImageTensor& p : panels) {
    const int s = std::max<int>(1, static_cast<int>(height / p.height()));
    scales.push_back(s);
    width += static_cast<long>(p.width()) * s + kGap;
  }
  Canvas cv(static_cast<std::size_t>(width), height + 2 * kGap, {64, 64, 64});
  long x = kGap;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const long h = static_cast<long>(panels[i].height()) * scales[i];
    cv.blit(panels[i], x, kGap + (static_cast<long>(height) - h) / 2, scales[i]);
    x += static_cast<long>(panels[i].width()) * scales[i] + kGap;
  }
  cv.save_png(path);
}

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& categories, const std::vector<double>& values) {
  if (categories.size() != values.size() || values.empty()) {
    throw std::invalid_argument("bar chart: need one value per category");
  }
  Canvas cv(std::max<std::size_t>(320, 70 * values.size() + 60), 240);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const PlotFrame f = draw_frame(cv, title, *mn, *mx);
  const long slot = (f.right - f.left) / static_cast<long>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long x0 = f.left + static_cast<long>(i) * slot + slot / 5;
    const long x1 = f.left + static_cast<long>(i + 1) * slot - slot / 5;
    const long y = f.y_of(values[i]);
    cv.fill_rect(x0, y, x1, f.bottom - 1, kPalette[0]);
    cv.text(x0, y - 8, short_number(values[i]), kBlack);
    cv.text(x0, f.bottom + 6, categories[i], kBlack);
  }
  cv.save_png(path);
}

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::vector<std::string>& categories, const std::vector<Series>& series) {
  if (series.empty() || categories.empty()) throw std::invalid_argument("line chart: no data");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Series& s : series) {
    if (s.values.size() != categories.size()) throw std::invalid_argument("line chart: ragged series");
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  Canvas cv(std::max<std::size_t>(320, 60 * categories.size() + 60), 240);
  const PlotFrame f = draw_frame(cv, title, lo, hi);
  const long slot = (f.right - f.left) / static_cast<long>(categories.size());
  auto x_of = [&](std::size_t i) { return f.left + slot / 2 + static_cast<long>(i) * slot; };
  for (std::size_t i = 0; i < categories.size(); ++i) cv.text(x_of(i) - 6, f.bottom + 6, categories[i], kBlack);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Canvas::Rgb c = kPalette[si % std::size(kPalette)];
    const auto& v = series[si].values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const long x = x_of(i), y = f.y_of(v[i]);
      cv.fill_rect(x - 2, y - 2, x + 2, y + 2, c);
      if (i + 1 < v.size()) cv.line(x, y, x_of(i + 1), f.y_of(v[i + 1]), c);
    }
    cv.text(f.right - 60, f.top + 4 + 8 * static_cast<long>(si), series[si].name, c);
  }
  cv.save_png(path);
}

}  // namespace freqguide
