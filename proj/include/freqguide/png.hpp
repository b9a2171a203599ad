#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// 8-bit RGB raster.
class Canvas {
 public:
  using Rgb = std::array<std::uint8_t, 3>;

  Canvas(std::size_t width, std::size_t height, Rgb fill = {255, 255, 255});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return px_; }

  /// Ignores coordinates outside the canvas.
  void set(long x, long y, Rgb c);
  void fill_rect(long x0, long y0, long x1, long y1, Rgb c);
  void line(long x0, long y0, long x1, long y1, Rgb c);
  /// 3x5 pixel glyphs; digits, '.', '-', '+', '=', ':' and upper-case letters.
  void text(long x, long y, const std::string& s, Rgb c, int scale = 1);

  /// Draws a 1- or 3-channel image at (x, y), each pixel a `scale` square,
  /// quantized as round(clamp(v, 0, 1) * 255).
  void blit(const ImageTensor& img, long x, long y, int scale = 1);

  void save_png(const std::filesystem::path& path) const;

 private:
  std::size_t width_, height_;
  std::vector<std::uint8_t> px_;
};

std::uint8_t quantize_u8(double v);

/// Single image written as an 8-bit PNG (gray or RGB).
void write_png(const std::filesystem::path& path, const ImageTensor& img);

/// Kernel rescaled by its peak so the brightest tap is white.
ImageTensor kernel_preview(const BlurKernel& k);

/// Panels side by side, each upscaled to `height` pixels by nearest neighbour.
void write_panel_row(const std::filesystem::path& path, const std::vector<ImageTensor>& panels,
                     std::size_t height);

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Simple bar chart with one bar per category and value labels.
void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& categories, const std::vector<double>& values);

/// Line chart over evenly spaced categories.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::vector<std::string>& categories, const std::vector<Series>& series);

}  // namespace freqguide
