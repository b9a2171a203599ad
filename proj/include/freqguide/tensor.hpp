#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace freqguide {

/// [channels, height, width] extent of an image-valued tensor.
struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane() const { return height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense C-order [C, H, W] array of reals.
///
/// Storage is 64-bit so that guidance gradients can be checked against
/// finite differences; files on disk are 32-bit (see tensor_io.hpp).
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(Shape shape, double fill = 0.0);
  ImageTensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> channel(std::size_t c);
  std::span<const double> channel(std::size_t c) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  bool all_finite() const;

  ImageTensor& operator+=(const ImageTensor& other);
  ImageTensor& operator-=(const ImageTensor& other);
  ImageTensor& operator*=(double scale);

 private:
  Shape shape_;
  std::vector<double> data_;
};

ImageTensor operator+(ImageTensor a, const ImageTensor& b);
ImageTensor operator-(ImageTensor a, const ImageTensor& b);
ImageTensor operator*(double scale, ImageTensor a);
ImageTensor operator*(ImageTensor a, double scale);

/// a*u + b*v, elementwise.
ImageTensor axpby(double a, const ImageTensor& u, double b, const ImageTensor& v);

/// Sum of squared entries, accumulated in 64-bit.
double reduce_sq_norm(const ImageTensor& x);
double dot(const ImageTensor& a, const ImageTensor& b);
double max_abs_diff(const ImageTensor& a, const ImageTensor& b);

ImageTensor clamp(const ImageTensor& x, double lo, double hi);

/// Throws std::invalid_argument naming `what` if the shapes differ.
void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what);
/// Throws std::runtime_error naming `what` if any entry is NaN/Inf.
void require_finite(const ImageTensor& x, const char* what);

}  // namespace freqguide
