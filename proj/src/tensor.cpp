#include "freqguide/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freqguide {

std::string Shape::str() const {
  return "[" + std::to_string(channels) + ", " + std::to_string(height) + ", " +
         std::to_string(width) + "]";
}

ImageTensor::ImageTensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

ImageTensor::ImageTensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw std::invalid_argument("ImageTensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_.str());
  }
}

std::span<double> ImageTensor::channel(std::size_t c) {
  return std::span<double>(data_).subspan(c * shape_.plane(), shape_.plane());
}

std::span<const double> ImageTensor::channel(std::size_t c) const {
  return std::span<const double>(data_).subspan(c * shape_.plane(), shape_.plane());
}

bool ImageTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageTensor& ImageTensor::operator+=(const ImageTensor& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ImageTensor& ImageTensor::operator-=(const ImageTensor& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ImageTensor& ImageTensor::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

ImageTensor operator+(ImageTensor a, const ImageTensor& b) { return a += b; }
ImageTensor operator-(ImageTensor a, const ImageTensor& b) { return a -= b; }
ImageTensor operator*(double scale, ImageTensor a) { return a *= scale; }
ImageTensor operator*(ImageTensor a, double scale) { return a *= scale; }

ImageTensor axpby(double a, const ImageTensor& u, double b, const ImageTensor& v) {
  require_same_shape(u, v, "axpby");
  ImageTensor out(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = a * u[i] + b * v[i];
  return out;
}

double reduce_sq_norm(const ImageTensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  return acc;
}

double dot(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ImageTensor clamp(const ImageTensor& x, double lo, double hi) {
  ImageTensor out = x;
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  return out;
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
  }
}

void require_finite(const ImageTensor& x, const char* what) {
  if (!x.all_finite()) throw std::runtime_error(std::string(what) + ": non-finite value");
}

}  // namespace freqguide
