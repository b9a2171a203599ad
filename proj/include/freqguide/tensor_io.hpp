#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "freqguide/blur_kernel.hpp"
#include "freqguide/tensor.hpp"

namespace freqguide {

/// TensorFile layout: "FAGT", u8 version (1), u8 ndim, ndim x u32 dims,
/// then float32 payload in C order. All integers and floats little-endian.
inline constexpr std::uint8_t kTensorFileVersion = 1;

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

void write_tensor_file(const std::filesystem::path& path, const RawTensor& t);
RawTensor read_tensor_file(const std::filesystem::path& path);

/// Images are stored with dims [C, H, W].
void save_image_tensor(const std::filesystem::path& path, const ImageTensor& x);
/// Accepts [H, W] (one channel) or [C, H, W].
ImageTensor load_image_tensor(const std::filesystem::path& path);

/// Kernels are stored with dims [side, side].
void save_kernel(const std::filesystem::path& path, const BlurKernel& k);
BlurKernel load_kernel(const std::filesystem::path& path);

/// Rounds through float32 exactly as a save/load cycle would.
ImageTensor quantize_f32(const ImageTensor& x);

}  // namespace freqguide
