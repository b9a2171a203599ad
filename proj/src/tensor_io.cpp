#include "freqguide/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace freqguide {
namespace {

constexpr char kMagic[4] = {'F', 'A', 'G', 'T'};

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error("tensor file " + path.string() + ": " + what);
}

}  // namespace

void write_tensor_file(const std::filesystem::path& path, const RawTensor& t) {
  if (t.dims.empty() || t.dims.size() > 255) fail(path, "ndim must be in 1..255");
  const std::size_t count = std::accumulate(t.dims.begin(), t.dims.end(), std::size_t{1},
                                            [](std::size_t a, std::uint32_t d) { return a * d; });
  if (count != t.data.size()) fail(path, "payload size does not match dims");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  const std::uint8_t head[2] = {kTensorFileVersion, static_cast<std::uint8_t>(t.dims.size())};
  out.write(reinterpret_cast<const char*>(head), 2);
  out.write(reinterpret_cast<const char*>(t.dims.data()),
            static_cast<std::streamsize>(t.dims.size() * sizeof(std::uint32_t)));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!out) fail(path, "write failed");
}

RawTensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[4];
  std::uint8_t head[2];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) fail(path, "bad magic");
  if (!in.read(reinterpret_cast<char*>(head), 2)) fail(path, "truncated header");
  if (head[0] != kTensorFileVersion) fail(path, "unsupported version " + std::to_string(head[0]));
  RawTensor t;
  t.dims.resize(head[1]);
  if (!in.read(reinterpret_cast<char*>(t.dims.data()),
               static_cast<std::streamsize>(t.dims.size() * sizeof(std::uint32_t)))) {
    fail(path, "truncated dims");
  }
  const std::size_t count = std::accumulate(t.dims.begin(), t.dims.end(), std::size_t{1},
                                            [](std::size_t a, std::uint32_t d) { return a * d; });
  t.data.resize(count);
  if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(count * sizeof(float)))) {
    fail(path, "truncated payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(path, "trailing bytes after payload");
  return t;
}

void save_image_tensor(const std::filesystem::path& path, const ImageTensor& x) {
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(x.channels()), static_cast<std::uint32_t>(x.height()),
            static_cast<std::uint32_t>(x.width())};
  t.data.assign(x.values().begin(), x.values().end());
  write_tensor_file(path, t);
}

ImageTensor load_image_tensor(const std::filesystem::path& path) {
  RawTensor t = read_tensor_file(path);
  Shape s;
  if (t.dims.size() == 2) {
    s = Shape{1, t.dims[0], t.dims[1]};
  } else if (t.dims.size() == 3) {
    s = Shape{t.dims[0], t.dims[1], t.dims[2]};
  } else {
    fail(path, "expected 2 or 3 dims, got " + std::to_string(t.dims.size()));
  }
  ImageTensor x(s, std::vector<double>(t.data.begin(), t.data.end()));
  require_finite(x, path.string().c_str());
  return x;
}

void save_kernel(const std::filesystem::path& path, const BlurKernel& k) {
  RawTensor t;
  t.dims = {static_cast<std::uint32_t>(k.side()), static_cast<std::uint32_t>(k.side())};
  t.data.assign(k.weights().w.begin(), k.weights().w.end());
  write_tensor_file(path, t);
}

BlurKernel load_kernel(const std::filesystem::path& path) {
  const ImageTensor t = load_image_tensor(path);
  // float32 storage perturbs the mass by ~1e-8; renormalize in 64-bit.
  return project_simplex(t);
}

ImageTensor quantize_f32(const ImageTensor& x) {
  ImageTensor out = x;
  for (double& v : out.values()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

}  // namespace freqguide
