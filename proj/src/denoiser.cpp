#include "freqguide/denoiser.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace freqguide {
namespace {

constexpr char kMagic[4] = {'F', 'G', 'C', 'K'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint and tensor files assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw std::runtime_error("checkpoint " + path.string() + ": truncated file");
  }
  return value;
}

}  // namespace

ImageTensor Denoiser::predict_vjp(const ImageTensor& x_t, int step, const ImageTensor& cotangent,
                                  ImageTensor* eps) const {
  auto evaluation = evaluate(x_t, step);
  if (eps != nullptr) *eps = evaluation->eps();
  return evaluation->vjp(cotangent);
}

void to_json(nlohmann::json& j, const CheckpointInfo& info) {
  j = nlohmann::json{{"format_version", CheckpointInfo::kFormatVersion},
                     {"kind", info.kind},
                     {"arch", info.arch},
                     {"schedule", {{"T", info.schedule_steps},
                                   {"beta_start", info.beta_start},
                                   {"beta_end", info.beta_end}}},
                     {"train_seed", info.train_seed},
                     {"train_steps", info.train_steps},
                     {"optimizer", info.optimizer},
                     {"final_loss", info.final_loss}};
}

void from_json(const nlohmann::json& j, CheckpointInfo& info) {
  const int version = j.at("format_version").get<int>();
  if (version != CheckpointInfo::kFormatVersion) {
    throw std::runtime_error("checkpoint format version " + std::to_string(version) +
                             " unsupported (expected " +
                             std::to_string(CheckpointInfo::kFormatVersion) + ")");
  }
  j.at("kind").get_to(info.kind);
  j.at("arch").get_to(info.arch);
  j.at("schedule").at("T").get_to(info.schedule_steps);
  j.at("schedule").at("beta_start").get_to(info.beta_start);
  j.at("schedule").at("beta_end").get_to(info.beta_end);
  j.at("train_seed").get_to(info.train_seed);
  j.at("train_steps").get_to(info.train_steps);
  info.optimizer = j.value("optimizer", nlohmann::json::object());
  info.final_loss = j.value("final_loss", 0.0);
}

template <typename Scalar>
UNetDenoiser<Scalar>::UNetDenoiser(UNet<Scalar> net, CheckpointInfo info)
    : net_(std::move(net)), info_(std::move(info)) {
  info_.arch = net_.arch();
}

template <typename Scalar>
Shape UNetDenoiser<Scalar>::input_shape() const {
  const UNetArch& a = net_.arch();
  return Shape{a.channels, a.height, a.width};
}

template <typename Scalar>
ImageTensor UNetDenoiser<Scalar>::predict(const ImageTensor& x_t, int step) const {
  if (x_t.shape() != input_shape()) {
    throw std::invalid_argument("denoiser: input " + x_t.shape().str() + " but model expects " +
                                input_shape().str());
  }
  std::vector<Scalar> in(x_t.values().begin(), x_t.values().end());
  std::vector<Scalar> out(in.size());
  typename UNet<Scalar>::Tape tape;
  const int steps[1] = {step};
  net_.forward(in, steps, out, tape);
  return ImageTensor(x_t.shape(), std::vector<double>(out.begin(), out.end()));
}

namespace {

template <typename Scalar>
class UNetEvaluation final : public Denoiser::Evaluation {
 public:
  UNetEvaluation(const UNet<Scalar>& net, const ImageTensor& x_t, int step) : net_(net), shape_(x_t.shape()) {
    std::vector<Scalar> in(x_t.values().begin(), x_t.values().end());
    std::vector<Scalar> out(in.size());
    const int steps[1] = {step};
    net_.forward(in, steps, out, tape_);
    eps_ = ImageTensor(shape_, std::vector<double>(out.begin(), out.end()));
  }

  ImageTensor vjp(const ImageTensor& cotangent) override {
    if (cotangent.shape() != shape_) {
      throw std::invalid_argument("denoiser vjp: cotangent " + cotangent.shape().str() +
                                  " does not match input " + shape_.str());
    }
    std::vector<Scalar> g(cotangent.values().begin(), cotangent.values().end());
    std::vector<Scalar> grad_in(g.size());
    net_.backward(tape_, g, {}, grad_in);
    return ImageTensor(shape_, std::vector<double>(grad_in.begin(), grad_in.end()));
  }

 private:
  const UNet<Scalar>& net_;
  Shape shape_;
  typename UNet<Scalar>::Tape tape_;
};

}  // namespace

template <typename Scalar>
std::unique_ptr<Denoiser::Evaluation> UNetDenoiser<Scalar>::evaluate(const ImageTensor& x_t, int step) const {
  if (x_t.shape() != input_shape()) {
    throw std::invalid_argument("denoiser: input " + x_t.shape().str() + " but model expects " +
                                input_shape().str());
  }
  return std::make_unique<UNetEvaluation<Scalar>>(net_, x_t, step);
}

template class UNetDenoiser<float>;
template class UNetDenoiser<double>;

void save_checkpoint(const std::filesystem::path& path, const UNetDenoiser<float>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  const std::string header = nlohmann::json(model.info()).dump();
  out.write(kMagic, 4);
  write_pod<std::uint32_t>(out, CheckpointInfo::kFormatVersion);
  write_pod<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  const auto& params = model.net().params();
  write_pod<std::uint64_t>(out, params.size());
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

std::shared_ptr<UNetDenoiser<float>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("checkpoint not found: " + path.string() +
                             " (train one with train-denoiser / train-kernel-prior)");
  }
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic): " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != CheckpointInfo::kFormatVersion) {
    throw std::runtime_error("checkpoint " + path.string() + ": format version " +
                             std::to_string(version) + " unsupported");
  }
  const auto header_len = read_pod<std::uint64_t>(in, path);
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
    throw std::runtime_error("checkpoint " + path.string() + ": truncated header");
  }
  const CheckpointInfo info = nlohmann::json::parse(header).get<CheckpointInfo>();
  UNet<float> net(info.arch);
  const auto count = read_pod<std::uint64_t>(in, path);
  if (count != net.num_params()) {
    throw std::runtime_error("checkpoint " + path.string() + ": parameter count " +
                             std::to_string(count) + " does not match architecture (" +
                             std::to_string(net.num_params()) + ")");
  }
  if (!in.read(reinterpret_cast<char*>(net.params().data()),
               static_cast<std::streamsize>(count * sizeof(float)))) {
    throw std::runtime_error("checkpoint " + path.string() + ": truncated weights");
  }
  return std::make_shared<UNetDenoiser<float>>(std::move(net), info);
}

}  // namespace freqguide
