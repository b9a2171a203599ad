#include "freqguide/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "freqguide/conv.hpp"
#include "freqguide/metrics.hpp"

namespace freqguide {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text);

template <typename T>
  requires std::is_arithmetic_v<T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("config: " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

template <>
double parse_value<double>(const std::string& key, const std::string& text) {
  return parse_number<double>(key, text);
}
template <>
int parse_value<int>(const std::string& key, const std::string& text) {
  return parse_number<int>(key, text);
}
template <>
long parse_value<long>(const std::string& key, const std::string& text) {
  return parse_number<long>(key, text);
}
template <>
std::size_t parse_value<std::size_t>(const std::string& key, const std::string& text) {
  return parse_number<std::size_t>(key, text);
}
template <>
std::string parse_value<std::string>(const std::string&, const std::string& text) {
  return text;
}
template <>
bool parse_value<bool>(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config: " + key + ": expected true or false, got '" + text + "'");
}
template <>
std::vector<std::size_t> parse_value<std::vector<std::size_t>>(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: " + key + ": empty list");
  return out;
}

std::string show(double v) { return format_real(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(long v) { return std::to_string(v); }
std::string show(std::size_t v) { return std::to_string(v); }
std::string show(const std::string& v) { return v; }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field field(std::string key, T& (*access)(ExperimentConfig&)) {
  Field f;
  f.key = key;
  f.get = [access](const ExperimentConfig& c) { return show(access(const_cast<ExperimentConfig&>(c))); };
  f.set = [access, key](ExperimentConfig& c, const std::string& v) { access(c) = parse_value<T>(key, v); };
  return f;
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      field<std::string>("data.corpus_dir", [](C& c) -> std::string& { return c.data.corpus_dir; }),
      field<std::size_t>("data.count", [](C& c) -> std::size_t& { return c.data.count; }),
      field<std::size_t>("data.height", [](C& c) -> std::size_t& { return c.data.height; }),
      field<std::size_t>("data.width", [](C& c) -> std::size_t& { return c.data.width; }),
      field<double>("data.val_fraction", [](C& c) -> double& { return c.data.val_fraction; }),
      field<double>("data.test_fraction", [](C& c) -> double& { return c.data.test_fraction; }),
      field<std::string>("data.split", [](C& c) -> std::string& { return c.data.split; }),
      field<std::size_t>("data.max_images", [](C& c) -> std::size_t& { return c.data.max_images; }),
      field<int>("schedule.train_steps", [](C& c) -> int& { return c.schedule.train_steps; }),
      field<double>("schedule.beta_start", [](C& c) -> double& { return c.schedule.beta_start; }),
      field<double>("schedule.beta_end", [](C& c) -> double& { return c.schedule.beta_end; }),
      field<int>("schedule.sample_steps", [](C& c) -> int& { return c.schedule.sample_steps; }),
      field<std::string>("denoiser.image_checkpoint", [](C& c) -> std::string& { return c.denoiser.image_checkpoint; }),
      field<std::string>("denoiser.kernel_checkpoint", [](C& c) -> std::string& { return c.denoiser.kernel_checkpoint; }),
      field<std::vector<std::size_t>>("denoiser.image_widths",
                                      [](C& c) -> std::vector<std::size_t>& { return c.denoiser.image_widths; }),
      field<std::vector<std::size_t>>("denoiser.kernel_widths",
                                      [](C& c) -> std::vector<std::size_t>& { return c.denoiser.kernel_widths; }),
      field<std::size_t>("denoiser.kernel_canvas", [](C& c) -> std::size_t& { return c.denoiser.kernel_canvas; }),
      field<std::size_t>("denoiser.time_dim", [](C& c) -> std::size_t& { return c.denoiser.time_dim; }),
      field<std::size_t>("denoiser.embed_dim", [](C& c) -> std::size_t& { return c.denoiser.embed_dim; }),
      field<long>("denoiser.train_steps", [](C& c) -> long& { return c.denoiser.train_steps; }),
      field<long>("denoiser.kernel_train_steps", [](C& c) -> long& { return c.denoiser.kernel_train_steps; }),
      field<std::size_t>("denoiser.batch", [](C& c) -> std::size_t& { return c.denoiser.batch; }),
      field<double>("denoiser.lr", [](C& c) -> double& { return c.denoiser.lr; }),
      field<long>("denoiser.warmup", [](C& c) -> long& { return c.denoiser.warmup; }),
      field<double>("denoiser.grad_clip", [](C& c) -> double& { return c.denoiser.grad_clip; }),
      field<double>("denoiser.final_lr_fraction", [](C& c) -> double& { return c.denoiser.final_lr_fraction; }),
      field<bool>("denoiser.hflip", [](C& c) -> bool& { return c.denoiser.hflip; }),
      field<double>("guidance.lambda_lh", [](C& c) -> double& { return c.guidance.lambda_lh; }),
      field<double>("guidance.lambda_hl", [](C& c) -> double& { return c.guidance.lambda_hl; }),
      field<double>("guidance.lambda_hh", [](C& c) -> double& { return c.guidance.lambda_hh; }),
      field<double>("guidance.zeta_image", [](C& c) -> double& { return c.guidance.zeta_image; }),
      field<double>("guidance.zeta_kernel", [](C& c) -> double& { return c.guidance.zeta_kernel; }),
      field<double>("guidance.step_norm_eps", [](C& c) -> double& { return c.guidance.step_norm_eps; }),
      field<bool>("guidance.grad_through_denoiser", [](C& c) -> bool& { return c.guidance.grad_through_denoiser; }),
      field<std::string>("degradation.blur", [](C& c) -> std::string& { return c.degradation.blur; }),
      field<double>("degradation.noise_sigma", [](C& c) -> double& { return c.degradation.noise_sigma; }),
      field<std::size_t>("degradation.kernel_side", [](C& c) -> std::size_t& { return c.degradation.kernel_side; }),
      field<std::string>("run.mode", [](C& c) -> std::string& { return c.run.mode; }),
      field<std::string>("run.boundary", [](C& c) -> std::string& { return c.run.boundary; }),
      field<std::size_t>("run.threads", [](C& c) -> std::size_t& { return c.run.threads; }),
      field<bool>("run.previews", [](C& c) -> bool& { return c.run.previews; }),
      field<std::string>("run.label", [](C& c) -> std::string& { return c.run.label; }),
  };
  return table;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  // Convenience: guidance.lambda sets all three subband weights.
  if (key == "guidance.lambda") {
    const double v = parse_value<double>(key, value);
    guidance.lambda_lh = guidance.lambda_hl = guidance.lambda_hh = v;
    return;
  }
  if (key == "run.seed") {
    seed = parse_number<std::uint64_t>(key, value);
    return;
  }
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

void ExperimentConfig::apply_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": expected 'section.key = value'");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void ExperimentConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(ss.str(), path.string());
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  out += "run.seed = " + std::to_string(seed) + "\n";
  return out;
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(f.key);
  out.push_back("run.seed");
  return out;
}

void ExperimentConfig::validate() const {
  if (data.count == 0 || data.height == 0 || data.width == 0 || data.height % 2 || data.width % 2) {
    throw std::invalid_argument("config: data.count must be > 0 and data.height/width even and > 0");
  }
  if (data.split != "train" && data.split != "val" && data.split != "test") {
    throw std::invalid_argument("config: data.split must be train, val or test");
  }
  if (run.mode != "blind" && run.mode != "known") {
    throw std::invalid_argument("config: run.mode must be blind or known");
  }
  if (run.threads == 0) throw std::invalid_argument("config: run.threads must be >= 1");
  if (schedule.sample_steps < 1 || schedule.sample_steps > schedule.train_steps) {
    throw std::invalid_argument("config: schedule.sample_steps must be in 1..schedule.train_steps");
  }
  if (degradation.kernel_side > denoiser.kernel_canvas) {
    throw std::invalid_argument("config: degradation.kernel_side exceeds denoiser.kernel_canvas");
  }
  parse_boundary(run.boundary);
  guidance.validate();
  degradation_spec(0).validate();
  image_arch().validate();
  kernel_arch().validate();
  train_schedule();
}

NoiseSchedule ExperimentConfig::train_schedule() const {
  return make_schedule(schedule.train_steps, schedule.beta_start, schedule.beta_end);
}

NoiseSchedule ExperimentConfig::sample_schedule() const {
  return respace(train_schedule(), schedule.sample_steps);
}

UNetArch ExperimentConfig::image_arch() const {
  UNetArch a;
  a.channels = 3;
  a.height = data.height;
  a.width = data.width;
  a.widths = denoiser.image_widths;
  a.time_dim = denoiser.time_dim;
  a.embed_dim = denoiser.embed_dim;
  return a;
}

UNetArch ExperimentConfig::kernel_arch() const {
  UNetArch a = image_arch();
  a.channels = 1;
  a.height = a.width = denoiser.kernel_canvas;
  a.widths = denoiser.kernel_widths;
  return a;
}

TrainParams ExperimentConfig::train_params(bool kernel) const {
  TrainParams p;
  p.steps = kernel ? denoiser.kernel_train_steps : denoiser.train_steps;
  p.batch = denoiser.batch;
  p.lr = denoiser.lr;
  p.warmup = denoiser.warmup;
  p.grad_clip = denoiser.grad_clip;
  p.final_lr_fraction = denoiser.final_lr_fraction;
  p.hflip = denoiser.hflip;
  return p;
}

DegradationSpec ExperimentConfig::degradation_spec(std::uint64_t kernel_seed) const {
  DegradationSpec s;
  s.stages = DegradationSpec::parse_blur(degradation.blur);
  s.noise_sigma = degradation.noise_sigma;
  s.kernel_side = degradation.kernel_side;
  s.seed = kernel_seed;
  return s;
}

}  // namespace freqguide
