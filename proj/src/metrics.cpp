#include "freqguide/metrics.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace freqguide {
namespace {

constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> ssim_window(std::size_t side) {
  std::vector<double> w(side * side);
  const double c = static_cast<double>(side / 2);
  double total = 0.0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t q = 0; q < side; ++q) {
      const double dy = static_cast<double>(r) - c, dx = static_cast<double>(q) - c;
      w[r * side + q] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSsimSigma * kSsimSigma));
      total += w[r * side + q];
    }
  }
  for (double& v : w) v /= total;
  return w;
}

/// Zero-pads `k` to n x n and resamples it bilinearly so that its centre of
/// mass lands on the grid centre. Mass moving off the grid is dropped.
std::vector<double> centred(const BlurKernel& k, std::size_t n) {
  const std::size_t s = k.side();
  const std::size_t pad = (n - s) / 2;
  double my = 0.0, mx = 0.0, mass = 0.0;
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < s; ++c) {
      my += static_cast<double>(r + pad) * k(r, c);
      mx += static_cast<double>(c + pad) * k(r, c);
      mass += k(r, c);
    }
  }
  const double centre = static_cast<double>(n / 2);
  const double dy = my / mass - centre, dx = mx / mass - centre;
  // out(r, c) = padded(r + dy, c + dx).
  auto padded = [&](long r, long c) -> double {
    const long lo = static_cast<long>(pad), hi = static_cast<long>(pad + s);
    if (r < lo || c < lo || r >= hi || c >= hi) return 0.0;
    return k(static_cast<std::size_t>(r - lo), static_cast<std::size_t>(c - lo));
  };
  const double fy = std::floor(dy), fx = std::floor(dx);
  const double wy = dy - fy, wx = dx - fx;
  const long oy = static_cast<long>(fy), ox = static_cast<long>(fx);
  std::vector<double> out(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const long y = static_cast<long>(r) + oy, x = static_cast<long>(c) + ox;
      out[r * n + c] = (1.0 - wy) * ((1.0 - wx) * padded(y, x) + wx * padded(y, x + 1)) +
                       wy * ((1.0 - wx) * padded(y + 1, x) + wx * padded(y + 1, x + 1));
    }
  }
  return out;
}

double parse_field(const std::string& text, const std::string& source, std::size_t line) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::runtime_error(source + ":" + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

}  // namespace

std::optional<double> psnr(const ImageTensor& a, const ImageTensor& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  if (a.empty()) throw std::invalid_argument("psnr: empty images");
  const double mse = reduce_sq_norm(a - b) / static_cast<double>(a.size());
  if (mse == 0.0) return std::nullopt;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr_or_cap(const std::optional<double>& db) { return db ? *db : kIdenticalPsnrDb; }

double ssim(const ImageTensor& a, const ImageTensor& b, std::size_t window) {
  require_same_shape(a, b, "ssim");
  if (window % 2 == 0 || window == 0) throw std::invalid_argument("ssim: window side must be odd");
  if (window > a.height() || window > a.width()) {
    throw std::invalid_argument("ssim: window " + std::to_string(window) + " larger than image " +
                                a.shape().str());
  }
  const std::vector<double> w = ssim_window(window);
  const std::size_t oh = a.height() - window + 1, ow = a.width() - window + 1;
  double total = 0.0;
  for (std::size_t ch = 0; ch < a.channels(); ++ch) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t r = 0; r < window; ++r) {
          for (std::size_t c = 0; c < window; ++c) {
            const double g = w[r * window + c];
            const double va = a.at(ch, i + r, j + c), vb = b.at(ch, i + r, j + c);
            ma += g * va;
            mb += g * vb;
            saa += g * va * va;
            sbb += g * vb * vb;
            sab += g * va * vb;
          }
        }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
                 ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      }
    }
  }
  return total / static_cast<double>(a.channels() * oh * ow);
}

double kernel_mse(const BlurKernel& k_rec, const BlurKernel& k_true) {
  const std::size_t n = std::max(k_rec.side(), k_true.side());
  const std::vector<double> a = centred(k_rec, n), b = centred(k_true, n);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRecord>& records) {
  out << kMetricsHeader << '\n';
  for (const MetricRecord& r : records) {
    out << r.image_id << ',' << r.run_label << ',' << (r.psnr_db ? format_real(*r.psnr_db) : "identical")
        << ',' << format_real(r.ssim) << ',' << format_real(r.kernel_mse) << '\n';
  }
}

std::vector<MetricRecord> read_metrics_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error(source + ": missing metrics header '" + kMetricsHeader + "'");
  }
  std::vector<MetricRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 5) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected 5 columns");
    }
    MetricRecord r;
    r.image_id = f[0];
    r.run_label = f[1];
    if (f[2] != "identical") r.psnr_db = parse_field(f[2], source, line_no);
    r.ssim = parse_field(f[3], source, line_no);
    r.kernel_mse = parse_field(f[4], source, line_no);
    records.push_back(std::move(r));
  }
  return records;
}

MetricSummary summarize(const std::vector<MetricRecord>& records) {
  MetricSummary s;
  s.count = records.size();
  if (records.empty()) return s;
  std::size_t kernels = 0;
  for (const MetricRecord& r : records) {
    s.psnr_db += psnr_or_cap(r.psnr_db);
    s.ssim += r.ssim;
    if (!std::isnan(r.kernel_mse)) {
      s.kernel_mse += r.kernel_mse;
      ++kernels;
    }
  }
  s.psnr_db /= static_cast<double>(records.size());
  s.ssim /= static_cast<double>(records.size());
  s.kernel_mse = kernels ? s.kernel_mse / static_cast<double>(kernels)
                         : std::numeric_limits<double>::quiet_NaN();
  return s;
}

}  // namespace freqguide
