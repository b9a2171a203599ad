#include "freqguide/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "freqguide/corpus.hpp"
#include "freqguide/png.hpp"
#include "freqguide/sampler.hpp"
#include "freqguide/tensor_io.hpp"

namespace freqguide {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Header-checked CSV rows.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  }
  const std::size_t columns = split_csv_line(header).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != columns) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": expected " +
                               std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

double to_double(const std::string& s, const fs::path& source) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  if (s == "nan") return std::nan("");
  throw std::runtime_error(source.string() + ": bad number '" + s + "'");
}

/// Runs body(i) for i in [0, n) on `threads` workers; rethrows the first failure.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::shared_ptr<UNetDenoiser<float>> load_prior(const std::string& path, const UNetArch& expected,
                                                const ExperimentConfig& cfg, const char* what) {
  auto model = load_checkpoint(path);
  const CheckpointInfo& info = model->info();
  if (!(info.arch == expected)) {
    throw std::runtime_error(std::string(what) + " checkpoint " + path +
                             " was trained with a different architecture than the config describes");
  }
  if (info.schedule_steps != cfg.schedule.train_steps || info.beta_start != cfg.schedule.beta_start ||
      info.beta_end != cfg.schedule.beta_end) {
    throw std::runtime_error(std::string(what) + " checkpoint " + path +
                             " was trained on a different noise schedule than the config describes");
  }
  return model;
}

void write_train_log(const fs::path& path, const std::vector<double>& losses) {
  std::ofstream log = open_out(path);
  log << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) log << i << ',' << format_real(losses[i]) << '\n';
}

void finish_training(const ExperimentConfig& cfg, TrainResult& result, const fs::path& checkpoint,
                     const std::string& kind, double seconds) {
  CheckpointInfo& info = result.model->info();
  info.kind = kind;
  info.schedule_steps = cfg.schedule.train_steps;
  info.beta_start = cfg.schedule.beta_start;
  info.beta_end = cfg.schedule.beta_end;
  info.train_seed = cfg.seed;
  info.train_steps = static_cast<long>(result.losses.size());
  info.optimizer = cfg.train_params(kind == "kernel");
  info.optimizer["wall_seconds"] = seconds;
  info.final_loss = mean_loss(result.losses, result.losses.size() - std::min<std::size_t>(50, result.losses.size()),
                              result.losses.size());
  if (checkpoint.has_parent_path()) ensure_dir(checkpoint.parent_path());
  save_checkpoint(checkpoint, *result.model);
  write_train_log(fs::path(checkpoint.string() + ".log.csv"), result.losses);
}

/// Mass and sign check of a kernel file exactly as stored (float32).
bool stored_kernel_valid(const fs::path& path) {
  const RawTensor t = read_tensor_file(path);
  if (t.dims.size() != 2 || t.dims[0] != t.dims[1] || t.dims[0] % 2 == 0) return false;
  double sum = 0.0;
  for (float v : t.data) {
    if (!(v >= 0.0f) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= BlurKernel::kSumTolerance;
}

struct ItemOutcome {
  MetricRecord record;
  bool kernel_valid = false;
  bool trace_finite = false;
  bool loss_decreased = false;
  double input_psnr = 0.0;
};

}  // namespace

void write_resolved_config(const ExperimentConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  open_out(out_dir / "config.txt") << cfg.to_text();
}

void cmd_synth_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  CorpusOptions opts;
  opts.count = cfg.data.count;
  opts.height = cfg.data.height;
  opts.width = cfg.data.width;
  opts.val_fraction = cfg.data.val_fraction;
  opts.test_fraction = cfg.data.test_fraction;
  const auto corpus = synth_corpus(cfg.seed, opts);
  ensure_dir(out_dir / "images");
  std::ofstream manifest = open_out(out_dir / "manifest.csv");
  manifest << "id,split,path\n";
  for (const CorpusEntry& e : corpus) {
    const fs::path rel = fs::path("images") / (e.id + ".fagt");
    save_image_tensor(out_dir / rel, e.image);
    manifest << e.id << ',' << e.split << ',' << rel.string() << '\n';
  }
  write_resolved_config(cfg, out_dir);
}

std::vector<CorpusImage> read_corpus_manifest(const fs::path& corpus_dir) {
  const fs::path path = corpus_dir / "manifest.csv";
  if (!fs::exists(path)) {
    throw std::runtime_error("corpus manifest not found: " + path.string() + " (create it with synth-data)");
  }
  std::vector<CorpusImage> out;
  for (const auto& row : read_csv(path, "id,split,path")) out.push_back({row[0], row[1], corpus_dir / row[2]});
  return out;
}

void cmd_train_denoiser(const ExperimentConfig& cfg, const fs::path& corpus_dir, const fs::path& checkpoint) {
  cfg.validate();
  std::vector<ImageTensor> train;
  for (const CorpusImage& img : read_corpus_manifest(corpus_dir)) {
    if (img.split == "train") train.push_back(to_chain_domain(load_image_tensor(img.path)));
  }
  if (train.empty()) throw std::runtime_error("corpus " + corpus_dir.string() + " has no train images");
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train_denoiser(Rng(cfg.seed).substream("train_image"), train, cfg.train_schedule(),
                                      cfg.image_arch(), cfg.train_params(false));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finish_training(cfg, result, checkpoint, "image", seconds);
}

void cmd_train_kernel_prior(const ExperimentConfig& cfg, const fs::path& checkpoint) {
  cfg.validate();
  const std::size_t side = cfg.degradation.kernel_side, canvas = cfg.denoiser.kernel_canvas;
  const ExampleSource source = [side, canvas](Rng& r) {
    return encode_kernel_canvas(random_training_kernel(r, side), canvas);
  };
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train_denoiser(Rng(cfg.seed).substream("train_kernel"), source, cfg.train_schedule(),
                                      cfg.kernel_arch(), cfg.train_params(true));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  finish_training(cfg, result, checkpoint, "kernel", seconds);
}

void cmd_degrade(const ExperimentConfig& cfg, const fs::path& corpus_dir, const fs::path& out_dir) {
  cfg.validate();
  std::vector<CorpusImage> chosen;
  for (const CorpusImage& img : read_corpus_manifest(corpus_dir)) {
    if (img.split == cfg.data.split && chosen.size() < cfg.data.max_images) chosen.push_back(img);
  }
  if (chosen.empty()) throw std::runtime_error("corpus has no '" + cfg.data.split + "' images");
  ensure_dir(out_dir);
  const Rng root(cfg.seed);
  std::ofstream manifest = open_out(out_dir / "manifest.csv");
  manifest << "id,blur,noise_sigma,seed,clean,degraded,kernel\n";
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const ImageTensor x = load_image_tensor(chosen[i].path);
    const std::uint64_t kernel_seed = root.substream("degrade_kernel", i).next_u64();
    Rng noise = root.substream("degrade_noise", i);
    const DegradationSpec spec = cfg.degradation_spec(kernel_seed);
    const Degraded d = apply_degradation(x, spec, noise);
    const std::string id = chosen[i].id;
    save_image_tensor(out_dir / (id + "_clean.fagt"), x);
    save_image_tensor(out_dir / (id + "_degraded.fagt"), d.y);
    save_kernel(out_dir / (id + "_kernel.fagt"), d.k_true);
    if (cfg.run.previews) write_panel_row(out_dir / (id + ".png"), {x, d.y, kernel_preview(d.k_true)}, 96);
    manifest << id << ',' << spec.blur_string() << ',' << format_real(spec.noise_sigma) << ',' << kernel_seed
             << ',' << id << "_clean.fagt," << id << "_degraded.fagt," << id << "_kernel.fagt\n";
  }
  write_resolved_config(cfg, out_dir);
}

std::vector<DegradedItem> read_degraded_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.csv";
  if (!fs::exists(path)) {
    throw std::runtime_error("degradation manifest not found: " + path.string() + " (create it with degrade)");
  }
  std::vector<DegradedItem> out;
  for (const auto& row : read_csv(path, "id,blur,noise_sigma,seed,clean,degraded,kernel")) {
    DegradedItem item;
    item.id = row[0];
    item.blur = row[1];
    item.noise_sigma = to_double(row[2], path);
    item.seed = std::stoull(row[3]);
    item.clean = dir / row[4];
    item.degraded = dir / row[5];
    item.kernel = dir / row[6];
    out.push_back(std::move(item));
  }
  return out;
}

RunSummary cmd_restore(const ExperimentConfig& cfg, const fs::path& inputs, const fs::path& out_dir) {
  cfg.validate();
  const std::vector<DegradedItem> items = read_degraded_manifest(inputs);
  if (items.empty()) throw std::runtime_error("no inputs listed in " + (inputs / "manifest.csv").string());
  const bool blind = cfg.run.mode == "blind";
  DenoiserHandle image_prior = load_prior(cfg.denoiser.image_checkpoint, cfg.image_arch(), cfg, "image prior");
  DenoiserHandle kernel_prior;
  if (blind) kernel_prior = load_prior(cfg.denoiser.kernel_checkpoint, cfg.kernel_arch(), cfg, "kernel prior");
  const NoiseSchedule schedule = cfg.sample_schedule();
  const Boundary boundary = parse_boundary(cfg.run.boundary);
  ensure_dir(out_dir);
  write_resolved_config(cfg, out_dir);

  const Rng root(cfg.seed);
  std::vector<ItemOutcome> outcomes(items.size());
  parallel_for(items.size(), cfg.run.threads, [&](std::size_t i) {
    const DegradedItem& item = items[i];
    const ImageTensor clean = load_image_tensor(item.clean);
    const BlurKernel k_true = load_kernel(item.kernel);
    RestorationJob job;
    job.y = load_image_tensor(item.degraded);
    job.image_denoiser = image_prior;
    job.kernel_denoiser = kernel_prior;
    job.schedule = schedule;
    job.cfg = cfg.guidance;
    job.kernel_side = cfg.degradation.kernel_side;
    job.boundary = boundary;
    job.seed = root.substream("restore", i).next_u64();
    if (!blind) job.known_kernel = k_true;
    if (job.y.shape() != clean.shape()) throw std::runtime_error(item.id + ": clean/degraded shapes differ");

    const RestorationResult r = restore(job);
    const fs::path base = out_dir / item.id;
    save_image_tensor(fs::path(base.string() + "_xrec.fagt"), r.x_rec);
    save_kernel(fs::path(base.string() + "_krec.fagt"), r.k_rec);
    std::ofstream trace = open_out(fs::path(base.string() + "_trace.csv"));
    write_trace_csv(trace, r.trace);
    if (cfg.run.previews) {
      write_panel_row(fs::path(base.string() + "_grid.png"),
                      {clamp(job.y, 0.0, 1.0), r.x_rec, clean, kernel_preview(k_true), kernel_preview(r.k_rec)}, 96);
    }

    ItemOutcome& o = outcomes[i];
    // Metrics are computed on what was stored, so a rerun from files agrees.
    const ImageTensor x_stored = quantize_f32(r.x_rec);
    o.record.image_id = item.id;
    o.record.run_label = cfg.run.label;
    o.record.psnr_db = psnr(x_stored, clean);
    o.record.ssim = ssim(x_stored, clean);
    o.record.kernel_mse = kernel_mse(r.k_rec, k_true);
    o.kernel_valid = BlurKernel::is_valid(r.k_rec.weights()) &&
                     stored_kernel_valid(fs::path(base.string() + "_krec.fagt"));
    o.trace_finite = r.trace.size() == static_cast<std::size_t>(schedule.steps()) &&
                     std::all_of(r.trace.begin(), r.trace.end(), [](const TraceRecord& t) {
                       return std::isfinite(t.loss.total) && std::isfinite(t.grad_x_norm) &&
                              std::isfinite(t.grad_k_norm);
                     });
    o.loss_decreased = r.trace.back().loss.total < r.trace.front().loss.total;
    o.input_psnr = psnr_or_cap(psnr(clamp(job.y, 0.0, 1.0), clean));
  });

  std::vector<MetricRecord> records;
  RunSummary summary;
  summary.label = cfg.run.label;
  std::size_t decreased = 0;
  for (const ItemOutcome& o : outcomes) {
    records.push_back(o.record);
    summary.kernels_valid = summary.kernels_valid && o.kernel_valid;
    summary.traces_finite = summary.traces_finite && o.trace_finite;
    decreased += o.loss_decreased ? 1 : 0;
    summary.input_psnr_db += o.input_psnr / static_cast<double>(outcomes.size());
  }
  summary.loss_decreased_fraction = static_cast<double>(decreased) / static_cast<double>(outcomes.size());
  summary.metrics = summarize(records);
  std::ofstream csv = open_out(out_dir / "metrics.csv");
  write_metrics_csv(csv, records);
  return summary;
}

namespace {

struct AblationRun {
  std::string label;
  GuidanceConfig guidance;
};

void write_ablation_csv(const fs::path& path, const std::vector<AblationRun>& runs,
                        const std::vector<RunSummary>& summaries) {
  std::ofstream out = open_out(path);
  out << kAblationHeader << '\n';
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const GuidanceConfig& g = runs[i].guidance;
    const MetricSummary& m = summaries[i].metrics;
    out << runs[i].label << ',' << format_real(g.lambda_lh) << ',' << format_real(g.lambda_hl) << ','
        << format_real(g.lambda_hh) << ',' << m.count << ',' << format_real(m.psnr_db) << ','
        << format_real(m.ssim) << ',' << format_real(m.kernel_mse) << ','
        << format_real(summaries[i].input_psnr_db) << '\n';
  }
}

std::vector<RunSummary> run_ablation(const ExperimentConfig& cfg, const fs::path& inputs, const fs::path& out_dir,
                                     const std::vector<AblationRun>& runs) {
  ensure_dir(out_dir);
  write_resolved_config(cfg, out_dir);
  std::vector<RunSummary> summaries;
  for (const AblationRun& run : runs) {
    ExperimentConfig c = cfg;
    c.guidance = run.guidance;
    c.run.label = run.label;
    summaries.push_back(cmd_restore(c, inputs, out_dir / run.label));
  }
  write_ablation_csv(out_dir / "ablation.csv", runs, summaries);
  return summaries;
}

}  // namespace

std::vector<RunSummary> cmd_ablate_lambda(const ExperimentConfig& cfg, const fs::path& inputs,
                                          const fs::path& out_dir) {
  std::vector<AblationRun> runs;
  for (double lambda : kLambdaSweep) {
    AblationRun r{"lambda_" + format_real(lambda), cfg.guidance};
    r.guidance.lambda_lh = r.guidance.lambda_hl = r.guidance.lambda_hh = lambda;
    runs.push_back(r);
  }
  return run_ablation(cfg, inputs, out_dir, runs);
}

std::vector<RunSummary> cmd_ablate_subbands(const ExperimentConfig& cfg, const fs::path& inputs,
                                            const fs::path& out_dir) {
  const double lambda = cfg.guidance.lambda_lh;
  std::vector<AblationRun> runs;
  const char* labels[4] = {"L2", "L2+H1", "L2+H2", "L2+H3"};
  for (int n = 0; n < 4; ++n) {
    AblationRun r{labels[n], cfg.guidance};
    r.guidance.lambda_lh = n >= 1 ? lambda : 0.0;
    r.guidance.lambda_hl = n >= 2 ? lambda : 0.0;
    r.guidance.lambda_hh = n >= 3 ? lambda : 0.0;
    runs.push_back(r);
  }
  return run_ablation(cfg, inputs, out_dir, runs);
}

std::size_t cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw UsageError("report: no run directories given");
  struct Row {
    std::string source, label;
    std::size_t n;
    double psnr, ssim, kmse;
  };
  std::vector<Row> rows;
  std::vector<std::string> missing;
  for (const fs::path& dir : run_dirs) {
    const std::string source = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    if (fs::exists(dir / "ablation.csv")) {
      for (const auto& r : read_csv(dir / "ablation.csv", kAblationHeader)) {
        rows.push_back({source, r[0], std::stoul(r[4]), to_double(r[5], dir), to_double(r[6], dir), to_double(r[7], dir)});
      }
    } else if (fs::exists(dir / "metrics.csv")) {
      std::ifstream in(dir / "metrics.csv");
      const auto records = read_metrics_csv(in, (dir / "metrics.csv").string());
      const MetricSummary m = summarize(records);
      const std::string label = records.empty() ? source : records.front().run_label;
      rows.push_back({source, label, m.count, m.psnr_db, m.ssim, m.kernel_mse});
    } else {
      missing.push_back(dir.string());
    }
  }
  if (!missing.empty()) {
    std::string msg = "report: no metrics.csv or ablation.csv in:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw std::runtime_error(msg);
  }

  // Aggregate rows: unweighted mean of the per-run means, per label, in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Row*>> by_label;
  for (const Row& r : rows) {
    if (!by_label.count(r.label)) order.push_back(r.label);
    by_label[r.label].push_back(&r);
  }
  ensure_dir(out_dir);
  std::ofstream out = open_out(out_dir / "summary.csv");
  out << "source,label,n,psnr_db,ssim,kernel_mse\n";
  for (const Row& r : rows) {
    out << r.source << ',' << r.label << ',' << r.n << ',' << format_real(r.psnr) << ',' << format_real(r.ssim)
        << ',' << format_real(r.kmse) << '\n';
  }
  std::vector<std::string> cats;
  std::vector<double> psnrs;
  for (const std::string& label : order) {
    const auto& group = by_label[label];
    double p = 0, s = 0, k = 0;
    std::size_t n = 0;
    for (const Row* r : group) {
      p += r->psnr;
      s += r->ssim;
      k += r->kmse;
      n += r->n;
    }
    const auto g = static_cast<double>(group.size());
    out << "aggregate," << label << ',' << n << ',' << format_real(p / g) << ',' << format_real(s / g) << ','
        << format_real(k / g) << '\n';
    cats.push_back(label);
    psnrs.push_back(p / g);
  }

  write_bar_chart(out_dir / "psnr_by_run.png", "PSNR DB", cats, psnrs);
  std::vector<std::string> lambda_cats;
  std::vector<double> lambda_psnr, subband_psnr;
  std::vector<std::string> subband_cats;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (cats[i].rfind("lambda_", 0) == 0) {
      lambda_cats.push_back(cats[i].substr(7));
      lambda_psnr.push_back(psnrs[i]);
    } else if (cats[i].rfind("L2", 0) == 0) {
      subband_cats.push_back(cats[i]);
      subband_psnr.push_back(psnrs[i]);
    }
  }
  if (!lambda_cats.empty()) {
    write_line_chart(out_dir / "psnr_vs_lambda.png", "PSNR VS LAMBDA", lambda_cats, {{"PSNR", lambda_psnr}});
  }
  if (!subband_cats.empty()) {
    write_bar_chart(out_dir / "psnr_vs_subbands.png", "PSNR VS SUBBANDS", subband_cats, subband_psnr);
  }
  return rows.size() + order.size();
}

}  // namespace freqguide
