// Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime failure.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqguide/harness.hpp"

namespace {

using freqguide::ExperimentConfig;
namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config_path, "config file (section.key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "root seed of every random draw")->default_val(0);
  auto* out = cmd->add_option("--out", c.out, "output directory (checkpoint file for training)");
  if (out_required) out->required();
  cmd->add_option("--set", c.overrides, "override one key, e.g. --set guidance.lambda=0.5");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  for (const std::string& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw freqguide::UsageError("--set expects key=value, got '" + o + "'");
    cfg.set(o.substr(0, eq), o.substr(eq + 1));
  }
  cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

void print_summary(const freqguide::RunSummary& s) {
  std::printf("%-12s n=%zu psnr=%.3f dB ssim=%.4f kernel_mse=%.3g input_psnr=%.3f dB\n", s.label.c_str(),
              s.metrics.count, s.metrics.psnr_db, s.metrics.ssim, s.metrics.kernel_mse, s.input_psnr_db);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-guided blind diffusion restoration: toy corpus, priors, restoration and ablations"};
  app.require_subcommand(1);

  Common common;
  std::string corpus, inputs;
  std::vector<std::string> runs;

  auto* synth = app.add_subcommand("synth-data", "synthesize the toy image corpus");
  add_common(synth, common);

  auto* train = app.add_subcommand("train-denoiser", "train the image prior; --out is the checkpoint path");
  add_common(train, common);
  train->add_option("--corpus", corpus, "corpus directory from synth-data")->required();

  auto* train_k = app.add_subcommand("train-kernel-prior", "train the kernel prior; --out is the checkpoint path");
  add_common(train_k, common);

  auto* degrade = app.add_subcommand("degrade", "blur and add noise to corpus images");
  add_common(degrade, common);
  degrade->add_option("--corpus", corpus, "corpus directory from synth-data")->required();

  auto* restore = app.add_subcommand("restore", "restore a degraded set");
  add_common(restore, common);
  restore->add_option("--inputs", inputs, "directory written by degrade")->required();

  auto* ab_l = app.add_subcommand("ablate-lambda", "sweep lambda over 0, 0.01, 0.1, 0.5, 1, 5");
  add_common(ab_l, common);
  ab_l->add_option("--inputs", inputs, "directory written by degrade")->required();

  auto* ab_s = app.add_subcommand("ablate-subbands", "compare L2, L2+H1, L2+H2 and L2+H3 guidance");
  add_common(ab_s, common);
  ab_s->add_option("--inputs", inputs, "directory written by degrade")->required();

  auto* report = app.add_subcommand("report", "aggregate run directories into tables and plots");
  add_common(report, common);
  report->add_option("--runs", runs, "run or ablation directories")->required();

  auto* show = app.add_subcommand("show-config", "print the fully resolved configuration");
  add_common(show, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ExperimentConfig cfg = resolve(common);
    const fs::path out = common.out;
    if (synth->parsed()) {
      freqguide::cmd_synth_data(cfg, out);
      std::printf("wrote %zu images to %s\n", cfg.data.count, out.c_str());
    } else if (train->parsed()) {
      freqguide::cmd_train_denoiser(cfg, corpus, out);
      std::printf("saved image prior to %s\n", out.c_str());
    } else if (train_k->parsed()) {
      freqguide::cmd_train_kernel_prior(cfg, out);
      std::printf("saved kernel prior to %s\n", out.c_str());
    } else if (degrade->parsed()) {
      freqguide::cmd_degrade(cfg, corpus, out);
      std::printf("wrote degraded set to %s\n", out.c_str());
    } else if (restore->parsed()) {
      print_summary(freqguide::cmd_restore(cfg, inputs, out));
    } else if (ab_l->parsed()) {
      for (const auto& s : freqguide::cmd_ablate_lambda(cfg, inputs, out)) print_summary(s);
    } else if (ab_s->parsed()) {
      for (const auto& s : freqguide::cmd_ablate_subbands(cfg, inputs, out)) print_summary(s);
    } else if (report->parsed()) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      const std::size_t rows = freqguide::cmd_report(dirs, out);
      std::printf("wrote %zu summary rows to %s\n", rows, (out / "summary.csv").c_str());
    } else if (show->parsed()) {
      std::cout << cfg.to_text();
    }
  } catch (const freqguide::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
