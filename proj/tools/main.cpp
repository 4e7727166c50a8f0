// Command-line front end: train | sweep | generate | interpolate |
// report | verify. Exit codes: 0 success, 1 validation/usage error,
// 2 aborted run.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ganssl/checkpoint.hpp"
#include "ganssl/goodgan.hpp"
#include "ganssl/harness.hpp"
#include "ganssl/kernels.hpp"
#include "ganssl/png_io.hpp"
#include "../tests/acceptance_impl.hpp"

namespace fs = std::filesystem;
using namespace ganssl;

namespace {

TrainConfig load_config(const std::string& path,
                                 const std::vector<std::string>& overrides) {
  auto cfg = path.empty() ? TrainConfig{} : harness::parse_config_file(path);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must look like key=value: " + ov);
    harness::apply_override(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  return cfg;
}

// Rebuilds the generator of a persisted run and reloads its weights.
Generator<float> restore_generator(const std::string& run_dir,
                                   TrainConfig& cfg) {
  std::ifstream f(fs::path(run_dir) / "config.json");
  if (!f)
    throw std::invalid_argument("no config.json under " + run_dir);
  std::stringstream buf;
  buf << f.rdbuf();
  cfg = harness::config_from_json(buf.str());
  const DatasetSpec spec = DatasetSpec::by_name(cfg.dataset);
  Rng init = make_rng(cfg.seed, Stream::kInit);
  auto g = build_generator<float>(spec, cfg.model == "goodgan", init, 100);
  auto tensors = g.net.params("g");
  const auto state = g.net.state("g@state");
  tensors.insert(tensors.end(), state.begin(), state.end());
  ckpt::load((fs::path(run_dir) / "final.ckpt").string(), tensors);
  return g;
}

void require_fresh(const std::string& path, bool force) {
  if (!force && fs::exists(path))
    throw std::invalid_argument(path + " exists; use --force to overwrite");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised GAN training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, out_path, run_dir, axis = "batch_size";
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> values, seeds{0, 1, 2};
  std::vector<int> criteria;
  bool force = false, fast = false, allow_download = false;
  std::size_t steps = 10, latents = 10;
  std::string data_dir_flag, manifest_path = "configs/data_manifest.json";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value)");
    cmd->add_option("--override", overrides,
                    "dotted key=value, applied after the file");
    cmd->add_option("--data-dir", data_dir_flag,
                    "dataset root (overrides data_dir from the config)");
    cmd->add_flag("--allow-download", allow_download,
                  "fetch missing dataset files from the manifest URLs");
    cmd->add_option("--manifest", manifest_path,
                    "dataset manifest used with --allow-download");
    cmd->add_flag("--force", force, "redo work even if outputs exist");
  };

  auto* train = app.add_subcommand("train", "run one training config");
  add_common(train);

  auto* sweep = app.add_subcommand("sweep", "grid over one axis x seeds");
  add_common(sweep);
  sweep->add_option("--axis", axis, "labeled_count or batch_size");
  sweep->add_option("--values", values, "axis values")->required();
  sweep->add_option("--seeds", seeds, "seeds (default 0 1 2)");

  auto* generate = app.add_subcommand("generate", "image grid from a run");
  generate->add_option("--run", run_dir, "run directory")->required();
  generate->add_option("--out", out_path, "output PNG")->required();
  generate->add_option("--latents", latents, "columns in the grid");
  generate->add_flag("--force", force, "overwrite existing output");

  auto* interp = app.add_subcommand("interpolate", "latent interpolation grid");
  interp->add_option("--run", run_dir, "run directory")->required();
  interp->add_option("--out", out_path, "output PNG")->required();
  interp->add_option("--steps", steps, "interpolation rows");
  interp->add_flag("--force", force, "overwrite existing output");

  auto* report = app.add_subcommand("report", "Markdown summary of a run dir");
  report->add_option("--dir", run_dir, "directory holding runs")->required();
  report->add_option("--out", out_path, "output file (default: stdout)");
  report->add_flag("--force", force, "overwrite existing output");

  auto* verify = app.add_subcommand("verify", "acceptance checks, pass/fail");
  verify->add_flag("--fast", fast, "skip the long training criteria");
  verify->add_option("--criterion", criteria, "run only these (1-10)");

  // --help listing every config key with its default
  std::string help_keys = "config keys (defaults):\n";
  for (const auto& [k, v] : harness::config_keys())
    help_keys += "  " + k + " = " + v + "\n";
  app.footer(help_keys);

  CLI11_PARSE(app, argc, argv);

  // Applies the data-related flags and, when asked, fetches any dataset
  // files the manifest knows about before training starts.
  auto finish_config = [&](TrainConfig cfg) {
    if (!data_dir_flag.empty()) cfg.data_dir = data_dir_flag;
    if (allow_download && cfg.dataset != "synthetic") {
      std::string dir = cfg.data_dir;
      if (dir.empty())
        if (const char* env = std::getenv("GANSSL_DATA_DIR")) dir = env;
      if (dir.empty()) dir = "data";
      data::fetch_dataset(DatasetSpec::by_name(cfg.dataset), dir,
                          manifest_path);
    }
    return cfg;
  };

  try {
    if (train->parsed()) {
      const auto rec = harness::run_experiment(
          finish_config(load_config(config_path, overrides)), force);
      std::cout << rec.run_id << ": " << rec.status << ", final test acc "
                << rec.final_test_accuracy << "\n";
      return rec.status == "completed" ? 0 : 2;
    }
    if (sweep->parsed()) {
      harness::SweepSpec spec;
      spec.base = finish_config(load_config(config_path, overrides));
      spec.axis = axis;
      spec.values = values;
      spec.seeds = seeds;
      const auto result = harness::run_sweep(spec, force);
      const fs::path dir = spec.base.output_dir;
      fs::create_directories(dir);
      harness::write_sweep_csv(result, (dir / "sweep.csv").string());
      harness::write_sweep_markdown(result, (dir / "sweep.md").string());
      std::cout << "sweep written to " << (dir / "sweep.md").string() << "\n";
      return result.aborted.empty() ? 0 : 2;
    }
    if (generate->parsed()) {
      require_fresh(out_path, force);
      TrainConfig cfg;
      auto g = restore_generator(run_dir, cfg);
      const DatasetSpec spec = DatasetSpec::by_name(cfg.dataset);
      Rng zr = make_rng(cfg.seed, Stream::kLatent);
      const auto z = g.sample_z(latents, zr);
      if (g.conditional) {
        std::vector<int> classes(spec.num_classes);
        for (std::size_t i = 0; i < classes.size(); ++i)
          classes[i] = static_cast<int>(i);
        png::write(out_path, goodgan::conditional_grid(g, spec, classes, z));
      } else {
        // unconditional: one row per latent batch of `latents` samples
        Rng rng(0);
        const auto imgs = g.generate(z, nullptr, false, rng);
        Tensor<float> grid(std::vector<std::size_t>{
            spec.channels, spec.height, latents * spec.width});
        for (std::size_t col = 0; col < latents; ++col)
          for (std::size_t ch = 0; ch < spec.channels; ++ch)
            for (std::size_t i = 0; i < spec.height; ++i)
              for (std::size_t j = 0; j < spec.width; ++j)
                grid.data[(ch * spec.height + i) * latents * spec.width +
                          col * spec.width + j] =
                    imgs.at(col, (ch * spec.height + i) * spec.width + j);
        png::write(out_path, grid);
      }
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (interp->parsed()) {
      require_fresh(out_path, force);
      TrainConfig cfg;
      auto g = restore_generator(run_dir, cfg);
      if (!g.conditional)
        throw std::invalid_argument(
            "interpolate needs a conditional generator run");
      const DatasetSpec spec = DatasetSpec::by_name(cfg.dataset);
      std::vector<int> classes(spec.num_classes);
      for (std::size_t i = 0; i < classes.size(); ++i)
        classes[i] = static_cast<int>(i);
      Rng zr = make_rng(cfg.seed, Stream::kLatent);
      const auto z = g.sample_z(2, zr);
      std::vector<float> z1(z.row(0), z.row(0) + g.z_dim);
      std::vector<float> z2(z.row(1), z.row(1) + g.z_dim);
      png::write(out_path, goodgan::interpolation_grid(g, spec, z1, z2,
                                                       steps, classes));
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (report->parsed()) {
      const std::string md = harness::report(run_dir);
      if (out_path.empty()) {
        std::cout << md;
      } else {
        require_fresh(out_path, force);
        std::ofstream(out_path, std::ios::trunc) << md;
        std::cout << "wrote " << out_path << "\n";
      }
      return 0;
    }
    if (verify->parsed()) {
      accept::Options opt;
      opt.fast = fast;
      opt.criteria = criteria;
      return accept::run(opt);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
