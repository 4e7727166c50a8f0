// Config parsing, aggregation arithmetic, run persistence and report
// determinism on a desk-scale synthetic run.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ganssl/harness.hpp"

using namespace ganssl;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& leaf) {
  const auto p = fs::temp_directory_path() / "ganssl_test" / leaf;
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("config text parsing with comments and dotted keys") {
  const auto cfg = harness::parse_config_text(
      "# a comment\n"
      "model = goodgan\n"
      "dataset = synthetic-moons\n"
      "labeled_count = 40\n"
      "optimizer.lr = 0.001\n"
      "weights.alpha = 0.25\n"
      "density.kind = kde-pixel\n"
      "pseudo_pairs_as_real = true\n"
      "\n");
  CHECK(cfg.model == "goodgan");
  CHECK(cfg.dataset == "synthetic-moons");
  CHECK(cfg.labeled_count == 40);
  CHECK(cfg.optimizer.lr == doctest::Approx(0.001));
  CHECK(cfg.weights.alpha == doctest::Approx(0.25));
  CHECK(cfg.density.kind == "kde-pixel");
  CHECK(cfg.pseudo_pairs_as_real);
}

TEST_CASE("unknown keys and invalid values are rejected") {
  CHECK_THROWS(harness::parse_config_text("no_such_key = 1\n"));
  CHECK_THROWS(harness::parse_config_text("model = vae\n"));
  CHECK_THROWS(harness::parse_config_text("batch_size = 0\n"));
  CHECK_THROWS(harness::parse_config_text("weights.alpha = 2.0\n"));
  TrainConfig cfg;
  CHECK_THROWS(harness::apply_override(cfg, "bogus", "1"));
}

TEST_CASE("config json roundtrip preserves every key") {
  TrainConfig cfg;
  cfg.model = "badgan";
  cfg.dataset = "cifar10";
  cfg.labeled_count = 4000;
  cfg.batch_size = 50;
  cfg.epochs = 7;
  cfg.seed = 11;
  cfg.optimizer.lr = 6e-4;
  cfg.weights.density = 0.05;
  cfg.density.kind = "kde-pixel";
  cfg.density.percentile_q = 25;
  cfg.pseudo_pairs_as_real = true;
  cfg.selection = "representative";
  const auto back = harness::config_from_json(harness::config_to_json(cfg));
  CHECK(back.model == cfg.model);
  CHECK(back.dataset == cfg.dataset);
  CHECK(back.labeled_count == cfg.labeled_count);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.seed == cfg.seed);
  CHECK(back.optimizer.lr == doctest::Approx(cfg.optimizer.lr));
  CHECK(back.weights.density == doctest::Approx(cfg.weights.density));
  CHECK(back.density.kind == cfg.density.kind);
  CHECK(back.density.percentile_q == doctest::Approx(25));
  CHECK(back.pseudo_pairs_as_real == cfg.pseudo_pairs_as_real);
  CHECK(back.selection == cfg.selection);
}

TEST_CASE("config_keys covers the documented surface") {
  const auto keys = harness::config_keys();
  CHECK(keys.size() >= 25);
  bool has_lr = false, has_alpha = false;
  for (const auto& [k, v] : keys) {
    if (k == "optimizer.lr") has_lr = true;
    if (k == "weights.alpha") has_alpha = true;
  }
  CHECK(has_lr);
  CHECK(has_alpha);
}

TEST_CASE("run ids encode the experiment axes") {
  TrainConfig cfg;
  cfg.model = "badgan";
  cfg.dataset = "mnist";
  cfg.labeled_count = 100;
  cfg.batch_size = 100;
  cfg.epochs = 100;
  cfg.seed = 2;
  CHECK(harness::run_id_for(cfg) == "badgan-mnist-n100-b100-e100-s2");
  cfg.model = "goodgan";
  cfg.warmup_threshold = 200;
  CHECK(harness::run_id_for(cfg) == "goodgan-mnist-n100-b100-e100-w200-s2");
  cfg.selection = "representative";
  CHECK(harness::run_id_for(cfg) ==
        "goodgan-mnist-n100-b100-e100-w200-rep-s2");
}

TEST_CASE("aggregate: textbook example and formatting") {
  std::vector<harness::RunRecord> rs(3);
  rs[0].final_test_accuracy = 0.98;
  rs[1].final_test_accuracy = 0.99;
  rs[2].final_test_accuracy = 1.00;
  for (auto& r : rs) r.status = "completed";
  const auto a = harness::aggregate(rs);
  CHECK(a.count == 3);
  CHECK(a.mean == doctest::Approx(0.99));
  CHECK(a.stddev == doctest::Approx(0.01));
  CHECK(harness::format_aggregate(a) == "99.00±1.00%");
  // aborted runs are excluded
  rs[1].status = "aborted";
  CHECK(harness::aggregate(rs).count == 2);
  // single run has no sample std
  const auto one = harness::aggregate({rs[0]});
  CHECK(one.stddev == 0.0);
}

TEST_CASE("run_experiment persists, reloads, and reports byte-stably") {
  TrainConfig cfg;
  cfg.model = "supervised-baseline";
  cfg.dataset = "synthetic-gaussians";
  cfg.labeled_count = 16;
  cfg.batch_size = 50;
  cfg.epochs = 3;
  cfg.eval_interval = 1;
  cfg.synthetic_unlabeled = 200;
  cfg.output_dir = temp_dir("runs");
  const auto rec = harness::run_experiment(cfg, true);
  CHECK(rec.status == "completed");
  CHECK(rec.rows.size() == 3);
  CHECK(fs::exists(fs::path(rec.dir) / "config.json"));
  CHECK(fs::exists(fs::path(rec.dir) / "metrics.csv"));
  CHECK(fs::exists(fs::path(rec.dir) / "run.json"));
  CHECK(fs::exists(fs::path(rec.dir) / "final.ckpt"));

  // reload agrees with the in-memory record
  const auto loaded = harness::load_run(rec.dir);
  REQUIRE(loaded.has_value());
  CHECK(loaded->run_id == rec.run_id);
  CHECK(loaded->rows.size() == rec.rows.size());
  CHECK(loaded->final_test_accuracy ==
        doctest::Approx(rec.final_test_accuracy));

  // idempotence: a second call without force reuses the record
  const auto again = harness::run_experiment(cfg, false);
  CHECK(again.final_test_accuracy ==
        doctest::Approx(rec.final_test_accuracy));

  // a forced rerun with the same seed reproduces the metrics bytes
  // (modulo the wall-clock column, which is measurement, not math)
  const auto strip_seconds = [](const fs::path& p) {
    std::ifstream f(p);
    std::string line, out;
    while (std::getline(f, line))
      out += line.substr(0, line.rfind(',')) + '\n';
    return out;
  };
  const std::string bytes1 = strip_seconds(fs::path(rec.dir) / "metrics.csv");
  harness::run_experiment(cfg, true);
  const std::string bytes2 = strip_seconds(fs::path(rec.dir) / "metrics.csv");
  CHECK(bytes1 == bytes2);

  // reports over the directory are deterministic and mention the run
  const auto r1 = harness::report(cfg.output_dir);
  const auto r2 = harness::report(cfg.output_dir);
  CHECK(r1 == r2);
  CHECK(r1.find(rec.run_id) != std::string::npos);
}

TEST_CASE("sweep aggregates across seeds and writes artifacts") {
  harness::SweepSpec spec;
  spec.base.model = "supervised-baseline";
  spec.base.dataset = "synthetic-gaussians";
  spec.base.labeled_count = 16;
  spec.base.batch_size = 50;
  spec.base.epochs = 2;
  spec.base.synthetic_unlabeled = 200;
  spec.base.output_dir = temp_dir("sweep");
  spec.axis = "labeled_count";
  spec.values = {8, 16};
  spec.seeds = {0, 1};
  const auto result = harness::run_sweep(spec);
  CHECK(result.cells.size() == 2);
  for (const auto& [value, records] : result.cells)
    CHECK(records.size() == 2);
  const auto csv = temp_dir("sweep") + "/sweep.csv";
  const auto md = temp_dir("sweep") + "/sweep.md";
  harness::write_sweep_csv(result, csv);
  harness::write_sweep_markdown(result, md);
  CHECK(fs::file_size(csv) > 0);
  CHECK(fs::file_size(md) > 0);
}
