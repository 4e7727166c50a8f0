#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ganssl/badgan.hpp"
#include "ganssl/checkpoint.hpp"
#include "ganssl/goodgan.hpp"
#include "ganssl/harness.hpp"
#include "ganssl/png_io.hpp"

namespace ganssl::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve_data_dir(const TrainConfig& cfg) {
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  if (const char* env = std::getenv("GANSSL_DATA_DIR")) return env;
  return "data";
}

DatasetSpec spec_for(const TrainConfig& cfg) {
  DatasetSpec spec = DatasetSpec::by_name(cfg.dataset);
  if (cfg.dataset_train_count) spec.train_count = cfg.dataset_train_count;
  if (cfg.dataset_train_count) spec.val_count = std::min(cfg.dataset_val_count, spec.val_count);
  if (cfg.dataset_test_count) spec.test_count = cfg.dataset_test_count;
  return spec;
}

data::SSLSplit prepare_split(const TrainConfig& cfg) {
  DatasetSpec spec = spec_for(cfg);
  const std::uint64_t split_seed = cfg.fixed_split ? 0 : cfg.seed;
  data::Dataset ds;
  if (cfg.dataset.rfind("synthetic", 0) == 0) {
    const std::size_t k = spec.num_classes;
    const std::size_t per_class =
        (cfg.labeled_count + cfg.synthetic_unlabeled + k - 1) / k;
    ds = data::make_synthetic(spec, per_class, cfg.synthetic_noise,
                              split_seed, cfg.synthetic_test_per_class);
  } else {
    ds = data::load_dataset(spec, resolve_data_dir(cfg));
  }
  return cfg.selection == "representative"
             ? data::representative_select(ds, cfg.labeled_count, split_seed)
             : data::stratified_select(ds, cfg.labeled_count, split_seed);
}

const char* kCsvHeader =
    "run_id,epoch,loss_supervised,loss_unsupervised,loss_g_fm,"
    "loss_g_entropy,loss_g_density,loss_d_pair,loss_c_reinforce,"
    "loss_c_pseudo,train_acc,test_acc,seconds";

void append_csv_row(std::ofstream& csv, const std::string& run_id,
                    const EpochRow& r) {
  csv << run_id << ',' << r.epoch << ',' << r.loss_supervised << ','
      << r.loss_unsupervised << ',' << r.loss_g_fm << ',' << r.loss_g_entropy
      << ',' << r.loss_g_density << ',' << r.loss_d_pair << ','
      << r.loss_c_reinforce << ',' << r.loss_c_pseudo << ',' << r.train_acc
      << ',' << r.test_acc << ',' << r.seconds << '\n';
  csv.flush();
}

void write_run_json(const RunRecord& rec) {
  json j;
  j["run_id"] = rec.run_id;
  j["config"] = json::parse(config_to_json(rec.config));
  j["status"] = rec.status;
  j["final_test_accuracy"] = rec.final_test_accuracy;
  j["epochs_recorded"] = rec.rows.size();
  j["artifacts"] = rec.artifacts;
  std::ofstream f(fs::path(rec.dir) / "run.json", std::ios::trunc);
  f << j.dump(2) << '\n';
}

std::vector<nn::ParamRef<float>> net_tensors(nn::Net<float>& net,
                                             const std::string& prefix) {
  auto out = net.params(prefix);
  const auto state = net.state(prefix + "@state");
  out.insert(out.end(), state.begin(), state.end());
  return out;
}

}  // namespace

std::string run_id_for(const TrainConfig& cfg) {
  std::ostringstream id;
  id << cfg.model << '-' << cfg.dataset << "-n" << cfg.labeled_count << "-b"
     << cfg.batch_size << "-e" << cfg.epochs;
  if (cfg.model == "goodgan") id << "-w" << cfg.warmup_threshold;
  if (cfg.selection != "stratified") id << "-rep";
  id << "-s" << cfg.seed;
  return id.str();
}

RunRecord run_experiment(const TrainConfig& cfg, bool force) {
  RunRecord rec;
  rec.config = cfg;
  rec.run_id = run_id_for(cfg);
  rec.dir = (fs::path(cfg.output_dir) / rec.run_id).string();
  if (!force) {
    if (auto existing = load_run(rec.dir);
        existing && existing->status == "completed")
      return *existing;
  }
  fs::create_directories(rec.dir);
  {
    std::ofstream f(fs::path(rec.dir) / "config.json", std::ios::trunc);
    f << config_to_json(cfg) << '\n';
  }

  const auto split = prepare_split(cfg);
  std::ofstream csv(fs::path(rec.dir) / "metrics.csv", std::ios::trunc);
  csv << kCsvHeader << '\n';

  // trainer state (one of the three models)
  std::unique_ptr<badgan::BadGanState> bad;
  std::unique_ptr<goodgan::GoodGanState> good;
  std::unique_ptr<Classifier<float>> sup_c;
  nn::Adam<float> sup_opt(cfg.optimizer.lr, cfg.optimizer.beta1,
                          cfg.optimizer.beta2);
  const DatasetSpec spec = spec_for(cfg);
  if (cfg.model == "badgan") {
    bad = std::make_unique<badgan::BadGanState>(
        badgan::badgan_init(cfg, spec, split));
  } else if (cfg.model == "goodgan") {
    good = std::make_unique<goodgan::GoodGanState>(
        goodgan::goodgan_init(cfg, spec));
  } else {
    NetworkOptions opts;
    Rng init = make_rng(cfg.seed, Stream::kInit);
    sup_c = std::make_unique<Classifier<float>>(
        build_classifier<float>(spec, init, opts));
  }
  Classifier<float>* clf = bad ? &bad->c : (good ? &good->c : sup_c.get());

  const auto save_checkpoint = [&](const std::string& name) {
    std::vector<nn::ParamRef<float>> tensors = net_tensors(clf->net, "c");
    if (bad) {
      const auto g = net_tensors(bad->g.net, "g");
      tensors.insert(tensors.end(), g.begin(), g.end());
    }
    if (good) {
      const auto g = net_tensors(good->g.net, "g");
      const auto d = net_tensors(good->d.net, "d");
      tensors.insert(tensors.end(), g.begin(), g.end());
      tensors.insert(tensors.end(), d.begin(), d.end());
    }
    json meta;
    meta["run_id"] = rec.run_id;
    const std::string path = (fs::path(rec.dir) / name).string();
    ckpt::save(path, tensors, meta.dump());
    rec.artifacts.push_back(name);
  };

  double last_test_acc = 0.0;
  bool aborted = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !aborted; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.optimizer.anneal_after > 0 && epoch >= cfg.optimizer.anneal_after) {
      const double span =
          static_cast<double>(cfg.epochs - cfg.optimizer.anneal_after);
      const double lr = cfg.optimizer.lr *
                        static_cast<double>(cfg.epochs - epoch) / span;
      if (bad) {
        bad->opt_c.set_lr(lr);
        bad->opt_g.set_lr(lr);
      } else if (good) {
        good->opt_c.set_lr(lr);
        good->opt_g.set_lr(lr);
        good->opt_d.set_lr(lr);
      } else {
        sup_opt.set_lr(lr);
      }
    }
    EpochRow row;
    row.epoch = epoch;
    Rng rng(Rng::mix(cfg.seed, 0xE70C0000ULL + epoch), 0);
    data::BatchStream stream(split, cfg.batch_size, cfg.seed, epoch);
    std::size_t steps = 0;
    data::LabeledSet lb;
    Tensor<float> ub;
    while (stream.next(&lb, &ub)) {
      ++steps;
      if (bad) {
        const auto l = badgan::badgan_train_step(*bad, lb, ub, cfg, rng);
        if (!l.finite()) { aborted = true; break; }
        row.loss_supervised += l.supervised;
        row.loss_unsupervised += l.unsupervised;
        row.loss_g_fm += l.generator_fm;
        row.loss_g_entropy += l.generator_entropy_proxy;
        row.loss_g_density += l.generator_density_penalty;
      } else if (good) {
        const auto l =
            goodgan::goodgan_train_step(*good, lb, ub, cfg, epoch, rng);
        if (!l.finite()) { aborted = true; break; }
        row.loss_supervised += l.c_supervised;
        row.loss_d_pair += l.d_loss;
        row.loss_g_fm += l.g_adversarial;  // G's adversarial term
        row.loss_c_reinforce += l.c_adversarial_reinforce;
        row.loss_c_pseudo += l.c_pseudo_pair;
      } else {
        const double l =
            badgan::supervised_train_step(*sup_c, sup_opt, lb, rng);
        if (!std::isfinite(l)) { aborted = true; break; }
        row.loss_supervised += l;
      }
    }
    if (steps > 0) {
      const double inv = 1.0 / static_cast<double>(steps);
      row.loss_supervised *= inv;
      row.loss_unsupervised *= inv;
      row.loss_g_fm *= inv;
      row.loss_g_entropy *= inv;
      row.loss_g_density *= inv;
      row.loss_d_pair *= inv;
      row.loss_c_reinforce *= inv;
      row.loss_c_pseudo *= inv;
    }
    row.train_acc = badgan::evaluate_accuracy(*clf, split.labeled);
    const bool eval_epoch =
        epoch % cfg.eval_interval == 0 || epoch + 1 == cfg.epochs || aborted;
    if (eval_epoch)
      last_test_acc = badgan::evaluate_accuracy(*clf, split.test);
    row.test_acc = last_test_acc;
    row.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    append_csv_row(csv, rec.run_id, row);
    rec.rows.push_back(row);
    if (cfg.checkpoint_interval > 0 && !aborted &&
        (epoch + 1) % cfg.checkpoint_interval == 0)
      save_checkpoint("epoch" + std::to_string(epoch) + ".ckpt");
  }

  rec.final_test_accuracy = last_test_acc;
  rec.status = aborted ? "aborted" : "completed";
  if (!aborted) {
    save_checkpoint("final.ckpt");
    if (good) {
      std::vector<int> classes(spec.num_classes);
      for (std::size_t i = 0; i < classes.size(); ++i)
        classes[i] = static_cast<int>(i);
      Rng zr = make_rng(cfg.seed, Stream::kLatent);
      const auto latents = good->g.sample_z(10, zr);
      png::write((fs::path(rec.dir) / "conditional_grid.png").string(),
                 goodgan::conditional_grid(good->g, spec, classes, latents));
      rec.artifacts.push_back("conditional_grid.png");
      std::vector<float> z1(latents.row(0), latents.row(0) + good->g.z_dim);
      std::vector<float> z2(latents.row(1), latents.row(1) + good->g.z_dim);
      png::write((fs::path(rec.dir) / "interpolation_grid.png").string(),
                 goodgan::interpolation_grid(good->g, spec, z1, z2, 10,
                                             classes));
      rec.artifacts.push_back("interpolation_grid.png");
    }
  }
  rec.artifacts.push_back("metrics.csv");
  write_run_json(rec);
  return rec;
}

std::optional<RunRecord> load_run(const std::string& dir) {
  const fs::path jpath = fs::path(dir) / "run.json";
  if (!fs::exists(jpath)) return std::nullopt;
  json j;
  std::ifstream(jpath) >> j;
  RunRecord rec;
  rec.run_id = j["run_id"].get<std::string>();
  rec.dir = dir;
  rec.status = j["status"].get<std::string>();
  rec.final_test_accuracy = j["final_test_accuracy"].get<double>();
  rec.artifacts = j["artifacts"].get<std::vector<std::string>>();
  rec.config = config_from_json(j["config"].dump());
  std::ifstream csv(fs::path(dir) / "metrics.csv");
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    std::istringstream in(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (cells.size() != 13) continue;
    EpochRow r;
    r.epoch = std::stoull(cells[1]);
    r.loss_supervised = std::stod(cells[2]);
    r.loss_unsupervised = std::stod(cells[3]);
    r.loss_g_fm = std::stod(cells[4]);
    r.loss_g_entropy = std::stod(cells[5]);
    r.loss_g_density = std::stod(cells[6]);
    r.loss_d_pair = std::stod(cells[7]);
    r.loss_c_reinforce = std::stod(cells[8]);
    r.loss_c_pseudo = std::stod(cells[9]);
    r.train_acc = std::stod(cells[10]);
    r.test_acc = std::stod(cells[11]);
    r.seconds = std::stod(cells[12]);
    rec.rows.push_back(r);
  }
  return rec;
}

Aggregate aggregate(const std::vector<RunRecord>& records) {
  Aggregate a;
  for (const auto& r : records) {
    if (r.status != "completed") continue;
    a.mean += r.final_test_accuracy;
    ++a.count;
  }
  if (a.count == 0)
    throw std::invalid_argument("aggregate: no completed records");
  a.mean /= static_cast<double>(a.count);
  if (a.count > 1) {
    double ss = 0.0;
    for (const auto& r : records) {
      if (r.status != "completed") continue;
      ss += (r.final_test_accuracy - a.mean) *
            (r.final_test_accuracy - a.mean);
    }
    a.stddev = std::sqrt(ss / static_cast<double>(a.count - 1));
  }
  return a;
}

std::string format_aggregate(const Aggregate& a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f%%", a.mean * 100.0,
                a.stddev * 100.0);
  return buf;
}

SweepResult run_sweep(const SweepSpec& spec, bool force) {
  if (spec.values.empty() || spec.seeds.empty())
    throw std::invalid_argument("sweep grid is empty");
  if (spec.axis != "labeled_count" && spec.axis != "batch_size")
    throw std::invalid_argument("unknown sweep axis: " + spec.axis);
  SweepResult out;
  out.spec = spec;
  for (const auto value : spec.values) {
    for (const auto seed : spec.seeds) {
      TrainConfig cfg = spec.base;
      cfg.seed = seed;
      if (spec.axis == "labeled_count")
        cfg.labeled_count = value;
      else
        cfg.batch_size = value;
      const auto rec = run_experiment(cfg, force);
      if (rec.status == "completed")
        out.cells[value].push_back(rec);
      else
        out.aborted.push_back(rec.run_id);
    }
  }
  return out;
}

void write_sweep_csv(const SweepResult& r, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  f << r.spec.axis << ",mean_test_acc,std_test_acc,count\n";
  for (const auto& [value, records] : r.cells) {
    const auto a = aggregate(records);
    f << value << ',' << a.mean << ',' << a.stddev << ',' << a.count << '\n';
  }
}

void write_sweep_markdown(const SweepResult& r, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  f << "| " << r.spec.axis << " | test accuracy |\n|---|---|\n";
  for (const auto& [value, records] : r.cells)
    f << "| " << value << " | " << format_aggregate(aggregate(records))
      << " |\n";
  if (!r.aborted.empty()) {
    f << "\nAborted (excluded): ";
    for (std::size_t i = 0; i < r.aborted.size(); ++i)
      f << (i ? ", " : "") << r.aborted[i];
    f << '\n';
  }
}

}  // namespace ganssl::harness
