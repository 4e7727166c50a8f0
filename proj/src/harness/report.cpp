#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ganssl/harness.hpp"

namespace ganssl::harness {

namespace fs = std::filesystem;

namespace {

std::string axis_label(const RunRecord& r, const std::string& axis) {
  if (axis == "batch_size") return std::to_string(r.config.batch_size);
  if (axis == "labeled_count") return std::to_string(r.config.labeled_count);
  if (axis == "seed") return std::to_string(r.config.seed);
  return r.run_id;
}

void emit_curves(const std::vector<RunRecord>& records,
                 const std::string& axis, const std::string& path,
                 double EpochRow::* field, const char* what) {
  if (records.empty())
    throw std::invalid_argument(std::string("no records for ") + what);
  std::ofstream f(path, std::ios::trunc);
  f << "epoch";
  std::size_t max_epochs = 0;
  for (const auto& r : records) {
    f << ',' << what << '_' << axis << '_' << axis_label(r, axis);
    max_epochs = std::max(max_epochs, r.rows.size());
  }
  f << '\n';
  for (std::size_t e = 0; e < max_epochs; ++e) {
    f << e;
    for (const auto& r : records) {
      f << ',';
      if (e < r.rows.size()) f << r.rows[e].*field;
    }
    f << '\n';
  }
}

}  // namespace

void emit_loss_curves(const std::vector<RunRecord>& records,
                      const std::string& axis, const std::string& path) {
  emit_curves(records, axis, path, &EpochRow::loss_g_fm, "gloss");
}

void emit_accuracy_curves(const std::vector<RunRecord>& records,
                          const std::string& axis, const std::string& path) {
  emit_curves(records, axis, path, &EpochRow::test_acc, "acc");
}

std::string report(const std::string& run_dir) {
  std::vector<RunRecord> runs;
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(run_dir))
    if (entry.is_directory()) dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs)
    if (auto r = load_run(d)) runs.push_back(*r);

  // group key: everything except the seed
  std::map<std::string, std::vector<RunRecord>> groups;
  for (const auto& r : runs) {
    TrainConfig keyed = r.config;
    keyed.seed = 0;
    groups[run_id_for(keyed)].push_back(r);
  }

  std::ostringstream md;
  md << "# Experiment report\n\n";
  md << "| configuration | seeds | test accuracy | status |\n|---|---|---|---|\n";
  for (const auto& [key, records] : groups) {
    std::size_t completed = 0;
    for (const auto& r : records)
      if (r.status == "completed") ++completed;
    md << "| " << key << " | " << records.size() << " | ";
    if (completed > 0) {
      md << format_aggregate(aggregate(records));
    } else {
      md << "-";
    }
    md << " | " << (completed == records.size() ? "ok" : "partial aborts")
       << " |\n";
  }
  md << "\n## Runs\n\n";
  for (const auto& r : runs) {
    md << "- `" << r.run_id << "` (" << r.status << ", "
       << r.rows.size() << " epochs, final test acc "
       << r.final_test_accuracy << ")";
    for (const auto& a : r.artifacts) md << " [" << a << "](" << r.run_id
                                         << "/" << a << ")";
    md << '\n';
  }
  return md.str();
}

}  // namespace ganssl::harness
