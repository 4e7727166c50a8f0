#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ganssl/harness.hpp"

namespace ganssl::harness {
namespace {

using nlohmann::json;

struct Key {
  std::string name;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

std::uint64_t to_u64(const std::string& v) {
  std::size_t pos = 0;
  const auto r = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
  return r;
}

double to_f64(const std::string& v) {
  std::size_t pos = 0;
  const auto r = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
  return r;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("not a boolean: " + v);
}

std::string from_f64(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

#define STR_KEY(keyname, field)                                        \
  {keyname, [](const TrainConfig& c) { return c.field; },              \
   [](TrainConfig& c, const std::string& v) { c.field = v; }}
#define U64_KEY(keyname, field)                                        \
  {keyname,                                                            \
   [](const TrainConfig& c) { return std::to_string(c.field); },       \
   [](TrainConfig& c, const std::string& v) { c.field = to_u64(v); }}
#define F64_KEY(keyname, field)                                        \
  {keyname, [](const TrainConfig& c) { return from_f64(c.field); },    \
   [](TrainConfig& c, const std::string& v) { c.field = to_f64(v); }}
#define BOOL_KEY(keyname, field)                                       \
  {keyname,                                                            \
   [](const TrainConfig& c) { return c.field ? "true" : "false"; },    \
   [](TrainConfig& c, const std::string& v) { c.field = to_bool(v); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      STR_KEY("model", model),
      STR_KEY("dataset", dataset),
      U64_KEY("labeled_count", labeled_count),
      STR_KEY("selection", selection),
      U64_KEY("batch_size", batch_size),
      U64_KEY("epochs", epochs),
      U64_KEY("warmup_threshold", warmup_threshold),
      U64_KEY("seed", seed),
      U64_KEY("eval_interval", eval_interval),
      U64_KEY("checkpoint_interval", checkpoint_interval),
      BOOL_KEY("pseudo_pairs_as_real", pseudo_pairs_as_real),
      BOOL_KEY("fixed_split", fixed_split),
      F64_KEY("baseline_decay", baseline_decay),
      F64_KEY("optimizer.lr", optimizer.lr),
      F64_KEY("optimizer.beta1", optimizer.beta1),
      F64_KEY("optimizer.beta2", optimizer.beta2),
      U64_KEY("optimizer.anneal_after", optimizer.anneal_after),
      F64_KEY("weights.fm", weights.fm),
      F64_KEY("weights.proxy", weights.proxy),
      F64_KEY("weights.density", weights.density),
      F64_KEY("weights.alpha", weights.alpha),
      F64_KEY("weights.alpha_c", weights.alpha_c),
      F64_KEY("weights.pseudo", weights.pseudo),
      STR_KEY("density.kind", density.kind),
      F64_KEY("density.bandwidth", density.bandwidth),
      F64_KEY("density.percentile_q", density.percentile_q),
      U64_KEY("density.max_reference", density.max_reference),
      U64_KEY("density.pretrain_epochs", density.pretrain_epochs),
      U64_KEY("dataset.train_count", dataset_train_count),
      U64_KEY("dataset.val_count", dataset_val_count),
      U64_KEY("dataset.test_count", dataset_test_count),
      STR_KEY("output_dir", output_dir),
      STR_KEY("data_dir", data_dir),
      F64_KEY("synthetic.noise", synthetic_noise),
      U64_KEY("synthetic.unlabeled", synthetic_unlabeled),
      U64_KEY("synthetic.test_per_class", synthetic_test_per_class),
  };
  return k;
}

#undef STR_KEY
#undef U64_KEY
#undef F64_KEY
#undef BOOL_KEY

const Key& find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.name == name) return k;
  throw std::invalid_argument("unknown config key: " + name);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void validate(const TrainConfig& c) {
  if (c.model != "badgan" && c.model != "goodgan" &&
      c.model != "supervised-baseline")
    throw std::invalid_argument("unknown model: " + c.model);
  if (c.selection != "stratified" && c.selection != "representative")
    throw std::invalid_argument("unknown selection: " + c.selection);
  if (c.batch_size == 0 || c.epochs == 0)
    throw std::invalid_argument("batch_size and epochs must be positive");
  if (c.weights.alpha < 0.0 || c.weights.alpha > 1.0)
    throw std::invalid_argument("weights.alpha must lie in [0,1]");
}

}  // namespace

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config file not readable: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(TrainConfig& cfg, const std::string& key,
                    const std::string& value) {
  find_key(key).set(cfg, value);
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  const TrainConfig defaults;
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(defaults));
  return out;
}

std::string config_to_json(const TrainConfig& cfg) {
  json j;
  for (const auto& k : keys()) j[k.name] = k.get(cfg);
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
  TrainConfig cfg;
  const json j = json::parse(text);
  for (auto it = j.begin(); it != j.end(); ++it)
    apply_override(cfg, it.key(), it.value().get<std::string>());
  validate(cfg);
  return cfg;
}

}  // namespace ganssl::harness
