#include "ganssl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace ganssl::ckpt {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'G', 'S', 'S', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(float) == 4);

struct Entry {
  std::vector<std::size_t> shape;
  std::uint64_t offset = 0;  // bytes past the data section start
  std::uint64_t count = 0;
};

json read_manifest(std::ifstream& f, const std::string& path,
                   std::uint64_t* data_start) {
  char magic[8];
  std::uint32_t version;
  std::uint64_t mlen;
  f.read(magic, 8);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&mlen), 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint archive: " + path);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);
  std::string mtext(mlen, '\0');
  f.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!f) throw std::runtime_error("truncated checkpoint manifest: " + path);
  *data_start = 20 + mlen;
  return json::parse(mtext);
}

}  // namespace

void save(const std::string& path,
          const std::vector<nn::ParamRef<float>>& tensors,
          const std::string& meta_json) {
  json manifest;
  manifest["meta"] = json::parse(meta_json);
  manifest["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    json e;
    e["name"] = t.name;
    e["shape"] = t.value->shape;
    e["offset"] = offset;
    manifest["tensors"].push_back(e);
    offset += t.value->count() * 4;
  }
  const std::string mtext = manifest.dump();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kMagic, 8);
  f.write(reinterpret_cast<const char*>(&kVersion), 4);
  const std::uint64_t mlen = mtext.size();
  f.write(reinterpret_cast<const char*>(&mlen), 8);
  f.write(mtext.data(), static_cast<std::streamsize>(mlen));
  for (const auto& t : tensors)
    f.write(reinterpret_cast<const char*>(t.value->data.data()),
            static_cast<std::streamsize>(t.value->count() * 4));
  if (!f) throw std::runtime_error("short write saving checkpoint: " + path);
}

void load(const std::string& path,
          const std::vector<nn::ParamRef<float>>& tensors,
          std::string* meta_json) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::uint64_t data_start = 0;
  const json manifest = read_manifest(f, path, &data_start);
  if (meta_json) *meta_json = manifest["meta"].dump();
  std::map<std::string, Entry> index;
  for (const auto& e : manifest["tensors"]) {
    Entry entry;
    entry.shape = e["shape"].get<std::vector<std::size_t>>();
    entry.offset = e["offset"].get<std::uint64_t>();
    entry.count = 1;
    for (auto d : entry.shape) entry.count *= d;
    index[e["name"].get<std::string>()] = entry;
  }
  for (const auto& t : tensors) {
    const auto it = index.find(t.name);
    if (it == index.end())
      throw std::runtime_error("checkpoint " + path + " is missing tensor " +
                               t.name);
    if (it->second.shape != t.value->shape)
      throw std::runtime_error("checkpoint shape mismatch for " + t.name);
    f.seekg(static_cast<std::streamoff>(data_start + it->second.offset));
    f.read(reinterpret_cast<char*>(t.value->data.data()),
           static_cast<std::streamsize>(it->second.count * 4));
    if (!f)
      throw std::runtime_error("truncated checkpoint data for " + t.name);
  }
}

std::vector<std::string> list(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::uint64_t data_start = 0;
  const json manifest = read_manifest(f, path, &data_start);
  std::vector<std::string> names;
  for (const auto& e : manifest["tensors"])
    names.push_back(e["name"].get<std::string>());
  return names;
}

}  // namespace ganssl::ckpt
