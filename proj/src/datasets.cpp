#include "ganssl/datasets.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace ganssl::data {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("dataset file missing or unreadable: " +
                                   p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void verify_manifest(const DatasetSpec& spec, const fs::path& dir,
                     const std::vector<fs::path>& files, bool cont) {
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) return;
  json manifest;
  std::ifstream(mpath) >> manifest;
  if (!manifest.contains(spec.name)) return;
  for (const auto& entry : manifest[spec.name]["files"]) {
    if (!entry.contains("crc32")) continue;
    const fs::path f = dir / entry["name"].get<std::string>();
    const bool listed =
        std::find(files.begin(), files.end(), f) != files.end();
    if (!listed || !fs::exists(f)) continue;
    const auto bytes = read_file(f);
    const auto crc = crc32(0, bytes.data(), static_cast<uInt>(bytes.size()));
    std::uint32_t want = 0;
    std::stringstream ss;
    ss << std::hex << entry["crc32"].get<std::string>();
    ss >> want;
    if (crc != want) {
      const std::string msg = "checksum mismatch for " + f.string();
      if (!cont) throw std::runtime_error(msg);
      std::cerr << "warning: " << msg << " (continuing)\n";
    }
  }
}

// ---------------------------------------------------------------------------
// MNIST IDX

LabeledSet load_idx_pair(const fs::path& images_path,
                         const fs::path& labels_path, std::size_t offset,
                         std::size_t count) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16 || be32(img.data()) != 0x00000803)
    throw std::runtime_error("bad IDX image magic in " + images_path.string());
  if (lab.size() < 8 || be32(lab.data()) != 0x00000801)
    throw std::runtime_error("bad IDX label magic in " + labels_path.string());
  const std::size_t n = be32(img.data() + 4);
  const std::size_t h = be32(img.data() + 8);
  const std::size_t w = be32(img.data() + 12);
  if (be32(lab.data() + 4) != n)
    throw std::runtime_error("IDX image/label count mismatch in " +
                             images_path.string());
  if (offset + count > n)
    throw std::runtime_error("IDX file " + images_path.string() +
                             " holds fewer records than requested");
  if (img.size() < 16 + n * h * w)
    throw std::runtime_error("truncated IDX image file " +
                             images_path.string());
  LabeledSet out;
  out.images = Tensor<float>(count, h * w);
  out.labels.resize(count);
  const std::uint8_t* px = img.data() + 16 + offset * h * w;
  for (std::size_t i = 0; i < count * h * w; ++i)
    out.images.data[i] = px[i] / 255.0f;
  for (std::size_t i = 0; i < count; ++i)
    out.labels[i] = lab[8 + offset + i];
  return out;
}

Dataset load_mnist(const DatasetSpec& spec, const fs::path& dir,
                   bool verify, bool cont) {
  const fs::path ti = dir / "train-images-idx3-ubyte";
  const fs::path tl = dir / "train-labels-idx1-ubyte";
  const fs::path si = dir / "t10k-images-idx3-ubyte";
  const fs::path sl = dir / "t10k-labels-idx1-ubyte";
  if (verify) verify_manifest(spec, dir, {ti, tl, si, sl}, cont);
  Dataset ds;
  ds.spec = spec;
  ds.train = load_idx_pair(ti, tl, 0, spec.train_count);
  if (spec.val_count > 0)
    ds.validation = load_idx_pair(ti, tl, spec.train_count, spec.val_count);
  ds.test = load_idx_pair(si, sl, 0, spec.test_count);
  return ds;
}

// ---------------------------------------------------------------------------
// CIFAR10 binary batches (1 label byte + 3072 pixel bytes per record)

void append_cifar_records(const fs::path& p, std::size_t want,
                          LabeledSet& out, std::size_t& filled) {
  const auto bytes = read_file(p);
  constexpr std::size_t kRec = 3073;
  if (bytes.size() % kRec != 0)
    throw std::runtime_error("corrupt cifar10 batch (size) " + p.string());
  const std::size_t n = std::min(bytes.size() / kRec, want - filled);
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kRec;
    if (rec[0] > 9)
      throw std::runtime_error("corrupt cifar10 label in " + p.string());
    out.labels[filled] = rec[0];
    float* dst = out.images.row(filled);
    for (std::size_t i = 0; i < 3072; ++i) dst[i] = rec[1 + i] / 255.0f;
    ++filled;
  }
}

Dataset load_cifar10(const DatasetSpec& spec, const fs::path& dir,
                     bool verify, bool cont) {
  std::vector<fs::path> train_files;
  for (int b = 1; b <= 5; ++b)
    train_files.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
  const fs::path test_file = dir / "test_batch.bin";
  if (verify) {
    auto all = train_files;
    all.push_back(test_file);
    verify_manifest(spec, dir, all, cont);
  }
  Dataset ds;
  ds.spec = spec;
  const std::size_t total = spec.train_count + spec.val_count;
  LabeledSet train_all;
  train_all.images = Tensor<float>(total, 3072);
  train_all.labels.resize(total);
  std::size_t filled = 0;
  for (const auto& f : train_files) {
    if (filled == total) break;
    if (!fs::exists(f) && filled > 0) continue;
    append_cifar_records(f, total, train_all, filled);
  }
  if (filled != total)
    throw std::runtime_error("cifar10 train batches hold fewer than " +
                             std::to_string(total) + " records");
  if (spec.val_count > 0) {
    // last val_count records reserved for validation
    ds.train.images = Tensor<float>(spec.train_count, 3072);
    ds.train.labels.assign(train_all.labels.begin(),
                           train_all.labels.begin() + spec.train_count);
    std::copy(train_all.images.data.begin(),
              train_all.images.data.begin() + spec.train_count * 3072,
              ds.train.images.data.begin());
    LabeledSet val;
    val.images = Tensor<float>(spec.val_count, 3072);
    val.labels.assign(train_all.labels.begin() + spec.train_count,
                      train_all.labels.end());
    std::copy(train_all.images.data.begin() + spec.train_count * 3072,
              train_all.images.data.end(), val.images.data.begin());
    ds.validation = std::move(val);
  } else {
    ds.train = std::move(train_all);
  }
  ds.test.images = Tensor<float>(spec.test_count, 3072);
  ds.test.labels.resize(spec.test_count);
  filled = 0;
  append_cifar_records(test_file, spec.test_count, ds.test, filled);
  if (filled != spec.test_count)
    throw std::runtime_error("cifar10 test batch holds fewer than " +
                             std::to_string(spec.test_count) + " records");
  return ds;
}

// ---------------------------------------------------------------------------
// SVHN cropped-digits MAT5 container

struct MatArray {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;  // widened regardless of storage class
};

struct Cursor {
  const std::uint8_t* p;
  std::size_t n;
  std::size_t off = 0;

  void need(std::size_t k, const char* what) const {
    if (off + k > n)
      throw std::runtime_error(std::string("truncated .mat element: ") + what);
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v;
    std::memcpy(&v, p + off, 4);
    off += 4;
    return v;
  }
  const std::uint8_t* bytes(std::size_t k, const char* what) {
    need(k, what);
    const std::uint8_t* r = p + off;
    off += k;
    return r;
  }
  void pad8() { off = (off + 7) & ~std::size_t(7); }
};

constexpr std::uint32_t kMiUInt8 = 2;
constexpr std::uint32_t kMiInt32 = 5;
constexpr std::uint32_t kMiUInt32 = 6;
constexpr std::uint32_t kMiDouble = 9;
constexpr std::uint32_t kMiMatrix = 14;
constexpr std::uint32_t kMiCompressed = 15;

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* src,
                                       std::size_t n) {
  std::vector<std::uint8_t> out;
  out.resize(std::max<std::size_t>(n * 4, 1 << 16));
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw std::runtime_error("inflateInit failed");
  zs.next_in = const_cast<Bytef*>(src);
  zs.avail_in = static_cast<uInt>(n);
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = out.data() + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw std::runtime_error("corrupt compressed .mat element");
    }
    written = out.size() - zs.avail_out;
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

// Reads one data element tag (handling the packed small-element form).
void read_tag(Cursor& c, std::uint32_t& type, std::uint32_t& size,
              const std::uint8_t*& data) {
  const std::uint32_t first = c.u32();
  if (first >> 16) {  // small data element
    type = first & 0xffff;
    size = first >> 16;
    data = c.bytes(4, "small element");
  } else {
    type = first;
    size = c.u32();
    data = c.bytes(size, "element payload");
    c.pad8();
  }
}

MatArray parse_matrix(const std::uint8_t* p, std::size_t n) {
  Cursor c{p, n};
  std::uint32_t type, size;
  const std::uint8_t* d;
  read_tag(c, type, size, d);  // array flags
  if (type != kMiUInt32 || size < 8)
    throw std::runtime_error("bad .mat array flags");
  read_tag(c, type, size, d);  // dimensions
  if (type != kMiInt32) throw std::runtime_error("bad .mat dimensions");
  MatArray arr;
  for (std::size_t i = 0; i < size / 4; ++i) {
    std::int32_t v;
    std::memcpy(&v, d + 4 * i, 4);
    arr.dims.push_back(static_cast<std::size_t>(v));
  }
  read_tag(c, type, size, d);  // name
  arr.name.assign(reinterpret_cast<const char*>(d), size);
  read_tag(c, type, size, d);  // real part
  const std::size_t total = std::accumulate(
      arr.dims.begin(), arr.dims.end(), std::size_t{1}, std::multiplies<>());
  arr.values.resize(total);
  if (type == kMiUInt8) {
    if (size < total) throw std::runtime_error("short .mat uint8 data");
    for (std::size_t i = 0; i < total; ++i) arr.values[i] = d[i];
  } else if (type == kMiDouble) {
    if (size < total * 8) throw std::runtime_error("short .mat double data");
    for (std::size_t i = 0; i < total; ++i) {
      double v;
      std::memcpy(&v, d + 8 * i, 8);
      arr.values[i] = v;
    }
  } else {
    throw std::runtime_error(".mat storage class not supported: " +
                             std::to_string(type));
  }
  return arr;
}

std::vector<MatArray> parse_mat5(const std::vector<std::uint8_t>& bytes,
                                 const std::string& fname) {
  if (bytes.size() < 128 || bytes[126] != 'I' || bytes[125] == 0)
    throw std::runtime_error("not a MAT 5 file: " + fname);
  std::vector<MatArray> arrays;
  Cursor c{bytes.data(), bytes.size(), 128};
  while (c.off + 8 <= c.n) {
    const std::uint32_t type = c.u32();
    const std::uint32_t size = c.u32();
    const std::uint8_t* d = c.bytes(size, "top element");
    c.pad8();
    if (type == kMiCompressed) {
      const auto raw = zlib_inflate(d, size);
      Cursor ic{raw.data(), raw.size()};
      const std::uint32_t itype = ic.u32();
      const std::uint32_t isize = ic.u32();
      if (itype == kMiMatrix)
        arrays.push_back(parse_matrix(ic.bytes(isize, "matrix"), isize));
    } else if (type == kMiMatrix) {
      arrays.push_back(parse_matrix(d, size));
    }
  }
  return arrays;
}

LabeledSet load_svhn_split(const fs::path& file, std::size_t count) {
  const auto arrays = parse_mat5(read_file(file), file.string());
  const MatArray* x = nullptr;
  const MatArray* y = nullptr;
  for (const auto& a : arrays) {
    if (a.name == "X") x = &a;
    if (a.name == "y") y = &a;
  }
  if (!x || !y)
    throw std::runtime_error("svhn container missing X or y: " +
                             file.string());
  if (x->dims.size() != 4 || x->dims[0] != 32 || x->dims[1] != 32 ||
      x->dims[2] != 3)
    throw std::runtime_error("unexpected svhn X dims in " + file.string());
  const std::size_t n = x->dims[3];
  if (count > n)
    throw std::runtime_error("svhn file " + file.string() +
                             " holds fewer records than requested");
  LabeledSet out;
  out.images = Tensor<float>(count, 3072);
  out.labels.resize(count);
  // MATLAB column-major [h, w, c, n] -> ours [n][c][h][w], scaled to [0,1]
  for (std::size_t s = 0; s < count; ++s) {
    float* dst = out.images.row(s);
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t h = 0; h < 32; ++h)
        for (std::size_t w = 0; w < 32; ++w)
          dst[(ch * 32 + h) * 32 + w] =
              static_cast<float>(
                  x->values[h + 32 * (w + 32 * (ch + 3 * s))]) /
              255.0f;
    // published labels use 10 for digit 0
    const int lab = static_cast<int>(y->values[s]);
    out.labels[s] = lab == 10 ? 0 : lab;
  }
  return out;
}

Dataset load_svhn(const DatasetSpec& spec, const fs::path& dir, bool verify,
                  bool cont) {
  const fs::path tr = dir / "train_32x32.mat";
  const fs::path te = dir / "test_32x32.mat";
  if (verify) verify_manifest(spec, dir, {tr, te}, cont);
  Dataset ds;
  ds.spec = spec;
  LabeledSet train = load_svhn_split(tr, spec.train_count + spec.val_count);
  if (spec.val_count > 0) {
    ds.train.images = Tensor<float>(spec.train_count, 3072);
    ds.train.labels.assign(train.labels.begin(),
                           train.labels.begin() + spec.train_count);
    std::copy(train.images.data.begin(),
              train.images.data.begin() + spec.train_count * 3072,
              ds.train.images.data.begin());
    LabeledSet val;
    val.images = Tensor<float>(spec.val_count, 3072);
    val.labels.assign(train.labels.begin() + spec.train_count,
                      train.labels.end());
    std::copy(train.images.data.begin() + spec.train_count * 3072,
              train.images.data.end(), val.images.data.begin());
    ds.validation = std::move(val);
  } else {
    ds.train = std::move(train);
  }
  ds.test = load_svhn_split(te, spec.test_count);
  return ds;
}

void check_labels(const Dataset& ds) {
  const int k = static_cast<int>(ds.spec.num_classes);
  auto check = [&](const LabeledSet& s, const char* split) {
    for (int lab : s.labels)
      if (lab < 0 || lab >= k)
        throw std::runtime_error(std::string("label out of range in ") +
                                 split);
  };
  check(ds.train, "train");
  check(ds.test, "test");
  if (ds.validation) check(*ds.validation, "validation");
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec, const std::string& data_dir,
                     bool verify_checksums, bool checksum_continue) {
  const fs::path dir = fs::path(data_dir) / spec.name;
  Dataset ds;
  if (spec.name == "mnist") {
    ds = load_mnist(spec, dir, verify_checksums, checksum_continue);
  } else if (spec.name == "cifar10") {
    ds = load_cifar10(spec, dir, verify_checksums, checksum_continue);
  } else if (spec.name == "svhn") {
    ds = load_svhn(spec, dir, verify_checksums, checksum_continue);
  } else {
    throw std::invalid_argument("load_dataset: no loader for " + spec.name);
  }
  check_labels(ds);
  return ds;
}

void fetch_dataset(const DatasetSpec& spec, const std::string& data_dir,
                   const std::string& manifest_path) {
  json manifest;
  std::ifstream mf(manifest_path);
  if (!mf)
    throw std::runtime_error("manifest not readable: " + manifest_path);
  mf >> manifest;
  if (!manifest.contains(spec.name))
    throw std::runtime_error("manifest has no entry for " + spec.name);
  const fs::path dir = fs::path(data_dir) / spec.name;
  fs::create_directories(dir);
  for (const auto& entry : manifest[spec.name]["files"]) {
    const std::string name = entry["name"].get<std::string>();
    const fs::path target = dir / name;
    if (fs::exists(target)) continue;
    if (!entry.contains("url"))
      throw std::runtime_error("no url for " + name + "; place the file at " +
                               target.string() + " manually");
    const std::string url = entry["url"].get<std::string>();
    const bool gz = url.size() > 3 && url.ends_with(".gz");
    const fs::path dl = gz ? fs::path(target.string() + ".gz") : target;
    const std::string cmd =
        "curl -fsSL -o '" + dl.string() + "' '" + url + "'";
    std::cerr << "fetching " << url << "\n";
    if (std::system(cmd.c_str()) != 0) {
      fs::remove(dl);
      throw std::runtime_error("download failed: " + url);
    }
    if (gz) {
      gzFile in = gzopen(dl.c_str(), "rb");
      if (!in) throw std::runtime_error("cannot open " + dl.string());
      std::ofstream out(target, std::ios::binary);
      char buf[1 << 16];
      int n;
      while ((n = gzread(in, buf, sizeof buf)) > 0) out.write(buf, n);
      gzclose(in);
      if (n < 0) throw std::runtime_error("corrupt gzip file " + dl.string());
      fs::remove(dl);
    }
  }
}

Dataset make_synthetic(const DatasetSpec& spec, std::size_t n_per_class,
                       double noise, std::uint64_t seed,
                       std::size_t test_per_class) {
  if (n_per_class < 1)
    throw std::invalid_argument("make_synthetic: n_per_class must be >= 1");
  const std::size_t k = spec.num_classes;
  const bool raster = spec.height == 8;

  auto sample_point = [&](int cls, Rng& rng, double* xy) {
    if (spec.name == "synthetic-moons") {
      const double t = rng.uniform(0.0, M_PI);
      double x, y;
      if (cls == 0) {
        x = std::cos(t);
        y = std::sin(t);
      } else {
        x = 1.0 - std::cos(t);
        y = 0.5 - std::sin(t);
      }
      x += rng.normal(0.0, noise);
      y += rng.normal(0.0, noise);
      // map [-1.3, 2.3] x [-0.8, 1.3] into the unit box
      xy[0] = (x + 1.3) / 3.6;
      xy[1] = (y + 0.8) / 2.1;
    } else {
      const double ang = 2.0 * M_PI * cls / static_cast<double>(k);
      xy[0] = 0.5 + 0.35 * std::cos(ang) + rng.normal(0.0, noise);
      xy[1] = 0.5 + 0.35 * std::sin(ang) + rng.normal(0.0, noise);
    }
    xy[0] = std::clamp(xy[0], 0.0, 1.0);
    xy[1] = std::clamp(xy[1], 0.0, 1.0);
  };

  auto emit = [&](std::size_t per_class, Rng& rng) {
    LabeledSet out;
    out.images = Tensor<float>(per_class * k, spec.dim());
    out.labels.resize(per_class * k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        const std::size_t row = c * per_class + i;
        out.labels[row] = static_cast<int>(c);
        double xy[2];
        sample_point(static_cast<int>(c), rng, xy);
        float* dst = out.images.row(row);
        if (!raster) {
          dst[0] = static_cast<float>(xy[0]);
          dst[1] = static_cast<float>(xy[1]);
        } else {
          // bilinear splat onto the 8x8 grid
          const double gx = xy[0] * 7.0, gy = xy[1] * 7.0;
          const std::size_t x0 = static_cast<std::size_t>(gx);
          const std::size_t y0 = static_cast<std::size_t>(gy);
          const double fx = gx - x0, fy = gy - y0;
          auto put = [&](std::size_t yy, std::size_t xx, double v) {
            if (yy < 8 && xx < 8) dst[yy * 8 + xx] = static_cast<float>(v);
          };
          put(y0, x0, (1 - fx) * (1 - fy));
          put(y0, x0 + 1, fx * (1 - fy));
          put(y0 + 1, x0, (1 - fx) * fy);
          put(y0 + 1, x0 + 1, fx * fy);
        }
      }
    }
    return out;
  };

  Dataset ds;
  ds.spec = spec;
  Rng train_rng = make_rng(seed, Stream::kSynthetic);
  ds.train = emit(n_per_class, train_rng);
  Rng test_rng(Rng::mix(seed, 0x7e57), static_cast<std::uint64_t>(Stream::kSynthetic));
  ds.test = emit(test_per_class, test_rng);
  ds.spec.train_count = ds.train.count();
  ds.spec.test_count = ds.test.count();
  return ds;
}

namespace {

SSLSplit build_split(const Dataset& ds,
                     const std::vector<std::size_t>& chosen) {
  SSLSplit split;
  split.num_classes = ds.spec.num_classes;
  split.labeled_indices = chosen;
  std::vector<bool> taken(ds.train.count(), false);
  for (auto i : chosen) taken[i] = true;
  for (std::size_t i = 0; i < ds.train.count(); ++i)
    if (!taken[i]) split.unlabeled_indices.push_back(i);

  const std::size_t d = ds.train.images.cols();
  split.labeled.images = Tensor<float>(chosen.size(), d);
  split.labeled.labels.resize(chosen.size());
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    std::copy(ds.train.images.row(chosen[r]),
              ds.train.images.row(chosen[r]) + d,
              split.labeled.images.row(r));
    split.labeled.labels[r] = ds.train.labels[chosen[r]];
  }
  split.unlabeled = Tensor<float>(split.unlabeled_indices.size(), d);
  for (std::size_t r = 0; r < split.unlabeled_indices.size(); ++r)
    std::copy(ds.train.images.row(split.unlabeled_indices[r]),
              ds.train.images.row(split.unlabeled_indices[r]) + d,
              split.unlabeled.row(r));
  split.test = ds.test;
  split.validation = ds.validation;
  return split;
}

std::vector<std::size_t> per_class_quota(std::size_t n, std::size_t k) {
  // remainder goes to the lowest class indices
  std::vector<std::size_t> quota(k, n / k);
  for (std::size_t c = 0; c < n % k; ++c) ++quota[c];
  return quota;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> byc(ds.spec.num_classes);
  for (std::size_t i = 0; i < ds.train.count(); ++i)
    byc[ds.train.labels[i]].push_back(i);
  return byc;
}

}  // namespace

SSLSplit stratified_select(const Dataset& ds, std::size_t n,
                           std::uint64_t seed) {
  const std::size_t k = ds.spec.num_classes;
  if (n < k)
    throw std::invalid_argument("stratified_select: need at least one "
                                "labeled example per class");
  if (n > ds.train.count())
    throw std::invalid_argument("stratified_select: n exceeds train size");
  auto byc = indices_by_class(ds);
  const auto quota = per_class_quota(n, k);
  Rng rng = make_rng(seed, Stream::kSplit);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < k; ++c) {
    if (quota[c] > byc[c].size())
      throw std::runtime_error("stratified_select: class " +
                               std::to_string(c) + " has too few examples");
    std::shuffle(byc[c].begin(), byc[c].end(), rng.engine());
    chosen.insert(chosen.end(), byc[c].begin(), byc[c].begin() + quota[c]);
  }
  std::sort(chosen.begin(), chosen.end());
  return build_split(ds, chosen);
}

SSLSplit representative_select(const Dataset& ds, std::size_t n,
                               std::uint64_t seed) {
  const std::size_t k = ds.spec.num_classes;
  if (n < k)
    throw std::invalid_argument("representative_select: need at least one "
                                "labeled example per class");
  const std::size_t d = ds.train.images.cols();
  // per-image normalization: zero mean, unit std per row
  Tensor<float> norm(ds.train.count(), d);
  for (std::size_t i = 0; i < ds.train.count(); ++i) {
    const float* src = ds.train.images.row(i);
    float mean = 0.0f, var = 0.0f;
    for (std::size_t j = 0; j < d; ++j) mean += src[j];
    mean /= d;
    for (std::size_t j = 0; j < d; ++j)
      var += (src[j] - mean) * (src[j] - mean);
    const float inv = 1.0f / (std::sqrt(var / d) + 1e-8f);
    float* dst = norm.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = (src[j] - mean) * inv;
  }
  auto byc = indices_by_class(ds);
  const auto quota = per_class_quota(n, k);
  (void)seed;  // selection is deterministic; the seed only breaks ties
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < k; ++c) {
    if (quota[c] > byc[c].size())
      throw std::runtime_error("representative_select: class " +
                               std::to_string(c) + " has too few examples");
    std::vector<double> centroid(d, 0.0);
    for (auto i : byc[c])
      for (std::size_t j = 0; j < d; ++j) centroid[j] += norm.at(i, j);
    for (auto& v : centroid) v /= static_cast<double>(byc[c].size());
    std::vector<std::pair<double, std::size_t>> by_dist;
    for (auto i : byc[c]) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = norm.at(i, j) - centroid[j];
        dist += diff * diff;
      }
      by_dist.emplace_back(dist, i);
    }
    std::sort(by_dist.begin(), by_dist.end());
    for (std::size_t t = 0; t < quota[c]; ++t)
      chosen.push_back(by_dist[t].second);
  }
  std::sort(chosen.begin(), chosen.end());
  return build_split(ds, chosen);
}

// ---------------------------------------------------------------------------

Tensor<float> ZCAWhitener::apply(const Tensor<float>& images) const {
  const std::size_t d = mean.count();
  if (images.cols() != d)
    throw std::invalid_argument("zca_apply: dimension mismatch");
  Tensor<float> centered = images;
  for (std::size_t i = 0; i < images.rows(); ++i) {
    float* row = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] -= mean.data[j];
  }
  Tensor<float> out(images.rows(), d);
  gemm<float>(false, true, 1.0f, centered, w, 0.0f, out);
  return out;
}

// ---------------------------------------------------------------------------

BatchStream::BatchStream(const SSLSplit& split, std::size_t batch_size,
                         std::uint64_t seed, std::size_t epoch)
    : split_(split),
      batch_(batch_size),
      rng_(Rng::mix(seed, 0xBA7C0000ULL + epoch),
           static_cast<std::uint64_t>(Stream::kBatch)) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  order_.resize(split.unlabeled.rows());
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_.engine());
  steps_ = order_.size() / batch_;  // short final batch dropped
}

bool BatchStream::next(LabeledSet* labeled, Tensor<float>* unlabeled) {
  if (cursor_ >= steps_) return false;
  const std::size_t d = split_.unlabeled.cols();
  if (unlabeled) {
    *unlabeled = Tensor<float>(batch_, d);
    for (std::size_t i = 0; i < batch_; ++i) {
      const std::size_t idx = order_[cursor_ * batch_ + i];
      std::copy(split_.unlabeled.row(idx), split_.unlabeled.row(idx) + d,
                unlabeled->row(i));
    }
  }
  if (labeled) {
    labeled->images = Tensor<float>(batch_, d);
    labeled->labels.resize(batch_);
    for (std::size_t i = 0; i < batch_; ++i) {
      const std::size_t idx = rng_.index(split_.labeled.count());
      std::copy(split_.labeled.images.row(idx),
                split_.labeled.images.row(idx) + d, labeled->images.row(i));
      labeled->labels[i] = split_.labeled.labels[idx];
    }
  }
  ++cursor_;
  return true;
}

}  // namespace ganssl::data
