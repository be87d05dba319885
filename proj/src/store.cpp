#include "tdi/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <unistd.h>

namespace tdi {

namespace {

constexpr char kDatasetMagic[4] = {'T', 'D', 'I', 'D'};
constexpr char kModelMagic[4] = {'T', 'D', 'I', 'M'};

class ByteWriter {
 public:
  void magic(const char (&m)[4]) { bytes_.insert(bytes_.end(), m, m + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> vs) {
    for (float v : vs) f32(v);
  }
  void reserve(std::size_t n) { bytes_.reserve(n); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& name() const { return name_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw TruncatedFileError(name_ + ": truncated while reading " + what + " (need " + std::to_string(n) +
                               " bytes, have " + std::to_string(remaining()) + ")");
  }
  void magic(const char (&m)[4], const char* kind) {
    need(4, "magic");
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0) throw BadMagicError(name_ + ": bad magic, not a " + kind + " file");
    pos_ += 4;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  void f32s(float* out, std::size_t n, const char* what) {
    need(4 * n, what);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t v = 0;
      for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
      out[i] = std::bit_cast<float>(v);
      pos_ += 4;
    }
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    throw IoError("read failed: " + path.string());
  return bytes;
}

// Overflow-checked product; false when it does not fit in size_t.
bool mul(std::size_t a, std::size_t b, std::size_t& out) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) return false;
  out = a * b;
  return true;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  const std::size_t n = data.size();
  if (data.histograms.size() != n * data.bins || data.images.size() != n * data.pixels())
    throw ShapeMismatchError(path.string() + ": inconsistent record shapes");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ShapeMismatchError(path.string() + ": too many records");
  ByteWriter w;
  w.reserve(kDatasetHeaderBytes + 4 * (data.histograms.size() + data.images.size()));
  w.magic(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u32(data.bins);
  w.u32(data.img_w);
  w.u32(data.img_h);
  w.u32(static_cast<std::uint32_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    w.f32s(data.histogram(i));
    w.f32s(data.image(i));
  }
  write_file_atomic(path, w.bytes());
}

Dataset read_dataset(const std::filesystem::path& path) {
  ByteReader r(slurp(path), path.string());
  r.magic(kDatasetMagic, "dataset");
  const auto version = r.u32("version");
  if (version != kDatasetVersion)
    throw VersionMismatchError(r.name() + ": dataset version " + std::to_string(version) + ", reader supports " +
                               std::to_string(kDatasetVersion));
  const auto bins = r.u32("bins");
  const auto img_w = r.u32("img_w");
  const auto img_h = r.u32("img_h");
  Dataset d(bins, img_w, img_h);
  const std::size_t n = r.u32("record count");
  if (n > 0 && (d.bins == 0 || d.pixels() == 0)) throw ShapeMismatchError(r.name() + ": zero-sized record shape");
  std::size_t record = 0, payload = 0;
  if (!mul(static_cast<std::size_t>(d.bins) + d.pixels(), 4, record) || !mul(record, n, payload))
    throw ShapeMismatchError(r.name() + ": header dimensions overflow");
  if (r.remaining() < payload)
    throw TruncatedFileError(r.name() + ": header declares " + std::to_string(n) + " records (" +
                             std::to_string(payload) + " bytes), file has " + std::to_string(r.remaining()));
  if (r.remaining() > payload) throw ShapeMismatchError(r.name() + ": trailing bytes after last record");
  d.histograms.resize(n * d.bins);
  d.images.resize(n * d.pixels());
  for (std::size_t i = 0; i < n; ++i) {
    r.f32s(d.histograms.data() + i * d.bins, d.bins, "histogram");
    r.f32s(d.images.data() + i * d.pixels(), d.pixels(), "image");
  }
  if (!std::all_of(d.histograms.begin(), d.histograms.end(), [](float v) { return std::isfinite(v); }))
    throw InvalidValueError(r.name() + ": non-finite histogram value");
  if (!std::all_of(d.images.begin(), d.images.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }))
    throw InvalidValueError(r.name() + ": image value outside [0,1]");
  return d;
}

void write_model(const std::filesystem::path& path, const MlpModel& model) {
  ByteWriter w;
  w.reserve(16 + 4 * (model.dims.size() + model.parameter_count()));
  w.magic(kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.layers()));
  for (int d : model.dims) w.u32(static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < model.layers(); ++l) {
    const auto& W = model.weights[l];
    for (Eigen::Index row = 0; row < W.rows(); ++row)
      for (Eigen::Index col = 0; col < W.cols(); ++col) w.f32(W(row, col));
    w.f32s({model.biases[l].data(), static_cast<std::size_t>(model.biases[l].size())});
  }
  write_file_atomic(path, w.bytes());
}

MlpModel read_model(const std::filesystem::path& path) {
  ByteReader r(slurp(path), path.string());
  r.magic(kModelMagic, "model");
  const auto version = r.u32("version");
  if (version != kModelVersion)
    throw VersionMismatchError(r.name() + ": model version " + std::to_string(version) + ", reader supports " +
                               std::to_string(kModelVersion));
  const std::size_t layers = r.u32("layer count");
  if (layers < 1 || layers > 1024) throw ShapeMismatchError(r.name() + ": implausible layer count " + std::to_string(layers));
  r.need(4 * (layers + 1), "layer dimensions");
  MlpModel m;
  std::size_t params = 0;
  for (std::size_t i = 0; i <= layers; ++i) {
    const auto d = r.u32("layer dimension");
    if (d == 0 || d > (1u << 24)) throw ShapeMismatchError(r.name() + ": invalid layer dimension " + std::to_string(d));
    m.dims.push_back(static_cast<int>(d));
  }
  for (std::size_t l = 0; l < layers; ++l)
    params += static_cast<std::size_t>(m.dims[l + 1]) * (static_cast<std::size_t>(m.dims[l]) + 1);
  if (r.remaining() != 4 * params)
    throw ShapeMismatchError(r.name() + ": declared dimensions need " + std::to_string(4 * params) +
                             " payload bytes, file has " + std::to_string(r.remaining()));
  std::vector<float> row;
  for (std::size_t l = 0; l < layers; ++l) {
    MlpModel::Matrix W(m.dims[l + 1], m.dims[l]);
    row.resize(static_cast<std::size_t>(W.cols()));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      r.f32s(row.data(), row.size(), "weights");
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = row[static_cast<std::size_t>(j)];
    }
    MlpModel::Vector b(m.dims[l + 1]);
    r.f32s(b.data(), static_cast<std::size_t>(b.size()), "biases");
    m.weights.push_back(std::move(W));
    m.biases.push_back(std::move(b));
  }
  if (!m.all_finite()) throw InvalidValueError(r.name() + ": non-finite parameter");
  return m;
}

void export_depth_pgm(std::span<const float> normalized, int width, int height, const std::filesystem::path& path) {
  if (width < 1 || height < 1 || normalized.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("export_depth_pgm: image size does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (float v : normalized) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 65535.0));
    bytes.push_back(static_cast<std::uint8_t>(q >> 8));  // graymap samples are big-endian
    bytes.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  write_file_atomic(path, bytes);
}

void export_ssim_pgm(const SsimResult& r, const std::filesystem::path& path) {
  const std::string header = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (double v : r.map)
    bytes.push_back(static_cast<std::uint8_t>(std::lround((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5)));
  write_file_atomic(path, bytes);
}

void export_ssim_csv(const SsimResult& r, const std::filesystem::path& path) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(9);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) out << (x ? "," : "") << r.map[static_cast<std::size_t>(y) * r.width + x];
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

}  // namespace tdi
