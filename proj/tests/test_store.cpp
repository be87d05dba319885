#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

#include "tdi/store.hpp"

namespace tdi {
namespace {

namespace fs = std::filesystem;

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("tdi_store_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }
  static void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) b[at + k] = static_cast<std::uint8_t>(v >> (8 * k));
  }

  fs::path dir_;
};

Dataset sample_dataset(std::size_t n) {
  Dataset d(6, 3, 2);
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> h(6), img(6);
    for (auto& v : h) v = u(rng) * 100.0f;
    for (auto& v : img) v = u(rng);
    img[0] = 0.0f;
    img[1] = 1.0f;
    d.push_back(h, img);
  }
  return d;
}

TEST_F(StoreTest, DatasetRoundTripIsBitExact) {
  const auto d = sample_dataset(5);
  write_dataset(dir_ / "d.tdid", d);
  EXPECT_EQ(read_dataset(dir_ / "d.tdid"), d);
  EXPECT_EQ(fs::file_size(dir_ / "d.tdid"), kDatasetHeaderBytes + 5 * 12 * 4);
}

TEST_F(StoreTest, DatasetHeaderLayout) {
  write_dataset(dir_ / "d.tdid", sample_dataset(2));
  const auto b = read_bytes(dir_ / "d.tdid");
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "TDID");
  const std::vector<std::uint8_t> header(b.begin() + 4, b.begin() + 24);
  EXPECT_EQ(header, (std::vector<std::uint8_t>{1, 0, 0, 0, 6, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0}));
  float first = 0;
  std::memcpy(&first, b.data() + 24, 4);
  EXPECT_EQ(first, sample_dataset(1).histograms[0]);
}

TEST_F(StoreTest, EmptyDatasetRoundTrips) {
  const Dataset d(6, 3, 2);
  write_dataset(dir_ / "e.tdid", d);
  const auto back = read_dataset(dir_ / "e.tdid");
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.bins, 6u);
}

TEST_F(StoreTest, DatasetCorruptionIsNamed) {
  write_dataset(dir_ / "d.tdid", sample_dataset(3));
  const auto good = read_bytes(dir_ / "d.tdid");
  const auto p = dir_ / "bad.tdid";

  auto b = good;
  b[0] = 'X';
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), BadMagicError);

  b = good;
  put_u32(b, 4, 2);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), VersionMismatchError);

  b = good;
  b.resize(b.size() - 1);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), TruncatedFileError);

  b = good;
  b.resize(10);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), TruncatedFileError);

  b = good;
  put_u32(b, 20, 1000000);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), TruncatedFileError);

  b = good;
  b.push_back(0);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), ShapeMismatchError);

  b = good;
  put_u32(b, 8, 0xffffffffu);
  put_u32(b, 12, 0xffffffffu);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), FormatError);

  b = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(b.data() + 24, &nan, 4);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), InvalidValueError);

  b = good;
  const float big = 1.5f;
  std::memcpy(b.data() + 24 + 6 * 4, &big, 4);
  write_bytes(p, b);
  EXPECT_THROW(read_dataset(p), InvalidValueError);

  EXPECT_THROW(read_dataset(dir_ / "missing.tdid"), IoError);
}

TEST_F(StoreTest, ModelRoundTripIsBitExact) {
  const auto m = init_mlp<float>(std::vector<int>{7, 5, 3, 2}, 4);
  write_model(dir_ / "m.tdim", m);
  const auto back = read_model(dir_ / "m.tdim");
  EXPECT_EQ(back.dims, m.dims);
  for (std::size_t l = 0; l < m.layers(); ++l) {
    EXPECT_EQ(back.weights[l], m.weights[l]);
    EXPECT_EQ(back.biases[l], m.biases[l]);
  }
  const auto b = read_bytes(dir_ / "m.tdim");
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "TDIM");
  EXPECT_EQ(b.size(), 4 + 4 + 4 + 4 * 4 + 4 * m.parameter_count());
  // First weight stored row-major.
  float w01 = 0;
  std::memcpy(&w01, b.data() + 28 + 4, 4);
  EXPECT_EQ(w01, m.weights[0](0, 1));
}

TEST_F(StoreTest, ModelCorruptionIsNamed) {
  write_model(dir_ / "m.tdim", init_mlp<float>(std::vector<int>{4, 3, 2}, 0));
  const auto good = read_bytes(dir_ / "m.tdim");
  const auto p = dir_ / "bad.tdim";

  auto b = good;
  b[3] = 'D';
  write_bytes(p, b);
  EXPECT_THROW(read_model(p), BadMagicError);

  b = good;
  put_u32(b, 4, 9);
  write_bytes(p, b);
  EXPECT_THROW(read_model(p), VersionMismatchError);

  b = good;
  put_u32(b, 12, 5);
  write_bytes(p, b);
  EXPECT_THROW(read_model(p), ShapeMismatchError);

  b = good;
  b.resize(14);
  write_bytes(p, b);
  EXPECT_THROW(read_model(p), TruncatedFileError);

  b = good;
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(b.data() + b.size() - 4, &inf, 4);
  write_bytes(p, b);
  EXPECT_THROW(read_model(p), InvalidValueError);

  // A dataset is not a model.
  write_dataset(p, sample_dataset(1));
  EXPECT_THROW(read_model(p), BadMagicError);
}

TEST_F(StoreTest, AtomicWriteReplacesAndLeavesNoTemporaries) {
  const auto p = dir_ / "out.bin";
  write_file_atomic(p, std::vector<std::uint8_t>{1, 2, 3});
  write_file_atomic(p, std::vector<std::uint8_t>{9});
  EXPECT_EQ(read_bytes(p), (std::vector<std::uint8_t>{9}));
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_), fs::directory_iterator()), 1);
  EXPECT_THROW(write_file_atomic(dir_ / "no" / "such" / "dir.bin", std::vector<std::uint8_t>{1}), IoError);
}

TEST_F(StoreTest, DepthGraymap) {
  const std::vector<float> img{0.0f, 0.5f, 1.0f, 2.0f};
  export_depth_pgm(img, 2, 2, dir_ / "d.pgm");
  const auto b = read_bytes(dir_ / "d.pgm");
  const std::string header = "P5\n2 2\n65535\n";
  ASSERT_EQ(b.size(), header.size() + 8);
  EXPECT_EQ(std::string(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(header.size())), header);
  const std::vector<std::uint8_t> px(b.begin() + static_cast<std::ptrdiff_t>(header.size()), b.end());
  EXPECT_EQ(px, (std::vector<std::uint8_t>{0, 0, 0x80, 0x00, 0xff, 0xff, 0xff, 0xff}));
  EXPECT_THROW(export_depth_pgm(img, 3, 2, dir_ / "x.pgm"), std::invalid_argument);
}

TEST_F(StoreTest, SsimExports) {
  SsimResult r;
  r.width = 2;
  r.height = 1;
  r.map = {-1.0, 1.0};
  export_ssim_pgm(r, dir_ / "s.pgm");
  const auto b = read_bytes(dir_ / "s.pgm");
  EXPECT_EQ(b.back(), 255);
  EXPECT_EQ(b[b.size() - 2], 0);
  export_ssim_csv(r, dir_ / "s.csv");
  std::ifstream in(dir_ / "s.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "-1,1");
}

}  // namespace
}  // namespace tdi
