#include <catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include "ipbnn/data.hpp"

using namespace ipbnn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "ipbnn_data_test";
  fs::create_directories(dir);
  return dir;
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_pair(const fs::path& img_path, const fs::path& lab_path,
                    std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                    std::uint32_t img_magic = 2051, std::uint32_t lab_magic = 2049,
                    std::uint32_t label_count_override = 0) {
  std::ofstream img(img_path, std::ios::binary);
  write_u32_be(img, img_magic);
  write_u32_be(img, n);
  write_u32_be(img, rows);
  write_u32_be(img, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) {
    const unsigned char px = static_cast<unsigned char>(i % 256);
    img.write(reinterpret_cast<const char*>(&px), 1);
  }
  std::ofstream lab(lab_path, std::ios::binary);
  write_u32_be(lab, lab_magic);
  write_u32_be(lab, label_count_override ? label_count_override : n);
  for (std::uint32_t i = 0; i < (label_count_override ? label_count_override : n); ++i) {
    const unsigned char y = static_cast<unsigned char>(i % 3);
    lab.write(reinterpret_cast<const char*>(&y), 1);
  }
}

}  // namespace

TEST_CASE("load_idx parses a well-formed pair") {
  const auto dir = temp_dir();
  write_idx_pair(dir / "img", dir / "lab", 5, 2, 3);
  const LabeledDataset ds = load_idx(dir / "img", dir / "lab");
  REQUIRE(ds.size() == 5);
  REQUIRE(ds.input_dim == 6);
  REQUIRE(ds.labels[4] == 1);  // 4 % 3
  for (double v : ds.inputs) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
  REQUIRE(ds.inputs[1] == 1.0 / 255.0);
}

TEST_CASE("load_idx rejects malformed files with distinct errors") {
  const auto dir = temp_dir();
  write_idx_pair(dir / "bad_img", dir / "lab2", 3, 2, 2, 1234);
  REQUIRE_THROWS_WITH(load_idx(dir / "bad_img", dir / "lab2"),
                      Catch::Matchers::ContainsSubstring("2051"));

  write_idx_pair(dir / "img2", dir / "bad_lab", 3, 2, 2, 2051, 7777);
  REQUIRE_THROWS_WITH(load_idx(dir / "img2", dir / "bad_lab"),
                      Catch::Matchers::ContainsSubstring("2049"));

  write_idx_pair(dir / "img3", dir / "lab3", 3, 2, 2, 2051, 2049, 4);
  REQUIRE_THROWS_WITH(load_idx(dir / "img3", dir / "lab3"),
                      Catch::Matchers::ContainsSubstring("mismatch"));

  {
    std::ofstream img(dir / "trunc", std::ios::binary);
    write_u32_be(img, 2051);
    write_u32_be(img, 10);
    write_u32_be(img, 28);
    write_u32_be(img, 28);
    img << "short";
  }
  write_idx_pair(dir / "img4", dir / "lab4", 10, 28, 28);
  REQUIRE_THROWS_WITH(load_idx(dir / "trunc", dir / "lab4"),
                      Catch::Matchers::ContainsSubstring("truncated"));

  REQUIRE_THROWS_AS(load_idx(dir / "does_not_exist", dir / "lab4"), DataFormatError);
}

TEST_CASE("szt stand-in enumerates all patterns with balanced labels") {
  const LabeledDataset ds = generate_szt_standin(7);
  REQUIRE(ds.size() == 4096);
  REQUIRE(ds.input_dim == 12);
  REQUIRE(ds.class_count == 2);
  std::size_t positives = 0;
  std::vector<bool> seen(4096, false);
  for (std::size_t i = 0; i < 4096; ++i) {
    std::uint32_t v = 0;
    for (std::size_t j = 0; j < 12; ++j) {
      const double b = ds.inputs[i * 12 + j];
      REQUIRE((b == 0.0 || b == 1.0));
      v |= static_cast<std::uint32_t>(b) << j;
    }
    REQUIRE_FALSE(seen[v]);
    seen[v] = true;
    positives += ds.labels[i];
  }
  const double frac = static_cast<double>(positives) / 4096.0;
  REQUIRE(frac >= 0.45);
  REQUIRE(frac <= 0.55);

  const LabeledDataset again = generate_szt_standin(7);
  REQUIRE(again.labels == ds.labels);
  const LabeledDataset other = generate_szt_standin(8);
  REQUIRE(other.labels != ds.labels);
}

TEST_CASE("szt text round trip and validation") {
  const auto dir = temp_dir();
  const LabeledDataset ds = generate_szt_standin(3);
  save_szt(ds, dir / "szt.txt");
  const LabeledDataset loaded = load_szt(dir / "szt.txt");
  REQUIRE(loaded.labels == ds.labels);
  REQUIRE(loaded.inputs == ds.inputs);

  // 4095 rows -> count error
  {
    std::ifstream in(dir / "szt.txt");
    std::ofstream out(dir / "szt_short.txt");
    std::string line;
    for (int i = 0; i < 4095 && std::getline(in, line); ++i) {
      out << line << '\n';
    }
  }
  REQUIRE_THROWS_WITH(load_szt(dir / "szt_short.txt"),
                      Catch::Matchers::ContainsSubstring("4096"));

  {
    std::ofstream out(dir / "szt_domain.txt");
    out << "000000000002 1\n";
  }
  REQUIRE_THROWS_WITH(load_szt(dir / "szt_domain.txt"),
                      Catch::Matchers::ContainsSubstring("0 or 1"));

  {
    std::ofstream out(dir / "szt_dup.txt");
    out << "000000000000 1\n000000000000 0\n";
  }
  REQUIRE_THROWS_WITH(load_szt(dir / "szt_dup.txt"),
                      Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("split is deterministic, disjoint, and uses floor rounding") {
  const LabeledDataset ds = generate_szt_standin(1);
  auto [train, val] = split(ds, 0.2, 42);
  REQUIRE(val.size() == 819);  // floor(4096 * 0.2)
  REQUIRE(train.size() == 4096 - 819);

  auto [train2, val2] = split(ds, 0.2, 42);
  REQUIRE(train2.inputs == train.inputs);
  REQUIRE(val2.labels == val.labels);

  // disjoint and exhaustive over the unique 12-bit patterns
  std::vector<bool> seen(4096, false);
  auto mark = [&](const LabeledDataset& part) {
    for (std::size_t i = 0; i < part.size(); ++i) {
      std::uint32_t v = 0;
      for (std::size_t j = 0; j < 12; ++j) {
        v |= static_cast<std::uint32_t>(part.inputs[i * 12 + j]) << j;
      }
      REQUIRE_FALSE(seen[v]);
      seen[v] = true;
    }
  };
  mark(train);
  mark(val);

  LabeledDataset ten;
  ten.input_dim = 1;
  ten.class_count = 2;
  ten.inputs.assign(10, 0.0);
  ten.labels.assign(10, 0);
  auto [t5, v5] = split(ten, 0.5, 0);
  REQUIRE(t5.size() == 5);
  REQUIRE(v5.size() == 5);

  REQUIRE_THROWS_AS(split(ds, 0.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(split(ds, 1.0, 0), std::invalid_argument);
}

TEST_CASE("activation dump round trip is bit-exact") {
  const auto dir = temp_dir();
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t width = 1 + rng() % 90;
    const std::size_t n = 1 + rng() % 40;
    ActivationDump dump;
    dump.width = width;
    dump.class_count = 10;
    dump.patterns = PatternBatch(width);
    for (std::size_t i = 0; i < n; ++i) {
      BinaryPattern p(width);
      for (std::uint32_t b = 0; b < width; ++b) {
        p.set_bit(b, rng() & 1);
      }
      dump.patterns.push_back(std::move(p));
      dump.labels.push_back(static_cast<std::uint16_t>(rng() % 10));
    }
    write_activation_dump(dump, dir / "dump.bin");
    const ActivationDump back = read_activation_dump(dir / "dump.bin");
    REQUIRE(back.width == dump.width);
    REQUIRE(back.class_count == dump.class_count);
    REQUIRE(back.labels == dump.labels);
    REQUIRE(back.patterns.patterns() == dump.patterns.patterns());
  }
}

TEST_CASE("activation dump layout is fixed") {
  const auto dir = temp_dir();
  ActivationDump dump;
  dump.width = 10;
  dump.class_count = 2;
  dump.patterns = PatternBatch(10);
  for (int i = 0; i < 3; ++i) {
    dump.patterns.push_back(BinaryPattern::from_bits(10, 0x2aaULL >> i));
    dump.labels.push_back(static_cast<std::uint16_t>(i % 2));
  }
  write_activation_dump(dump, dir / "layout.bin");
  // magic(4) + version(2) + N(8) + d(4) + C(4) + 3 words(24) + 3 labels(6)
  REQUIRE(fs::file_size(dir / "layout.bin") == 52);
  std::ifstream in(dir / "layout.bin", std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  REQUIRE(std::string(magic, 4) == "IPBD");
}

TEST_CASE("activation dump rejects corrupt files") {
  const auto dir = temp_dir();
  {
    std::ofstream out(dir / "badmagic.bin", std::ios::binary);
    out << "NOPE" << std::string(20, '\0');
  }
  REQUIRE_THROWS_WITH(read_activation_dump(dir / "badmagic.bin"),
                      Catch::Matchers::ContainsSubstring("magic"));

  ActivationDump dump;
  dump.width = 10;
  dump.class_count = 2;
  dump.patterns = PatternBatch(10);
  dump.patterns.push_back(BinaryPattern::from_bits(10, 5));
  dump.labels.push_back(1);
  write_activation_dump(dump, dir / "full.bin");
  {
    std::ifstream in(dir / "full.bin", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 3);
    std::ofstream out(dir / "trunc.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  REQUIRE_THROWS_WITH(read_activation_dump(dir / "trunc.bin"),
                      Catch::Matchers::ContainsSubstring("truncated"));
}
