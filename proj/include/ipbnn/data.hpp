#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ipbnn/bitpattern.hpp"

namespace ipbnn {

struct DataFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense dataset: inputs scaled to [0,1], integer labels in [0, C).
struct LabeledDataset {
  std::string name;
  std::size_t input_dim = 0;
  std::size_t class_count = 0;
  std::vector<double> inputs;  // row-major, sample_count x input_dim
  std::vector<std::uint16_t> labels;

  std::size_t size() const { return labels.size(); }

  const double* row(std::size_t i) const { return inputs.data() + i * input_dim; }
};

/// Externally produced binary activations plus labels (IPBD container).
struct ActivationDump {
  std::uint32_t width = 0;
  std::uint32_t class_count = 0;
  PatternBatch patterns{1};
  std::vector<std::uint16_t> labels;
};

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw DataFormatError("truncated IDX file while reading " + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

template <class T>
void write_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    b[i] = static_cast<unsigned char>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::istream& in, const std::string& what) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw DataFormatError("truncated dump file while reading " + what);
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<T>(b[i]) << (8 * i));
  }
  return v;
}

}  // namespace detail

/// Load an IDX image/label file pair (big-endian; image magic 2051, label
/// magic 2049). Pixels are flattened row-major and scaled by 1/255.
inline LabeledDataset load_idx(const std::filesystem::path& images_path,
                               const std::filesystem::path& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) {
    throw DataFormatError("cannot open image file: " + images_path.string());
  }
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) {
    throw DataFormatError("cannot open label file: " + labels_path.string());
  }
  const std::uint32_t img_magic = detail::read_u32_be(img, "image magic");
  if (img_magic != 2051) {
    throw DataFormatError("bad image magic number (expected 2051): " +
                          std::to_string(img_magic));
  }
  const std::uint32_t lab_magic = detail::read_u32_be(lab, "label magic");
  if (lab_magic != 2049) {
    throw DataFormatError("bad label magic number (expected 2049): " +
                          std::to_string(lab_magic));
  }
  const std::uint32_t n_img = detail::read_u32_be(img, "image count");
  const std::uint32_t rows = detail::read_u32_be(img, "row count");
  const std::uint32_t cols = detail::read_u32_be(img, "column count");
  const std::uint32_t n_lab = detail::read_u32_be(lab, "label count");
  if (n_img != n_lab) {
    throw DataFormatError("image/label count mismatch: " + std::to_string(n_img) +
                          " vs " + std::to_string(n_lab));
  }
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  LabeledDataset ds;
  ds.input_dim = dim;
  ds.inputs.resize(static_cast<std::size_t>(n_img) * dim);
  ds.labels.resize(n_img);
  std::vector<unsigned char> buf(dim);
  for (std::uint32_t i = 0; i < n_img; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim))) {
      throw DataFormatError("truncated image payload at sample " + std::to_string(i));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      ds.inputs[i * dim + j] = buf[j] / 255.0;
    }
  }
  std::vector<unsigned char> lbuf(n_lab);
  if (!lab.read(reinterpret_cast<char*>(lbuf.data()), n_lab)) {
    throw DataFormatError("truncated label payload");
  }
  std::uint16_t max_label = 0;
  for (std::uint32_t i = 0; i < n_lab; ++i) {
    ds.labels[i] = lbuf[i];
    max_label = std::max<std::uint16_t>(max_label, lbuf[i]);
  }
  ds.class_count = max_label + 1u;
  // Image datasets in scope are all 10-class.
  if (ds.class_count < 10 && n_img >= 10000) {
    ds.class_count = 10;
  }
  return ds;
}

/// Load the SZT text format: one row per sample, 12 characters of {0,1},
/// a separator, and the binary label. Exactly 4096 unique rows.
inline LabeledDataset load_szt(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataFormatError("cannot open SZT file: " + path.string());
  }
  LabeledDataset ds;
  ds.name = "szt";
  ds.input_dim = 12;
  ds.class_count = 2;
  std::vector<bool> seen(4096, false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string bits;
    int label = -1;
    row >> bits >> label;
    if (bits.size() != 12) {
      throw DataFormatError("SZT line " + std::to_string(lineno) +
                            ": expected 12 input bits, got " +
                            std::to_string(bits.size()));
    }
    std::uint32_t value = 0;
    for (std::size_t j = 0; j < 12; ++j) {
      if (bits[j] != '0' && bits[j] != '1') {
        throw DataFormatError("SZT line " + std::to_string(lineno) +
                              ": input values must be 0 or 1");
      }
      const double b = bits[j] - '0';
      ds.inputs.push_back(b);
      value |= static_cast<std::uint32_t>(bits[j] - '0') << j;
    }
    if (label != 0 && label != 1) {
      throw DataFormatError("SZT line " + std::to_string(lineno) +
                            ": label must be 0 or 1");
    }
    if (seen[value]) {
      throw DataFormatError("SZT line " + std::to_string(lineno) +
                            ": duplicate input pattern");
    }
    seen[value] = true;
    ds.labels.push_back(static_cast<std::uint16_t>(label));
  }
  if (ds.labels.size() != 4096) {
    throw DataFormatError("SZT dataset must contain exactly 4096 samples, got " +
                          std::to_string(ds.labels.size()));
  }
  return ds;
}

inline void save_szt(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataFormatError("cannot write SZT file: " + path.string());
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      out << (ds.inputs[i * 12 + j] > 0.5 ? '1' : '0');
    }
    out << ' ' << ds.labels[i] << '\n';
  }
}

/// Stand-in for the canonical SZT dataset: all 4096 12-bit patterns with
/// a balanced binary labeling. The label is 1 iff a spherically symmetric
/// score of the pattern (popcount distance from 6, ties broken by a
/// seeded per-pattern jitter) falls below the median score, giving an
/// exact 2048/2048 class split.
inline LabeledDataset generate_szt_standin(std::uint64_t seed) {
  LabeledDataset ds;
  ds.name = "szt-standin";
  ds.input_dim = 12;
  ds.class_count = 2;
  ds.inputs.resize(4096 * 12);
  ds.labels.resize(4096);
  std::vector<double> scores(4096);
  for (std::uint32_t v = 0; v < 4096; ++v) {
    for (std::size_t j = 0; j < 12; ++j) {
      ds.inputs[v * 12 + j] = (v >> j) & 1u;
    }
    const double dist = std::abs(static_cast<int>(std::popcount(v)) - 6);
    const double jitter =
        static_cast<double>(splitmix64(seed ^ (v + 1)) >> 11) * 0x1.0p-53;
    scores[v] = dist + 0.5 * jitter;
  }
  std::vector<double> sorted = scores;
  std::nth_element(sorted.begin(), sorted.begin() + 2048, sorted.end());
  const double cutoff = sorted[2048];
  for (std::uint32_t v = 0; v < 4096; ++v) {
    ds.labels[v] = scores[v] < cutoff ? 1 : 0;
  }
  return ds;
}

namespace detail {

// Explicit Fisher-Yates with a fixed draw rule; std::shuffle's draw
// sequence is implementation-defined.
inline void deterministic_shuffle(std::vector<std::size_t>& idx, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

inline LabeledDataset take(const LabeledDataset& ds,
                           const std::vector<std::size_t>& idx,
                           std::size_t begin, std::size_t end) {
  LabeledDataset out;
  out.name = ds.name;
  out.input_dim = ds.input_dim;
  out.class_count = ds.class_count;
  out.inputs.reserve((end - begin) * ds.input_dim);
  out.labels.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    const std::size_t i = idx[k];
    out.inputs.insert(out.inputs.end(), ds.row(i), ds.row(i) + ds.input_dim);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

}  // namespace detail

/// Deterministic shuffled split; validation size = floor(N * fraction).
inline std::pair<LabeledDataset, LabeledDataset> split(
    const LabeledDataset& ds, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("split: fraction must be in (0,1)");
  }
  const std::size_t n = ds.size();
  const std::size_t n_val =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * validation_fraction));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  detail::deterministic_shuffle(idx, seed);
  return {detail::take(ds, idx, n_val, n), detail::take(ds, idx, 0, n_val)};
}

/// Keep the first n samples (desk-scale training subsets).
inline LabeledDataset head(const LabeledDataset& ds, std::size_t n) {
  std::vector<std::size_t> idx(std::min(n, ds.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return detail::take(ds, idx, 0, idx.size());
}

inline void write_activation_dump(const ActivationDump& dump,
                                  const std::filesystem::path& path) {
  if (dump.patterns.size() != dump.labels.size()) {
    throw std::invalid_argument("write_activation_dump: pattern/label count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataFormatError("cannot write dump file: " + path.string());
  }
  out.write("IPBD", 4);
  detail::write_le<std::uint16_t>(out, 1);  // version
  detail::write_le<std::uint64_t>(out, dump.patterns.size());
  detail::write_le<std::uint32_t>(out, dump.width);
  detail::write_le<std::uint32_t>(out, dump.class_count);
  for (const BinaryPattern& p : dump.patterns) {
    for (std::uint64_t w : p.words()) {
      detail::write_le<std::uint64_t>(out, w);
    }
  }
  for (std::uint16_t y : dump.labels) {
    detail::write_le<std::uint16_t>(out, y);
  }
}

inline ActivationDump read_activation_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataFormatError("cannot open dump file: " + path.string());
  }
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "IPBD", 4) != 0) {
    throw DataFormatError("bad dump magic (expected IPBD)");
  }
  const auto version = detail::read_le<std::uint16_t>(in, "version");
  if (version != 1) {
    throw DataFormatError("unsupported dump version: " + std::to_string(version));
  }
  const auto n = detail::read_le<std::uint64_t>(in, "sample count");
  const auto width = detail::read_le<std::uint32_t>(in, "width");
  const auto classes = detail::read_le<std::uint32_t>(in, "class count");
  if (width == 0) {
    throw DataFormatError("dump width must be >= 1");
  }
  ActivationDump dump;
  dump.width = width;
  dump.class_count = classes;
  dump.patterns = PatternBatch(width);
  const std::size_t words = (width + 63) / 64;
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> w(words);
    for (std::size_t k = 0; k < words; ++k) {
      w[k] = detail::read_le<std::uint64_t>(in, "pattern payload");
    }
    dump.patterns.push_back(BinaryPattern(width, std::move(w)));
  }
  dump.labels.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    dump.labels[i] = detail::read_le<std::uint16_t>(in, "label payload");
  }
  return dump;
}

}  // namespace ipbnn
