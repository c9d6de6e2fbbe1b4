#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ipbnn {

/// Value-semantic bit vector of fixed width. Bit 0 lives in the LSB of
/// word 0; bits at positions >= width are always zero.
class BinaryPattern {
public:
  BinaryPattern() = default;

  explicit BinaryPattern(std::uint32_t width)
      : width_(width), words_((width + 63) / 64, 0) {
    if (width == 0) {
      throw std::invalid_argument("BinaryPattern: width must be >= 1");
    }
  }

  BinaryPattern(std::uint32_t width, std::vector<std::uint64_t> words)
      : width_(width), words_(std::move(words)) {
    if (width == 0) {
      throw std::invalid_argument("BinaryPattern: width must be >= 1");
    }
    if (words_.size() != (width + 63u) / 64u) {
      throw std::invalid_argument("BinaryPattern: word count mismatch");
    }
    mask_tail();
  }

  /// Convenience for widths <= 64.
  static BinaryPattern from_bits(std::uint32_t width, std::uint64_t bits) {
    if (width == 0 || width > 64) {
      throw std::invalid_argument("BinaryPattern::from_bits: width must be in [1,64]");
    }
    return BinaryPattern(width, std::vector<std::uint64_t>{bits});
  }

  std::uint32_t width() const { return width_; }
  std::span<const std::uint64_t> words() const { return words_; }

  bool bit(std::uint32_t i) const {
    return (words_[i / 64] >> (i % 64)) & 1u;
  }

  void set_bit(std::uint32_t i, bool v) {
    const std::uint64_t m = std::uint64_t{1} << (i % 64);
    if (v) {
      words_[i / 64] |= m;
    } else {
      words_[i / 64] &= ~m;
    }
  }

  friend bool operator==(const BinaryPattern& a, const BinaryPattern& b) {
    return a.width_ == b.width_ && a.words_ == b.words_;
  }

private:
  void mask_tail() {
    const std::uint32_t rem = width_ % 64;
    if (rem != 0) {
      words_.back() &= (std::uint64_t{1} << rem) - 1;
    }
  }

  std::uint32_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Ordered collection of equal-width patterns.
class PatternBatch {
public:
  explicit PatternBatch(std::uint32_t width) : width_(width) {
    if (width == 0) {
      throw std::invalid_argument("PatternBatch: width must be >= 1");
    }
  }

  std::uint32_t width() const { return width_; }
  std::size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }

  const BinaryPattern& operator[](std::size_t i) const { return patterns_[i]; }
  const std::vector<BinaryPattern>& patterns() const { return patterns_; }

  void push_back(BinaryPattern p) {
    if (p.width() != width_) {
      throw std::invalid_argument("PatternBatch: pattern width mismatch");
    }
    patterns_.push_back(std::move(p));
  }

  auto begin() const { return patterns_.begin(); }
  auto end() const { return patterns_.end(); }

private:
  std::uint32_t width_;
  std::vector<BinaryPattern> patterns_;
};

}  // namespace ipbnn

template <>
struct std::hash<ipbnn::BinaryPattern> {
  std::size_t operator()(const ipbnn::BinaryPattern& p) const noexcept {
    std::uint64_t h = ipbnn::splitmix64(p.width());
    for (std::uint64_t w : p.words()) {
      h = ipbnn::splitmix64(h ^ w);
    }
    return static_cast<std::size_t>(h);
  }
};
