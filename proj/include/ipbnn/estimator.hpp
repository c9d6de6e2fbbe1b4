#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ipbnn/bitpattern.hpp"

namespace ipbnn {

/// Occurrence counts n_x over the observed alphabet; only seen symbols
/// are stored, so every stored count is >= 1.
template <class Symbol>
struct EmpiricalDistribution {
  std::uint64_t total = 0;
  std::unordered_map<Symbol, std::uint64_t> counts;

  void add(const Symbol& s, std::uint64_t n = 1) {
    counts[s] += n;
    total += n;
  }
};

/// Joint occurrence counts over (symbol, class label) pairs.
template <class Symbol>
struct JointCounts {
  std::uint64_t total = 0;
  std::unordered_map<Symbol, std::vector<std::uint64_t>> counts;  // per-label

  void add(const Symbol& s, std::size_t label, std::uint64_t n = 1) {
    auto& row = counts[s];
    if (row.size() <= label) {
      row.resize(label + 1, 0);
    }
    row[label] += n;
    total += n;
  }
};

struct RegimeVerdict {
  std::uint64_t sample_count = 0;
  std::uint32_t pattern_width = 0;
  double log2_alphabet_size = 0.0;  // = pattern_width
  bool reliable = false;
  std::uint32_t max_reliable_width = 0;
};

/// Kahan-compensated accumulator.
class CompensatedSum {
public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

private:
  double s_ = 0.0;
  double c_ = 0.0;
};

template <class Symbol>
EmpiricalDistribution<Symbol> count_symbols(const std::vector<Symbol>& sample) {
  if (sample.empty()) {
    throw std::invalid_argument("count_symbols: empty sample");
  }
  EmpiricalDistribution<Symbol> dist;
  dist.counts.reserve(sample.size());
  for (const Symbol& s : sample) {
    dist.add(s);
  }
  return dist;
}

inline EmpiricalDistribution<BinaryPattern> count_patterns(const PatternBatch& batch) {
  if (batch.empty()) {
    throw std::invalid_argument("count_patterns: empty sample");
  }
  EmpiricalDistribution<BinaryPattern> dist;
  dist.counts.reserve(batch.size());
  for (const BinaryPattern& p : batch) {
    dist.add(p);
  }
  return dist;
}

/// Plug-in entropy -sum p_hat log2 p_hat in bits, with 0 log 0 = 0.
template <class Symbol>
double plugin_entropy(const EmpiricalDistribution<Symbol>& dist) {
  if (dist.total == 0) {
    throw std::invalid_argument("plugin_entropy: empty distribution");
  }
  const double n = static_cast<double>(dist.total);
  CompensatedSum acc;
  for (const auto& [sym, count] : dist.counts) {
    const double p = static_cast<double>(count) / n;
    acc.add(-p * std::log2(p));
  }
  // Rounding can leave a tiny negative residue when a single symbol holds
  // all the mass.
  return std::max(0.0, acc.value());
}

/// Plug-in mutual information of the empirical joint, in bits.
template <class Symbol>
double plugin_joint_mi(const JointCounts<Symbol>& joint) {
  if (joint.total == 0) {
    throw std::invalid_argument("plugin_joint_mi: empty joint distribution");
  }
  const double n = static_cast<double>(joint.total);
  std::vector<std::uint64_t> label_marginal;
  for (const auto& [sym, row] : joint.counts) {
    if (row.size() > label_marginal.size()) {
      label_marginal.resize(row.size(), 0);
    }
    for (std::size_t y = 0; y < row.size(); ++y) {
      label_marginal[y] += row[y];
    }
  }
  CompensatedSum acc;
  for (const auto& [sym, row] : joint.counts) {
    std::uint64_t sym_marginal = 0;
    for (std::uint64_t c : row) {
      sym_marginal += c;
    }
    for (std::size_t y = 0; y < row.size(); ++y) {
      if (row[y] == 0) {
        continue;
      }
      const double p_ty = static_cast<double>(row[y]) / n;
      const double p_t = static_cast<double>(sym_marginal) / n;
      const double p_y = static_cast<double>(label_marginal[y]) / n;
      acc.add(p_ty * std::log2(p_ty / (p_t * p_y)));
    }
  }
  return std::max(0.0, acc.value());
}

/// I(X;T) for a deterministic network reduces to H(T).
inline double mi_input_representation(const PatternBatch& batch) {
  return plugin_entropy(count_patterns(batch));
}

namespace detail {

// Reliability test: N >= k^2 / (log2 k)^2 with k = 2^d, evaluated with a
// 5% slack factor. The strict inequality misses the N=10000 -> d=10
// endpoint by ~4.9% (2^20/100 = 10485.76), so the slack absorbs that
// rounding while still rejecting (800, 8) and (10000, 11).
inline constexpr double kRegimeSlack = 1.05;

inline bool width_reliable(std::uint64_t sample_count, std::uint32_t width) {
  if (width == 1) {
    return true;  // degenerate floor: d=1 is always deemed reliable
  }
  // log-domain comparison; 2d - 2 log2 d vs log2(slack * N)
  const double d = static_cast<double>(width);
  const double log2_threshold = 2.0 * d - 2.0 * std::log2(d);
  const double log2_budget =
      std::log2(kRegimeSlack * static_cast<double>(sample_count));
  return log2_threshold <= log2_budget;
}

}  // namespace detail

/// Largest layer width d for which N samples admit reliable plug-in
/// estimation over the 2^d-sized alphabet.
inline std::uint32_t max_reliable_width(std::uint64_t sample_count) {
  if (sample_count == 0) {
    throw std::invalid_argument("max_reliable_width: sample_count must be >= 1");
  }
  std::uint32_t d = 1;
  while (d < 512 && detail::width_reliable(sample_count, d + 1)) {
    ++d;
  }
  return d;
}

inline RegimeVerdict check_regime(std::uint64_t sample_count, std::uint32_t width) {
  if (sample_count == 0 || width == 0) {
    throw std::invalid_argument("check_regime: arguments must be >= 1");
  }
  RegimeVerdict v;
  v.sample_count = sample_count;
  v.pattern_width = width;
  v.log2_alphabet_size = static_cast<double>(width);
  v.max_reliable_width = max_reliable_width(sample_count);
  v.reliable = width <= v.max_reliable_width;
  return v;
}

/// h2(p) = -p log2 p - (1-p) log2 (1-p), with h2(0) = h2(1) = 0.
inline double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binary_entropy: p must be in [0,1]");
  }
  if (p == 0.0 || p == 1.0) {
    return 0.0;
  }
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

struct BernoulliBenchmarkRow {
  double p = 0.0;
  std::uint32_t dim = 0;
  double true_entropy_bits = 0.0;
  double mean_estimate_bits = 0.0;
  double std_estimate_bits = 0.0;
  std::uint64_t sample_count = 0;
  std::uint32_t repetitions = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// mt19937_64 has a standard-specified output sequence; mapping to [0,1)
// by hand keeps the draws portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Plug-in estimate quality on synthetic D-dimensional Bernoulli vectors
/// with known entropy D*h2(p). Each (p, D, repetition) cell draws from its
/// own stream derived from the master seed, so cells are independent and
/// the whole table is reproducible.
inline std::vector<BernoulliBenchmarkRow> bernoulli_benchmark(
    std::uint64_t sample_count, std::uint32_t dim_min, std::uint32_t dim_max,
    const std::vector<double>& ps, std::uint32_t repetitions,
    std::uint64_t seed) {
  if (sample_count == 0 || repetitions == 0 || dim_min == 0 || dim_max < dim_min) {
    throw std::invalid_argument("bernoulli_benchmark: parameters must be positive");
  }
  for (double p : ps) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("bernoulli_benchmark: p must be in (0,1)");
    }
  }
  std::vector<BernoulliBenchmarkRow> rows;
  for (std::size_t pi = 0; pi < ps.size(); ++pi) {
    const double p = ps[pi];
    for (std::uint32_t d = dim_min; d <= dim_max; ++d) {
      std::vector<double> estimates(repetitions);
      for (std::uint32_t rep = 0; rep < repetitions; ++rep) {
        const std::uint64_t stream =
            splitmix64(splitmix64(splitmix64(seed ^ (pi + 1)) ^ d) ^ rep);
        std::mt19937_64 rng(stream);
        PatternBatch batch(d);
        for (std::uint64_t i = 0; i < sample_count; ++i) {
          BinaryPattern pat(d);
          for (std::uint32_t b = 0; b < d; ++b) {
            if (detail::uniform01(rng) < p) {
              pat.set_bit(b, true);
            }
          }
          batch.push_back(std::move(pat));
        }
        estimates[rep] = plugin_entropy(count_patterns(batch));
      }
      double mean = 0.0;
      for (double e : estimates) {
        mean += e;
      }
      mean /= repetitions;
      double var = 0.0;
      for (double e : estimates) {
        var += (e - mean) * (e - mean);
      }
      var = repetitions > 1 ? var / (repetitions - 1) : 0.0;

      BernoulliBenchmarkRow row;
      row.p = p;
      row.dim = d;
      row.true_entropy_bits = d * binary_entropy(p);
      row.mean_estimate_bits = mean;
      row.std_estimate_bits = std::sqrt(var);
      row.sample_count = sample_count;
      row.repetitions = repetitions;
      row.seed = seed;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ipbnn
