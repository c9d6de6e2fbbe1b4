#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "ipbnn/estimator.hpp"

namespace ipbnn {

struct IpRecord {
  std::uint64_t epoch = 0;
  double mi_xt = 0.0;
  double mi_ty = 0.0;
};

/// Per-layer information-plane trajectory. layer_offset is the negative
/// index from the output layer (-1 = last hidden layer).
struct IpTrajectory {
  int layer_offset = 0;
  std::uint32_t width = 0;
  std::vector<IpRecord> records;
};

struct LayerSummary {
  int layer_offset = 0;
  std::uint32_t width = 0;
  bool reliable = false;
  double mi_xt_max = 0.0;
  double mi_xt_last_mean = 0.0;
  double mi_xt_last_min = 0.0;
  double mi_xt_last_max = 0.0;
  double mi_ty_last_mean = 0.0;
  double rho = 0.0;
};

struct RunSummary {
  std::string run_id;
  std::string dataset;
  std::string group;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::vector<LayerSummary> layers;
  double acc_last_mean = 0.0;
  double acc_last_min = 0.0;
  double acc_last_max = 0.0;
};

/// Arithmetic mean of the final min(k, len) values.
inline double last_k_mean(const std::vector<double>& series, std::size_t k) {
  if (series.empty() || k == 0) {
    throw std::invalid_argument("last_k_mean: empty series or k == 0");
  }
  const std::size_t n = std::min(k, series.size());
  CompensatedSum acc;
  for (std::size_t i = series.size() - n; i < series.size(); ++i) {
    acc.add(series[i]);
  }
  return acc.value() / static_cast<double>(n);
}

/// rho = (max over all epochs - mean over the last `window` records) / max.
/// A zero-entropy trajectory has nothing to compress: rho = 0.
inline double compression_factor(const IpTrajectory& traj, std::size_t window = 50) {
  if (traj.records.empty()) {
    throw std::invalid_argument("compression_factor: empty trajectory");
  }
  std::vector<double> xs;
  xs.reserve(traj.records.size());
  double mx = 0.0;
  for (const IpRecord& r : traj.records) {
    xs.push_back(r.mi_xt);
    mx = std::max(mx, r.mi_xt);
  }
  if (mx == 0.0) {
    return 0.0;
  }
  const double mean = last_k_mean(xs, window);
  return (mx - mean) / mx;
}

struct SpearmanResult {
  double r_s = 0.0;
  double p_value = 1.0;
  bool exact = false;  // permutation p-value (n <= 8) vs t-approximation
};

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) {
      ++j;
    }
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("spearman: correlation undefined for constant input");
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double rank_correlation(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  return pearson(average_ranks(xs), average_ranks(ys));
}

inline double permutation_p_value(const std::vector<double>& rx,
                                  std::vector<double> ry, double observed) {
  std::sort(ry.begin(), ry.end());
  std::uint64_t at_least = 0;
  std::uint64_t count = 0;
  const double tol = 1e-12;
  do {
    double r;
    try {
      r = pearson(rx, ry);
    } catch (const std::invalid_argument&) {
      r = 0.0;  // unreachable: constant ranks rejected earlier
    }
    if (std::abs(r) >= std::abs(observed) - tol) {
      ++at_least;
    }
    ++count;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(at_least) / static_cast<double>(count);
}

}  // namespace detail

/// Spearman rank correlation with average-rank tie handling. For n <= 8
/// the two-tailed p-value comes from the exact permutation distribution;
/// otherwise from the t-approximation with n-2 degrees of freedom.
inline SpearmanResult spearman(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    throw std::invalid_argument("spearman: need at least 3 pairs");
  }
  SpearmanResult res;
  res.r_s = detail::rank_correlation(xs, ys);
  if (n <= 8) {
    res.exact = true;
    res.p_value = detail::permutation_p_value(detail::average_ranks(xs),
                                              detail::average_ranks(ys), res.r_s);
  } else {
    res.exact = false;
    const double r = std::clamp(res.r_s, -1.0, 1.0);
    if (std::abs(r) >= 1.0) {
      res.p_value = 0.0;
    } else {
      const double t = r * std::sqrt((n - 2) / (1.0 - r * r));
      boost::math::students_t dist(static_cast<double>(n - 2));
      res.p_value = 2.0 * boost::math::cdf(dist, -std::abs(t));
    }
  }
  return res;
}

/// Summarise one run: per-layer rho, last-window MI means, regime flag,
/// and the last-window accuracy aggregate (mean with min-max range).
inline RunSummary build_run_summary(const std::vector<IpTrajectory>& trajectories,
                                    const std::vector<double>& accuracies,
                                    std::uint64_t estimation_sample_count,
                                    std::size_t window = 50) {
  if (trajectories.empty()) {
    throw std::invalid_argument("build_run_summary: no trajectories");
  }
  if (accuracies.empty()) {
    throw std::invalid_argument("build_run_summary: no accuracy series");
  }
  RunSummary s;
  for (const IpTrajectory& traj : trajectories) {
    LayerSummary ls;
    ls.layer_offset = traj.layer_offset;
    ls.width = traj.width;
    ls.reliable = check_regime(estimation_sample_count, traj.width).reliable;
    std::vector<double> xt, ty;
    for (const IpRecord& r : traj.records) {
      xt.push_back(r.mi_xt);
      ty.push_back(r.mi_ty);
      ls.mi_xt_max = std::max(ls.mi_xt_max, r.mi_xt);
    }
    ls.mi_xt_last_mean = last_k_mean(xt, window);
    ls.mi_ty_last_mean = last_k_mean(ty, window);
    const std::size_t wn = std::min(window, xt.size());
    ls.mi_xt_last_min = *std::min_element(xt.end() - wn, xt.end());
    ls.mi_xt_last_max = *std::max_element(xt.end() - wn, xt.end());
    ls.rho = compression_factor(traj, window);
    s.layers.push_back(ls);
  }
  const std::size_t n = std::min(window, accuracies.size());
  s.acc_last_mean = last_k_mean(accuracies, window);
  s.acc_last_min = *std::min_element(accuracies.end() - n, accuracies.end());
  s.acc_last_max = *std::max_element(accuracies.end() - n, accuracies.end());
  return s;
}

struct GroupCorrelation {
  double r_s = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Spearman over (last-window MI mean, last-window accuracy mean) pairs
/// pooled across all runs of a group, for one layer offset.
inline GroupCorrelation correlate_group(const std::vector<RunSummary>& summaries,
                                        int layer_offset) {
  std::vector<double> mi, acc;
  for (const RunSummary& s : summaries) {
    for (const LayerSummary& ls : s.layers) {
      if (ls.layer_offset == layer_offset) {
        mi.push_back(ls.mi_xt_last_mean);
        acc.push_back(s.acc_last_mean);
      }
    }
  }
  if (mi.size() < 3) {
    throw std::invalid_argument("correlate_group: need at least 3 runs with this layer");
  }
  const SpearmanResult r = spearman(mi, acc);
  return GroupCorrelation{r.r_s, r.p_value, mi.size()};
}

}  // namespace ipbnn
