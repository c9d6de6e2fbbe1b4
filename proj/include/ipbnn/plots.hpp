#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipbnn/runner.hpp"
#include "ipbnn/svg.hpp"

namespace ipbnn {

/// Information plane: one epoch-coloured point series per requested layer,
/// with the log2(class_count) reference level on the y axis.
inline void plot_ip(const RunRecord& rec, const std::vector<int>& layer_offsets,
                    const std::filesystem::path& output_path) {
  if (rec.epochs.empty()) {
    throw RunError("plot_ip: run record has no epochs");
  }
  const std::vector<IpTrajectory> trajs = trajectories_from_record(rec);
  std::vector<const IpTrajectory*> selected;
  for (int offset : layer_offsets) {
    const IpTrajectory* found = nullptr;
    for (const IpTrajectory& t : trajs) {
      if (t.layer_offset == offset) {
        found = &t;
      }
    }
    if (!found) {
      throw RunError("plot_ip: layer offset " + std::to_string(offset) +
                     " not present in run " + rec.run_id);
    }
    selected.push_back(found);
  }

  const double log2c =
      rec.class_count > 1 ? std::log2(static_cast<double>(rec.class_count)) : 0.0;
  PlotFrame frame;
  frame.xmin = frame.ymin = 1e300;
  frame.xmax = frame.ymax = -1e300;
  for (const IpTrajectory* t : selected) {
    for (const IpRecord& r : t->records) {
      frame.expand_x(r.mi_xt);
      frame.expand_y(r.mi_ty);
    }
  }
  frame.expand_y(log2c);  // reference level always visible
  frame.expand_y(0.0);
  frame.expand_x(0.0);
  frame.pad();

  SvgCanvas svg(640, 440);
  frame.draw_axes(svg, "I(X;T) [bits]", "I(T;Y) [bits]");
  svg.line(frame.px(frame.xmin), frame.py(log2c), frame.px(frame.xmax),
           frame.py(log2c), "#888888", 1.0, "6,4");
  svg.text(frame.x1 - 4, frame.py(log2c) - 4, "log2(classes)", 10, "end");

  const std::uint64_t min_epoch = rec.epochs.front().epoch;
  const std::uint64_t max_epoch = rec.epochs.back().epoch;
  const double span = max_epoch > min_epoch ? double(max_epoch - min_epoch) : 1.0;
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const IpTrajectory* t = selected[s];
    std::vector<std::pair<double, double>> pts;
    for (const IpRecord& r : t->records) {
      pts.emplace_back(frame.px(r.mi_xt), frame.py(r.mi_ty));
    }
    svg.polyline(pts, series_palette()[s % series_palette().size()], 0.7);
    for (const IpRecord& r : t->records) {
      const double shade = (double(r.epoch) - double(min_epoch)) / span;
      svg.circle(frame.px(r.mi_xt), frame.py(r.mi_ty),
                 selected.size() > 1 ? 2.2 + 0.8 * double(s) : 2.5,
                 gradient_color(shade));
    }
    svg.text(frame.x0 + 8, frame.y0 + 14 + 14 * double(s),
             "layer " + std::to_string(t->layer_offset),
             11, "start");
    svg.circle(frame.x0 + 2, frame.y0 + 10 + 14 * double(s), 3,
               series_palette()[s % series_palette().size()]);
  }
  svg.text(320, 14, rec.run_id, 11, "middle");
  svg.write(output_path);
}

/// Compression factors, one dot per (run, layer), grouped on the x axis by
/// (dataset, group, layer offset) and coloured by the weight decay.
inline void plot_compression_scatter(const std::vector<RunSummary>& summaries,
                                     const std::filesystem::path& output_path) {
  if (summaries.empty()) {
    throw RunError("plot_compression_scatter: no summaries");
  }
  struct Dot {
    std::string category;
    double rho;
    double lambda;
  };
  std::vector<Dot> dots;
  std::set<double> lambdas;
  for (const RunSummary& s : summaries) {
    for (const LayerSummary& l : s.layers) {
      dots.push_back({s.dataset + "/" + s.group + "/" + std::to_string(l.layer_offset),
                      l.rho, s.lambda});
      lambdas.insert(s.lambda);
    }
  }
  std::vector<std::string> categories;
  for (const Dot& d : dots) {
    if (std::find(categories.begin(), categories.end(), d.category) ==
        categories.end()) {
      categories.push_back(d.category);
    }
  }
  std::sort(categories.begin(), categories.end());

  SvgCanvas svg(640, 460);
  PlotFrame frame;
  frame.y1 = 340;  // leave room for rotated category labels
  frame.xmin = -0.5;
  frame.xmax = double(categories.size()) - 0.5;
  frame.ymin = 0.0;
  frame.ymax = 1.0;
  svg.line(frame.x0, frame.y1, frame.x1, frame.y1, "black");
  svg.line(frame.x0, frame.y0, frame.x0, frame.y1, "black");
  for (double t = 0.0; t <= 1.0 + 1e-9; t += 0.25) {
    svg.line(frame.x0, frame.py(t), frame.x1, frame.py(t), "#dddddd");
    svg.text(frame.x0 - 7, frame.py(t) + 3, SvgCanvas::fmt(t), 10, "end");
  }
  svg.text(16, (frame.y0 + frame.y1) / 2, "compression factor", 12, "middle", -90);

  const double lam_min = *lambdas.begin();
  const double lam_max = *lambdas.rbegin();
  const double lam_span = lam_max > lam_min ? lam_max - lam_min : 1.0;
  std::map<std::string, int> jitter_count;
  for (const Dot& d : dots) {
    const auto it = std::find(categories.begin(), categories.end(), d.category);
    const double cx = double(it - categories.begin());
    const int k = jitter_count[d.category]++;
    const double jitter = 0.28 * std::sin(1.7 * double(k + 1));
    svg.circle(frame.px(cx + jitter), frame.py(std::clamp(d.rho, 0.0, 1.0)), 3.0,
               gradient_color((d.lambda - lam_min) / lam_span));
  }
  for (std::size_t c = 0; c < categories.size(); ++c) {
    svg.text(frame.px(double(c)), frame.y1 + 12, categories[c], 9, "end", -40);
  }
  // lambda legend
  double lx = frame.x0;
  for (double lam : lambdas) {
    svg.circle(lx + 4, 12, 3, gradient_color((lam - lam_min) / lam_span));
    svg.text(lx + 10, 16, SvgCanvas::fmt(lam), 9);
    lx += 44;
  }
  svg.write(output_path);
}

/// MI of one layer vs validation accuracy across the weight decay grid.
/// Per lambda the runs are pooled: mean of the last-window means, with the
/// min-max range over the window as bars. MI uses the left axis, accuracy
/// the right.
inline void plot_mi_accuracy(const std::vector<RunSummary>& summaries,
                             int layer_offset,
                             const std::filesystem::path& output_path) {
  struct Cell {
    std::vector<double> mi_mean, mi_min, mi_max;
    std::vector<double> acc_mean, acc_min, acc_max;
  };
  std::map<double, Cell> by_lambda;
  for (const RunSummary& s : summaries) {
    for (const LayerSummary& l : s.layers) {
      if (l.layer_offset == layer_offset) {
        Cell& c = by_lambda[s.lambda];
        c.mi_mean.push_back(l.mi_xt_last_mean);
        c.mi_min.push_back(l.mi_xt_last_min);
        c.mi_max.push_back(l.mi_xt_last_max);
        c.acc_mean.push_back(s.acc_last_mean);
        c.acc_min.push_back(s.acc_last_min);
        c.acc_max.push_back(s.acc_last_max);
      }
    }
  }
  if (by_lambda.empty()) {
    throw RunError("plot_mi_accuracy: layer offset " + std::to_string(layer_offset) +
                   " not present in the summaries");
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  auto vmin = [](const std::vector<double>& v) {
    return *std::min_element(v.begin(), v.end());
  };
  auto vmax = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end());
  };

  PlotFrame mi_frame, acc_frame;
  mi_frame.xmin = acc_frame.xmin = 1e300;
  mi_frame.xmax = acc_frame.xmax = -1e300;
  mi_frame.ymin = acc_frame.ymin = 1e300;
  mi_frame.ymax = acc_frame.ymax = -1e300;
  for (const auto& [lam, c] : by_lambda) {
    mi_frame.expand_x(lam);
    acc_frame.expand_x(lam);
    mi_frame.expand_y(vmin(c.mi_min));
    mi_frame.expand_y(vmax(c.mi_max));
    acc_frame.expand_y(vmin(c.acc_min));
    acc_frame.expand_y(vmax(c.acc_max));
  }
  mi_frame.pad(0.08);
  acc_frame.pad(0.08);
  acc_frame.xmin = mi_frame.xmin;
  acc_frame.xmax = mi_frame.xmax;

  SvgCanvas svg(640, 440);
  mi_frame.draw_axes(svg, "weight decay", "I(X;T) [bits]");
  // right-hand accuracy axis
  svg.line(mi_frame.x1, mi_frame.y0, mi_frame.x1, mi_frame.y1, "black");
  const double astep = PlotFrame::nice_step(acc_frame.ymax - acc_frame.ymin);
  for (double t = std::ceil(acc_frame.ymin / astep) * astep;
       t <= acc_frame.ymax + 1e-9; t += astep) {
    svg.line(mi_frame.x1, acc_frame.py(t), mi_frame.x1 + 4, acc_frame.py(t), "black");
    svg.text(mi_frame.x1 + 7, acc_frame.py(t) + 3, SvgCanvas::fmt(t), 10);
  }
  svg.text(634, (mi_frame.y0 + mi_frame.y1) / 2, "accuracy [%]", 12, "middle", 90);

  std::vector<std::pair<double, double>> mi_pts, acc_pts;
  for (const auto& [lam, c] : by_lambda) {
    const double x = mi_frame.px(lam);
    svg.line(x - 2, mi_frame.py(vmin(c.mi_min)), x - 2, mi_frame.py(vmax(c.mi_max)),
             series_palette()[0], 1.2);
    mi_pts.emplace_back(x - 2, mi_frame.py(mean(c.mi_mean)));
    svg.line(x + 2, acc_frame.py(vmin(c.acc_min)), x + 2,
             acc_frame.py(vmax(c.acc_max)), series_palette()[1], 1.2);
    acc_pts.emplace_back(x + 2, acc_frame.py(mean(c.acc_mean)));
  }
  svg.polyline(mi_pts, series_palette()[0], 1.0);
  svg.polyline(acc_pts, series_palette()[1], 1.0);
  for (const auto& [x, y] : mi_pts) {
    svg.circle(x, y, 3.0, series_palette()[0]);
  }
  for (const auto& [x, y] : acc_pts) {
    svg.circle(x, y, 3.0, series_palette()[1]);
  }
  svg.circle(mi_frame.x0 + 6, 12, 3, series_palette()[0]);
  svg.text(mi_frame.x0 + 12, 16, "I(X;T) last-50 mean", 10);
  svg.circle(mi_frame.x0 + 146, 12, 3, series_palette()[1]);
  svg.text(mi_frame.x0 + 152, 16, "accuracy last-50 mean", 10);
  svg.write(output_path);
}

/// Estimated vs true entropy over dimensionality, one series per p, with
/// the dotted true-entropy lines and the log2(N) saturation level.
inline void plot_bernoulli_benchmark(const std::vector<BernoulliBenchmarkRow>& rows,
                                     const std::filesystem::path& output_path) {
  if (rows.empty()) {
    throw RunError("plot_bernoulli_benchmark: no rows");
  }
  std::map<double, std::vector<const BernoulliBenchmarkRow*>> by_p;
  for (const auto& r : rows) {
    by_p[r.p].push_back(&r);
  }
  PlotFrame frame;
  frame.xmin = frame.ymin = 1e300;
  frame.xmax = frame.ymax = -1e300;
  const double log2n = std::log2(double(rows.front().sample_count));
  for (const auto& r : rows) {
    frame.expand_x(r.dim);
    frame.expand_y(r.true_entropy_bits);
    frame.expand_y(r.mean_estimate_bits);
  }
  frame.expand_y(log2n);
  frame.expand_y(0.0);
  frame.pad(0.05);

  SvgCanvas svg(640, 440);
  frame.draw_axes(svg, "dimensionality D", "entropy [bits]");
  svg.line(frame.px(frame.xmin), frame.py(log2n), frame.px(frame.xmax),
           frame.py(log2n), "#555555", 1.0, "2,3");
  svg.text(frame.x1 - 4, frame.py(log2n) - 4, "log2(N)", 10, "end");

  std::size_t s = 0;
  for (const auto& [p, series] : by_p) {
    const std::string color = series_palette()[s % series_palette().size()];
    std::vector<std::pair<double, double>> est_pts, true_pts;
    for (const auto* r : series) {
      est_pts.emplace_back(frame.px(r->dim), frame.py(r->mean_estimate_bits));
      true_pts.emplace_back(frame.px(r->dim), frame.py(r->true_entropy_bits));
    }
    svg.polyline(est_pts, color, 1.4);
    for (const auto& [x, y] : est_pts) {
      svg.circle(x, y, 2.4, color);
    }
    // dotted true entropy
    for (std::size_t i = 0; i + 1 < true_pts.size(); ++i) {
      svg.line(true_pts[i].first, true_pts[i].second, true_pts[i + 1].first,
               true_pts[i + 1].second, color, 1.0, "2,4");
    }
    svg.circle(frame.x0 + 6 + 90 * double(s), 12, 3, color);
    svg.text(frame.x0 + 12 + 90 * double(s), 16, "p = " + SvgCanvas::fmt(p), 10);
    ++s;
  }
  svg.write(output_path);
}

}  // namespace ipbnn
