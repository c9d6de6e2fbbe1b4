// Command-line front end: entropy benchmark, experiment runner, run-log
// analysis, and SVG figure emission.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipbnn/analysis.hpp"
#include "ipbnn/config.hpp"
#include "ipbnn/plots.hpp"
#include "ipbnn/runner.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(std::stod(item));
    }
  }
  if (out.empty()) {
    throw ipbnn::ConfigError("expected a comma-separated list of numbers, got '" + s + "'");
  }
  return out;
}

int cmd_bench_entropy(std::uint64_t n, std::uint32_t reps, const std::string& ps,
                      std::uint32_t dmin, std::uint32_t dmax, std::uint64_t seed,
                      const std::string& out_csv, const std::string& out_svg) {
  const std::vector<double> p_list = parse_double_list(ps);
  const auto rows = ipbnn::bernoulli_benchmark(n, dmin, dmax, p_list, reps, seed);
  const std::string csv = ipbnn::bernoulli_benchmark_csv(rows);
  if (out_csv.empty() || out_csv == "-") {
    std::cout << csv;
  } else {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) {
      throw ipbnn::RunError("cannot write CSV: " + out_csv);
    }
    out << csv;
  }
  if (!out_svg.empty()) {
    ipbnn::plot_bernoulli_benchmark(rows, out_svg);
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::int64_t seed_override, std::int64_t stride_override,
              std::int64_t epochs_override) {
  ipbnn::ExperimentConfig cfg = ipbnn::load_config(config_path);
  if (seed_override >= 0) {
    cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
  }
  if (stride_override > 0) {
    cfg.stride = static_cast<std::size_t>(stride_override);
  }
  if (epochs_override > 0) {
    cfg.epochs = static_cast<std::size_t>(epochs_override);
  }
  const auto files = ipbnn::run_experiment(cfg, out_dir);
  for (const auto& f : files) {
    std::cout << f.string() << '\n';
  }
  return 0;
}

int cmd_analyze(const std::string& run_dir, const std::string& out_dir,
                std::size_t window) {
  std::vector<std::string> diagnostics;
  ipbnn::analyze_runs(run_dir, out_dir, window, &diagnostics);
  for (const auto& d : diagnostics) {
    std::cerr << "note: correlation skipped for " << d << '\n';
  }
  std::cout << (fs::path(out_dir) / "summary.csv").string() << '\n'
            << (fs::path(out_dir) / "correlation.csv").string() << '\n';
  return 0;
}

std::vector<fs::path> sorted_run_logs(const std::string& run_dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ipbnn::RunError("no run logs (*.jsonl) in " + run_dir);
  }
  return files;
}

int cmd_plot(const std::string& run_dir, const std::string& kind, int layer,
             const std::string& run_id, std::size_t window, const std::string& out) {
  if (kind == "ip") {
    fs::path chosen;
    for (const auto& f : sorted_run_logs(run_dir)) {
      if (run_id.empty() || f.stem() == run_id) {
        chosen = f;
        break;
      }
    }
    if (chosen.empty()) {
      throw ipbnn::RunError("run id not found: " + run_id);
    }
    const ipbnn::RunRecord rec = ipbnn::read_run_record(chosen);
    std::vector<int> offsets;
    if (layer != 0) {
      offsets.push_back(layer);
    } else {
      const int depth = static_cast<int>(rec.layer_widths.size());
      for (int l = 0; l < depth; ++l) {
        offsets.push_back(l - depth);
      }
    }
    ipbnn::plot_ip(rec, offsets, out);
    return 0;
  }
  std::vector<ipbnn::RunSummary> summaries;
  for (const auto& f : sorted_run_logs(run_dir)) {
    summaries.push_back(ipbnn::summarize_run(ipbnn::read_run_record(f), window));
  }
  if (kind == "compression") {
    ipbnn::plot_compression_scatter(summaries, out);
  } else if (kind == "mi-accuracy") {
    ipbnn::plot_mi_accuracy(summaries, layer == 0 ? -1 : layer, out);
  } else {
    throw ipbnn::ConfigError("unknown plot kind: " + kind +
                             " (expected ip|compression|mi-accuracy)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-plane analysis of binary neural networks"};
  app.require_subcommand(1);

  // bench-entropy
  std::uint64_t n = 1000;
  std::uint32_t reps = 20;
  std::string ps = "0.5,0.7,0.9";
  std::uint32_t dmin = 1, dmax = 20;
  std::uint64_t bench_seed = 1;
  std::string bench_csv, bench_svg;
  auto* bench = app.add_subcommand("bench-entropy",
                                   "Plug-in entropy estimate on Bernoulli vectors");
  bench->add_option("--n", n, "samples per repetition");
  bench->add_option("--reps", reps, "repetitions per cell");
  bench->add_option("--p", ps, "comma-separated success probabilities");
  bench->add_option("--dmin", dmin, "smallest dimensionality");
  bench->add_option("--dmax", dmax, "largest dimensionality");
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("--out", bench_csv, "CSV output path (default stdout)");
  bench->add_option("--plot", bench_svg, "optional SVG figure path");

  // train
  std::string config_path, train_out;
  std::int64_t seed_override = -1, stride_override = 0, epochs_override = 0;
  auto* train = app.add_subcommand("train", "Run the experiment grid of a config");
  train->add_option("--config", config_path, "experiment config (JSON)")->required();
  train->add_option("--out", train_out, "output directory for run logs")->required();
  train->add_option("--seed", seed_override, "override: single seed");
  train->add_option("--stride", stride_override, "override: MI recording stride");
  train->add_option("--epochs", epochs_override, "override: epoch count");

  // analyze
  std::string analyze_runs_dir, analyze_out;
  std::size_t window = 50;
  auto* analyze = app.add_subcommand("analyze", "Summaries and correlations from run logs");
  analyze->add_option("--runs", analyze_runs_dir, "directory of run logs")->required();
  analyze->add_option("--out", analyze_out, "output directory for CSVs")->required();
  analyze->add_option("--window", window, "last-K-epochs analysis window");

  // plot
  std::string plot_runs_dir, plot_kind, plot_out, plot_run_id;
  int plot_layer = 0;
  std::size_t plot_window = 50;
  auto* plot = app.add_subcommand("plot", "Emit an SVG figure from run logs");
  plot->add_option("--runs", plot_runs_dir, "directory of run logs")->required();
  plot->add_option("--kind", plot_kind, "ip | compression | mi-accuracy")->required();
  plot->add_option("--layer", plot_layer, "layer offset (negative, -1 = last hidden)");
  plot->add_option("--run", plot_run_id, "run id for --kind ip (default: first)");
  plot->add_option("--window", plot_window, "analysis window");
  plot->add_option("--out", plot_out, "SVG output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) {
      return cmd_bench_entropy(n, reps, ps, dmin, dmax, bench_seed, bench_csv,
                               bench_svg);
    }
    if (train->parsed()) {
      return cmd_train(config_path, train_out, seed_override, stride_override,
                       epochs_override);
    }
    if (analyze->parsed()) {
      return cmd_analyze(analyze_runs_dir, analyze_out, window);
    }
    if (plot->parsed()) {
      return cmd_plot(plot_runs_dir, plot_kind, plot_layer, plot_run_id,
                      plot_window, plot_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
