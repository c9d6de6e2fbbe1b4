#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ipbnn/config.hpp"
#include "ipbnn/plots.hpp"
#include "ipbnn/runner.hpp"

using namespace ipbnn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

ExperimentConfig tiny_standin_config() {
  ExperimentConfig cfg;
  cfg.dataset.name = "szt-standin";
  cfg.dataset.standin_seed = 2;
  cfg.hidden_widths = {6, 4};
  cfg.lambdas = {0.0, 0.5};
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 256;
  cfg.epochs = 3;
  cfg.seeds = {1, 2};
  cfg.stride = 1;
  return cfg;
}

RunRecord synthetic_record(const std::string& id, std::uint64_t seed,
                           double lambda, double slope) {
  RunRecord rec;
  rec.run_id = id;
  rec.config = nlohmann::ordered_json::object();
  rec.seed = seed;
  rec.lambda = lambda;
  rec.dataset = "synthetic";
  rec.group = "toy";
  rec.estimation_sample_count = 819;
  rec.class_count = 2;
  rec.layer_widths = {6};
  rec.regime_flags = {true};
  for (std::uint64_t e = 1; e <= 60; ++e) {
    EpochRecord epoch;
    epoch.epoch = e;
    epoch.train_loss = 1.0 / static_cast<double>(e);
    epoch.val_accuracy = 50.0 + slope * lambda;
    epoch.layers.push_back({-1, 3.0 + lambda, 0.8});
    rec.epochs.push_back(epoch);
  }
  return rec;
}

}  // namespace

TEST_CASE("architecture presets expand to the documented width lists") {
  REQUIRE(expand_preset("szt", 0) == std::vector<std::size_t>{10, 8, 6, 4});
  REQUIRE(expand_preset("raj-like", 0) ==
          std::vector<std::size_t>{1024, 20, 20, 20, 10});
  REQUIRE(expand_preset("small-bnn", 0) == std::vector<std::size_t>{50, 10, 10});
  for (std::size_t a : {2, 4, 6, 8, 10}) {
    REQUIRE(expand_preset("hourglass", a) ==
            std::vector<std::size_t>({1024, 20, 10, a, 10, 20, 10}));
    REQUIRE(expand_preset("bottleneck", a) ==
            std::vector<std::size_t>({1024, 20, 10, a, 10}));
  }
  REQUIRE_THROWS_AS(expand_preset("hourglass", 3), ConfigError);
  REQUIRE_THROWS_AS(expand_preset("hourglass", 0), ConfigError);
  REQUIRE_THROWS_AS(expand_preset("nope", 0), ConfigError);
}

TEST_CASE("config parsing validates structure") {
  const nlohmann::json good = {
      {"dataset", {{"name", "szt-standin"}}},
      {"architecture", {{"preset", "szt"}}},
      {"lambdas", {0.0, 1.0}},
      {"learning_rate", 1e-4},
      {"batch_size", 64},
      {"epochs", 10},
      {"runs", 3},
      {"stride", 2}};
  const ExperimentConfig cfg = parse_config(good);
  REQUIRE(cfg.hidden_widths == std::vector<std::size_t>{10, 8, 6, 4});
  REQUIRE(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  REQUIRE(cfg.stride == 2);
  REQUIRE(cfg.group() == "szt");

  nlohmann::json bad = good;
  bad["surprise"] = 1;
  REQUIRE_THROWS_WITH(parse_config(bad),
                      Catch::Matchers::ContainsSubstring("unknown field"));

  bad = good;
  bad["dataset"]["extra"] = true;
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);

  bad = good;
  bad.erase("architecture");
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);

  bad = good;
  bad["lambdas"] = {-0.1};
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);

  bad = good;
  bad["epochs"] = 0;
  REQUIRE_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("config hash is stable and sensitive") {
  ExperimentConfig a = tiny_standin_config();
  ExperimentConfig b = tiny_standin_config();
  REQUIRE(config_hash(a) == config_hash(b));
  REQUIRE(config_hash(a).size() == 16);
  b.epochs = 4;
  REQUIRE(config_hash(a) != config_hash(b));
}

TEST_CASE("run record round trips field for field") {
  const auto dir = fresh_dir("ipbnn_runner_rt");
  RunRecord rec = synthetic_record("rt_run", 9, 0.7, 1.0);
  rec.config = config_to_json(tiny_standin_config());
  rec.config_hash = "abc";
  write_run_record(rec, dir / "rt.jsonl");
  const RunRecord back = read_run_record(dir / "rt.jsonl");
  REQUIRE(back.schema_version == rec.schema_version);
  REQUIRE(back.run_id == rec.run_id);
  REQUIRE(back.config == rec.config);
  REQUIRE(back.config_hash == rec.config_hash);
  REQUIRE(back.seed == rec.seed);
  REQUIRE(back.lambda == rec.lambda);
  REQUIRE(back.dataset == rec.dataset);
  REQUIRE(back.group == rec.group);
  REQUIRE(back.estimation_sample_count == rec.estimation_sample_count);
  REQUIRE(back.class_count == rec.class_count);
  REQUIRE(back.layer_widths == rec.layer_widths);
  REQUIRE(back.regime_flags == rec.regime_flags);
  REQUIRE(back.epochs.size() == rec.epochs.size());
  for (std::size_t i = 0; i < rec.epochs.size(); ++i) {
    REQUIRE(back.epochs[i].epoch == rec.epochs[i].epoch);
    REQUIRE(back.epochs[i].train_loss == rec.epochs[i].train_loss);
    REQUIRE(back.epochs[i].val_accuracy == rec.epochs[i].val_accuracy);
    REQUIRE(back.epochs[i].layers.size() == rec.epochs[i].layers.size());
    for (std::size_t l = 0; l < rec.epochs[i].layers.size(); ++l) {
      REQUIRE(back.epochs[i].layers[l].offset == rec.epochs[i].layers[l].offset);
      REQUIRE(back.epochs[i].layers[l].mi_xt == rec.epochs[i].layers[l].mi_xt);
      REQUIRE(back.epochs[i].layers[l].mi_ty == rec.epochs[i].layers[l].mi_ty);
    }
  }
  const std::vector<IpTrajectory> trajs = trajectories_from_record(back);
  REQUIRE(trajs.size() == 1);
  REQUIRE(trajs[0].records.size() == 60);
  REQUIRE(trajs[0].records[0].mi_xt == 3.7);

  REQUIRE_THROWS_AS(read_run_record(dir / "missing.jsonl"), RunError);
  {
    std::ofstream out(dir / "corrupt.jsonl");
    out << "{not json\n";
  }
  REQUIRE_THROWS_AS(read_run_record(dir / "corrupt.jsonl"), RunError);
}

TEST_CASE("estimate_layer_mi requires evaluation mode") {
  const LabeledDataset ds = generate_szt_standin(1);
  ArchitectureSpec arch{12, {5}, 2};
  BnnModel model(arch, 3);
  REQUIRE_THROWS_AS(estimate_layer_mi(model, ds), RunError);
  model.set_mode(Mode::evaluation);
  const auto mi = estimate_layer_mi(model, ds);
  REQUIRE(mi.size() == 1);
  REQUIRE(mi[0].offset == -1);
  REQUIRE(mi[0].mi_xt <= 5.0);
  REQUIRE(mi[0].mi_ty <= 1.0);
  REQUIRE(mi[0].mi_ty <= mi[0].mi_xt + 1e-12);
}

TEST_CASE("run_experiment produces one deterministic log per grid cell") {
  const ExperimentConfig cfg = tiny_standin_config();
  const auto dir1 = fresh_dir("ipbnn_runner_exp1");
  const auto dir2 = fresh_dir("ipbnn_runner_exp2");

  const auto files1 = run_experiment(cfg, dir1);
  REQUIRE(files1.size() == 4);  // 2 lambdas x 2 seeds
  for (const auto& f : files1) {
    const RunRecord rec = read_run_record(f);
    REQUIRE(rec.epochs.size() == 3);
    REQUIRE(rec.layer_widths == std::vector<std::uint32_t>{6, 4});
    REQUIRE(rec.regime_flags == std::vector<bool>{true, true});
    REQUIRE(rec.estimation_sample_count == 819);
    REQUIRE(rec.class_count == 2);
    for (const EpochRecord& e : rec.epochs) {
      REQUIRE(e.layers.size() == 2);
      for (const LayerMi& l : e.layers) {
        REQUIRE(l.mi_xt >= 0.0);
        REQUIRE(l.mi_ty >= -1e-12);
      }
    }
  }

  const auto files2 = run_experiment(cfg, dir2);
  for (std::size_t i = 0; i < files1.size(); ++i) {
    REQUIRE(slurp(files1[i]) == slurp(files2[i]));
  }
}

TEST_CASE("stride controls which epochs are recorded") {
  ExperimentConfig cfg = tiny_standin_config();
  cfg.lambdas = {0.0};
  cfg.seeds = {1};
  cfg.epochs = 5;
  cfg.stride = 2;
  const auto dir = fresh_dir("ipbnn_runner_stride");
  const auto files = run_experiment(cfg, dir);
  const RunRecord rec = read_run_record(files.at(0));
  std::vector<std::uint64_t> epochs;
  for (const auto& e : rec.epochs) {
    epochs.push_back(e.epoch);
  }
  REQUIRE(epochs == std::vector<std::uint64_t>{2, 4, 5});  // stride plus final
}

TEST_CASE("analyze_runs writes the two CSVs") {
  const auto run_dir = fresh_dir("ipbnn_runner_an_runs");
  const auto out_dir = fresh_dir("ipbnn_runner_an_out");
  int idx = 0;
  for (double lambda : {0.0, 0.1, 0.2, 0.5, 0.7, 1.0, 1.1, 1.2, 1.5, 1.7, 2.0}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const RunRecord rec = synthetic_record("run" + std::to_string(idx++), seed,
                                             lambda, 10.0);
      write_run_record(rec, run_dir / (rec.run_id + ".jsonl"));
    }
  }
  std::vector<std::string> diagnostics;
  const auto summaries = analyze_runs(run_dir, out_dir, 50, &diagnostics);
  REQUIRE(summaries.size() == 33);
  REQUIRE(diagnostics.empty());

  const std::string summary = slurp(out_dir / "summary.csv");
  REQUIRE(summary.starts_with(
      "dataset,group,run_id,seed,lambda,layer_offset,width,reliable,"
      "mi_xt_max,mi_xt_last50_mean,mi_ty_last50_mean,rho,"
      "acc_last50_mean,acc_last50_min,acc_last50_max\n"));
  REQUIRE(std::count(summary.begin(), summary.end(), '\n') == 34);

  const std::string corr = slurp(out_dir / "correlation.csv");
  REQUIRE(corr.starts_with("dataset,group,layer_offset,n,r_s,p_value\n"));
  // accuracy = 50 + 10*lambda, mi = 3 + lambda: perfect positive correlation
  REQUIRE(corr.find("synthetic,toy,-1,33,1,") != std::string::npos);

  REQUIRE_THROWS_AS(analyze_runs(fresh_dir("ipbnn_runner_empty"), out_dir), RunError);
}

TEST_CASE("analyze_runs skips too-small groups with a diagnostic") {
  const auto run_dir = fresh_dir("ipbnn_runner_small");
  const auto out_dir = fresh_dir("ipbnn_runner_small_out");
  const RunRecord rec = synthetic_record("only", 1, 0.0, 1.0);
  write_run_record(rec, run_dir / "only.jsonl");
  std::vector<std::string> diagnostics;
  const auto summaries = analyze_runs(run_dir, out_dir, 50, &diagnostics);
  REQUIRE(summaries.size() == 1);
  REQUIRE(diagnostics.size() == 1);
  const std::string corr = slurp(out_dir / "correlation.csv");
  REQUIRE(std::count(corr.begin(), corr.end(), '\n') == 1);  // header only
}

TEST_CASE("bernoulli benchmark CSV has one row per (p, D) cell") {
  const auto rows = bernoulli_benchmark(200, 1, 1, {0.5, 0.7, 0.9}, 5, 3);
  REQUIRE(rows.size() == 3);
  const std::string csv = bernoulli_benchmark_csv(rows);
  REQUIRE(csv.starts_with(
      "p,D,true_entropy_bits,mean_estimate_bits,std_estimate_bits,n,reps,seed\n"));
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);

  const auto rows2 = bernoulli_benchmark(200, 1, 4, {0.5, 0.7, 0.9}, 5, 3);
  REQUIRE(rows2.size() == 12);
}

TEST_CASE("plot emitters produce deterministic SVG files") {
  const auto dir = fresh_dir("ipbnn_runner_plots");
  const RunRecord rec = synthetic_record("plot_run", 1, 0.5, 1.0);

  plot_ip(rec, {-1}, dir / "ip.svg");
  const std::string ip = slurp(dir / "ip.svg");
  REQUIRE(ip.find("<svg") != std::string::npos);
  REQUIRE(ip.find("</svg>") != std::string::npos);
  plot_ip(rec, {-1}, dir / "ip2.svg");
  REQUIRE(slurp(dir / "ip2.svg") == ip);
  REQUIRE_THROWS_AS(plot_ip(rec, {-5}, dir / "bad.svg"), RunError);

  std::vector<RunSummary> summaries;
  for (double lambda : {0.0, 0.5, 1.0}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      summaries.push_back(summarize_run(
          synthetic_record("s", seed, lambda, 5.0)));
    }
  }
  plot_compression_scatter(summaries, dir / "comp.svg");
  REQUIRE(slurp(dir / "comp.svg").find("<svg") != std::string::npos);

  plot_mi_accuracy(summaries, -1, dir / "mi_acc.svg");
  REQUIRE(slurp(dir / "mi_acc.svg").find("<svg") != std::string::npos);
  REQUIRE_THROWS_AS(plot_mi_accuracy(summaries, -9, dir / "bad2.svg"), RunError);

  const auto rows = bernoulli_benchmark(100, 1, 6, {0.5, 0.9}, 3, 1);
  plot_bernoulli_benchmark(rows, dir / "bench.svg");
  REQUIRE(slurp(dir / "bench.svg").find("<svg") != std::string::npos);
}
