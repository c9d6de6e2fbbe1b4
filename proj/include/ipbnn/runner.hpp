#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipbnn/analysis.hpp"
#include "ipbnn/bnn.hpp"
#include "ipbnn/config.hpp"
#include "ipbnn/data.hpp"
#include "ipbnn/estimator.hpp"

namespace ipbnn {

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LayerMi {
  int offset = 0;
  double mi_xt = 0.0;
  double mi_ty = 0.0;
};

struct EpochRecord {
  std::uint64_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  std::vector<LayerMi> layers;
};

/// One training run as persisted to a JSON-lines log: a header object
/// followed by one object per recorded epoch.
struct RunRecord {
  int schema_version = 1;
  std::string run_id;
  nlohmann::ordered_json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::string dataset;
  std::string group;
  std::uint64_t estimation_sample_count = 0;
  std::uint32_t class_count = 0;
  std::vector<std::uint32_t> layer_widths;
  std::vector<bool> regime_flags;
  std::vector<EpochRecord> epochs;
};

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline nlohmann::ordered_json epoch_to_json(const EpochRecord& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = e.train_loss;
  j["val_accuracy"] = e.val_accuracy;
  j["layers"] = nlohmann::ordered_json::array();
  for (const LayerMi& l : e.layers) {
    j["layers"].push_back({{"offset", l.offset}, {"mi_xt", l.mi_xt}, {"mi_ty", l.mi_ty}});
  }
  return j;
}

}  // namespace detail

inline void write_run_record(const RunRecord& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RunError("cannot write run log: " + path.string());
  }
  nlohmann::ordered_json header;
  header["schema_version"] = rec.schema_version;
  header["run_id"] = rec.run_id;
  header["config"] = rec.config;
  header["config_hash"] = rec.config_hash;
  header["seed"] = rec.seed;
  header["lambda"] = rec.lambda;
  header["dataset"] = rec.dataset;
  header["group"] = rec.group;
  header["estimation_sample_count"] = rec.estimation_sample_count;
  header["class_count"] = rec.class_count;
  header["layer_widths"] = rec.layer_widths;
  header["regime_flags"] = rec.regime_flags;
  out << header.dump() << '\n';
  for (const EpochRecord& e : rec.epochs) {
    out << detail::epoch_to_json(e).dump() << '\n';
  }
}

inline RunRecord read_run_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RunError("cannot open run log: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw RunError("empty run log: " + path.string());
  }
  RunRecord rec;
  try {
    const auto header = nlohmann::ordered_json::parse(line);
    rec.schema_version = header.at("schema_version").get<int>();
    if (rec.schema_version != 1) {
      throw RunError("unsupported run log schema version");
    }
    rec.run_id = header.at("run_id").get<std::string>();
    rec.config = header.at("config");
    rec.config_hash = header.value("config_hash", "");
    rec.seed = header.at("seed").get<std::uint64_t>();
    rec.lambda = header.at("lambda").get<double>();
    rec.dataset = header.at("dataset").get<std::string>();
    rec.group = header.at("group").get<std::string>();
    rec.estimation_sample_count = header.at("estimation_sample_count").get<std::uint64_t>();
    rec.class_count = header.value("class_count", std::uint32_t{0});
    rec.layer_widths = header.at("layer_widths").get<std::vector<std::uint32_t>>();
    rec.regime_flags = header.at("regime_flags").get<std::vector<bool>>();
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      const auto j = nlohmann::json::parse(line);
      EpochRecord e;
      e.epoch = j.at("epoch").get<std::uint64_t>();
      e.train_loss = j.at("train_loss").get<double>();
      e.val_accuracy = j.at("val_accuracy").get<double>();
      for (const auto& l : j.at("layers")) {
        e.layers.push_back({l.at("offset").get<int>(), l.at("mi_xt").get<double>(),
                            l.at("mi_ty").get<double>()});
      }
      rec.epochs.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw RunError("corrupt run log " + path.string() + ": " + e.what());
  }
  return rec;
}

/// Rebuild the per-layer information-plane trajectories from a run log.
inline std::vector<IpTrajectory> trajectories_from_record(const RunRecord& rec) {
  const std::size_t depth = rec.layer_widths.size();
  std::vector<IpTrajectory> trajs(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    trajs[l].layer_offset = static_cast<int>(l) - static_cast<int>(depth);
    trajs[l].width = rec.layer_widths[l];
  }
  for (const EpochRecord& e : rec.epochs) {
    for (const LayerMi& lm : e.layers) {
      const std::size_t l = static_cast<std::size_t>(lm.offset + static_cast<int>(depth));
      if (l >= depth) {
        throw RunError("run log layer offset out of range");
      }
      trajs[l].records.push_back({e.epoch, lm.mi_xt, lm.mi_ty});
    }
  }
  return trajs;
}

inline RunSummary summarize_run(const RunRecord& rec, std::size_t window = 50) {
  std::vector<double> acc;
  for (const EpochRecord& e : rec.epochs) {
    acc.push_back(e.val_accuracy);
  }
  RunSummary s = build_run_summary(trajectories_from_record(rec), acc,
                                   rec.estimation_sample_count, window);
  s.run_id = rec.run_id;
  s.dataset = rec.dataset;
  s.group = rec.group;
  s.seed = rec.seed;
  s.lambda = rec.lambda;
  return s;
}

// ---------------------------------------------------------------------------
// Experiment execution

struct LoadedExperimentData {
  LabeledDataset train;
  LabeledDataset eval;  // MI estimation + accuracy set
};

/// Resolve the configured dataset into a training set and the evaluation
/// set used for MI estimation (the validation split for SZT, the
/// designated test split for the image datasets).
inline LoadedExperimentData load_experiment_data(const DatasetConfig& d) {
  LoadedExperimentData out;
  if (d.name == "szt" || d.name == "szt-standin") {
    LabeledDataset full = d.name == "szt" ? load_szt(d.path)
                                          : generate_szt_standin(d.standin_seed);
    auto [train, val] = split(full, d.validation_fraction, d.split_seed);
    out.train = std::move(train);
    out.eval = std::move(val);
  } else if (d.name == "mnist" || d.name == "fashion-mnist") {
    out.train = load_idx(d.train_images, d.train_labels);
    out.eval = load_idx(d.test_images, d.test_labels);
    out.train.name = d.name;
    out.eval.name = d.name;
    if (d.train_subset != 0) {
      out.train = head(out.train, d.train_subset);
    }
  } else {
    throw RunError("unknown dataset name: " + d.name);
  }
  return out;
}

/// Evaluation-mode MI snapshot: Î(X;T_l) = Ĥ(T_l) and the joint plug-in
/// Î(T_l;Y) for every hidden layer. The output layer is excluded.
inline std::vector<LayerMi> estimate_layer_mi(BnnModel& model,
                                              const LabeledDataset& eval_set) {
  if (model.mode() != Mode::evaluation) {
    throw RunError("estimate_layer_mi: model must be in evaluation mode");
  }
  const Matrix inputs = dataset_matrix(eval_set);
  const std::vector<PatternBatch> batches = extract_binary_activations(model, inputs);
  std::vector<LayerMi> out;
  const int depth = static_cast<int>(batches.size());
  for (int l = 0; l < depth; ++l) {
    LayerMi lm;
    lm.offset = l - depth;
    lm.mi_xt = mi_input_representation(batches[l]);
    JointCounts<BinaryPattern> joint;
    for (std::size_t i = 0; i < batches[l].size(); ++i) {
      joint.add(batches[l][i], eval_set.labels[i]);
    }
    lm.mi_ty = plugin_joint_mi(joint);
    out.push_back(lm);
  }
  return out;
}

/// Train one (lambda, seed) cell and collect its run record.
inline RunRecord run_single(const ExperimentConfig& cfg,
                            const LoadedExperimentData& data, double lambda,
                            std::uint64_t seed) {
  ArchitectureSpec arch;
  arch.input_dim = data.train.input_dim;
  arch.hidden_widths = cfg.hidden_widths;
  arch.output_classes = data.train.class_count;

  BnnModel model(arch, seed);
  Optimizer opt(model, cfg.learning_rate, lambda);

  RunRecord rec;
  rec.config = config_to_json(cfg);
  rec.config_hash = config_hash(cfg);
  rec.seed = seed;
  rec.lambda = lambda;
  rec.dataset = data.train.name.empty() ? cfg.dataset.name : data.train.name;
  rec.group = cfg.group();
  rec.estimation_sample_count = data.eval.size();
  rec.class_count = static_cast<std::uint32_t>(data.train.class_count);
  {
    std::ostringstream id;
    id << rec.dataset << '_' << rec.group << "_lam" << lambda << "_seed" << seed;
    rec.run_id = id.str();
  }
  for (std::size_t w : cfg.hidden_widths) {
    rec.layer_widths.push_back(static_cast<std::uint32_t>(w));
    rec.regime_flags.push_back(
        check_regime(data.eval.size(), static_cast<std::uint32_t>(w)).reliable);
  }

  for (std::uint64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double loss =
        train_epoch(model, opt, data.train, cfg.batch_size, seed, epoch);
    if (epoch % cfg.stride == 0 || epoch == cfg.epochs) {
      model.set_mode(Mode::evaluation);
      EpochRecord e;
      e.epoch = epoch;
      e.train_loss = loss;
      e.val_accuracy = evaluate_accuracy(model, data.eval);
      e.layers = estimate_layer_mi(model, data.eval);
      rec.epochs.push_back(std::move(e));
      model.set_mode(Mode::training);
    }
  }
  return rec;
}

/// Run the full (lambda x seed) grid of a config, one JSONL log per cell.
inline std::vector<std::filesystem::path> run_experiment(
    const ExperimentConfig& cfg, const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  const LoadedExperimentData data = load_experiment_data(cfg.dataset);
  std::vector<std::filesystem::path> files;
  for (double lambda : cfg.lambdas) {
    for (std::uint64_t seed : cfg.seeds) {
      RunRecord rec = run_single(cfg, data, lambda, seed);
      const std::filesystem::path file = output_dir / (rec.run_id + ".jsonl");
      write_run_record(rec, file);
      files.push_back(file);
    }
  }
  return files;
}

// ---------------------------------------------------------------------------
// Aggregation: summary and correlation CSVs

inline std::string summary_csv(const std::vector<RunSummary>& summaries) {
  std::ostringstream out;
  out << "dataset,group,run_id,seed,lambda,layer_offset,width,reliable,"
         "mi_xt_max,mi_xt_last50_mean,mi_ty_last50_mean,rho,"
         "acc_last50_mean,acc_last50_min,acc_last50_max\n";
  for (const RunSummary& s : summaries) {
    for (const LayerSummary& l : s.layers) {
      out << s.dataset << ',' << s.group << ',' << s.run_id << ',' << s.seed << ','
          << format_double(s.lambda) << ',' << l.layer_offset << ',' << l.width << ','
          << (l.reliable ? "true" : "false") << ',' << format_double(l.mi_xt_max)
          << ',' << format_double(l.mi_xt_last_mean) << ','
          << format_double(l.mi_ty_last_mean) << ',' << format_double(l.rho) << ','
          << format_double(s.acc_last_mean) << ',' << format_double(s.acc_last_min)
          << ',' << format_double(s.acc_last_max) << '\n';
    }
  }
  return out.str();
}

struct CorrelationRow {
  std::string dataset;
  std::string group;
  int layer_offset = 0;
  std::size_t n = 0;
  double r_s = 0.0;
  double p_value = 1.0;
};

inline std::vector<CorrelationRow> correlate_groups(
    const std::vector<RunSummary>& summaries, std::vector<std::string>* skipped = nullptr) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunSummary*>> groups;
  for (const RunSummary& s : summaries) {
    groups[{s.dataset, s.group}].push_back(&s);
  }
  std::vector<CorrelationRow> rows;
  for (const auto& [key, members] : groups) {
    std::set<int> offsets;
    for (const RunSummary* s : members) {
      for (const LayerSummary& l : s->layers) {
        offsets.insert(l.layer_offset);
      }
    }
    std::vector<RunSummary> group_summaries;
    for (const RunSummary* s : members) {
      group_summaries.push_back(*s);
    }
    for (int offset : offsets) {
      try {
        const GroupCorrelation c = correlate_group(group_summaries, offset);
        rows.push_back({key.first, key.second, offset, c.n, c.r_s, c.p_value});
      } catch (const std::invalid_argument& e) {
        if (skipped) {
          skipped->push_back(key.first + "/" + key.second + " layer " +
                             std::to_string(offset) + ": " + e.what());
        }
      }
    }
  }
  return rows;
}

inline std::string correlation_csv(const std::vector<CorrelationRow>& rows) {
  std::ostringstream out;
  out << "dataset,group,layer_offset,n,r_s,p_value\n";
  for (const CorrelationRow& r : rows) {
    out << r.dataset << ',' << r.group << ',' << r.layer_offset << ',' << r.n << ','
        << format_double(r.r_s) << ',' << format_double(r.p_value) << '\n';
  }
  return out.str();
}

/// Read every .jsonl log in a directory (sorted by path) and emit
/// <prefix>summary.csv and <prefix>correlation.csv.
inline std::vector<RunSummary> analyze_runs(const std::filesystem::path& run_dir,
                                            const std::filesystem::path& out_dir,
                                            std::size_t window = 50,
                                            std::vector<std::string>* diagnostics = nullptr) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(run_dir)) {
    throw RunError("not a directory: " + run_dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    if (entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw RunError("no run logs (*.jsonl) in " + run_dir.string());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> summaries;
  for (const auto& f : files) {
    summaries.push_back(summarize_run(read_run_record(f), window));
  }
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "summary.csv", std::ios::binary);
    out << summary_csv(summaries);
  }
  {
    std::ofstream out(out_dir / "correlation.csv", std::ios::binary);
    out << correlation_csv(correlate_groups(summaries, diagnostics));
  }
  return summaries;
}

inline std::string bernoulli_benchmark_csv(const std::vector<BernoulliBenchmarkRow>& rows) {
  std::ostringstream out;
  out << "p,D,true_entropy_bits,mean_estimate_bits,std_estimate_bits,n,reps,seed\n";
  for (const auto& r : rows) {
    out << format_double(r.p) << ',' << r.dim << ',' << format_double(r.true_entropy_bits)
        << ',' << format_double(r.mean_estimate_bits) << ','
        << format_double(r.std_estimate_bits) << ',' << r.sample_count << ','
        << r.repetitions << ',' << r.seed << '\n';
  }
  return out.str();
}

}  // namespace ipbnn
