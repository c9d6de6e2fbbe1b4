#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipbnn/bitpattern.hpp"
#include "ipbnn/data.hpp"

namespace ipbnn {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }
};

struct ArchitectureSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_classes = 0;

  void validate() const {
    if (input_dim == 0 || output_classes == 0 || hidden_widths.empty()) {
      throw std::invalid_argument("ArchitectureSpec: all dimensions must be >= 1");
    }
    for (std::size_t w : hidden_widths) {
      if (w == 0) {
        throw std::invalid_argument("ArchitectureSpec: layer width must be >= 1");
      }
    }
  }

  bool operator==(const ArchitectureSpec&) const = default;
};

enum class Mode { training, evaluation };

/// Hidden activation selector. `clipped_identity` replaces the sign with
/// the STE surrogate (identity gated by |z| <= 1) in the forward pass as
/// well; used by gradient checks, never by experiments.
enum class HiddenActivation { sign_binary, clipped_identity };

/// t = sgn z with the 0/1 convention; sgn 0 = 0 (strict inequality).
inline double sign_forward(double z) {
  if (!std::isfinite(z)) {
    throw std::invalid_argument("sign_forward: non-finite pre-activation");
  }
  return z > 0.0 ? 1.0 : 0.0;
}

/// Saturation-aware STE gate: pass the upstream gradient iff -1 <= z <= 1.
inline double ste_backward(double z, double upstream_grad) {
  if (!std::isfinite(z)) {
    throw std::invalid_argument("ste_backward: non-finite pre-activation");
  }
  return (z >= -1.0 && z <= 1.0) ? upstream_grad : 0.0;
}

struct HiddenLayerParams {
  Matrix weight;  // out x in
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
};

struct OutputLayerParams {
  Matrix weight;
  std::vector<double> bias;
};

class BnnModel {
public:
  BnnModel(ArchitectureSpec arch, std::uint64_t seed) : arch_(std::move(arch)) {
    arch_.validate();
    std::mt19937_64 rng(splitmix64(seed ^ 0x626e6e696e697400ULL));
    std::size_t fan_in = arch_.input_dim;
    for (std::size_t w : arch_.hidden_widths) {
      hidden_.push_back(make_hidden(w, fan_in, rng));
      fan_in = w;
    }
    output_.weight = init_weight(arch_.output_classes, fan_in, rng);
    output_.bias.assign(arch_.output_classes, 0.0);
  }

  const ArchitectureSpec& arch() const { return arch_; }
  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  HiddenActivation activation = HiddenActivation::sign_binary;
  /// Test knob: batch norm frozen to the identity transform.
  bool batchnorm_identity = false;

  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  std::vector<HiddenLayerParams>& hidden() { return hidden_; }
  const std::vector<HiddenLayerParams>& hidden() const { return hidden_; }
  OutputLayerParams& output() { return output_; }
  const OutputLayerParams& output() const { return output_; }

  /// Trainable tensors in a fixed order (affine, gamma, beta per hidden
  /// layer, then the output affine); optimizer state follows this order.
  std::vector<std::span<double>> parameters() {
    std::vector<std::span<double>> ps;
    for (auto& h : hidden_) {
      ps.emplace_back(h.weight.a);
      ps.emplace_back(h.bias);
      ps.emplace_back(h.gamma);
      ps.emplace_back(h.beta);
    }
    ps.emplace_back(output_.weight.a);
    ps.emplace_back(output_.bias);
    return ps;
  }

private:
  static Matrix init_weight(std::size_t out, std::size_t in, std::mt19937_64& rng) {
    Matrix w(out, in);
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    for (double& x : w.a) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x = bound * (2.0 * u - 1.0);
    }
    return w;
  }

  static HiddenLayerParams make_hidden(std::size_t out, std::size_t in,
                                       std::mt19937_64& rng) {
    HiddenLayerParams h;
    h.weight = init_weight(out, in, rng);
    h.bias.assign(out, 0.0);
    h.gamma.assign(out, 1.0);
    h.beta.assign(out, 0.0);
    h.running_mean.assign(out, 0.0);
    h.running_var.assign(out, 1.0);
    return h;
  }

  ArchitectureSpec arch_;
  std::vector<HiddenLayerParams> hidden_;
  OutputLayerParams output_;
  Mode mode_ = Mode::training;
};

struct LayerTrace {
  Matrix input;        // activations entering the layer
  Matrix pre_norm;     // affine output z
  Matrix normalized;   // (z - mean) / sqrt(var + eps), before gamma/beta
  Matrix pre_sign;     // batch-norm output fed to the activation
  Matrix activated;    // t in {0,1} (or clipped identity in surrogate mode)
  std::vector<double> batch_mean;
  std::vector<double> batch_inv_std;
};

struct ForwardTrace {
  Mode mode = Mode::training;
  std::vector<LayerTrace> layers;
  Matrix logits;
};

struct Gradients {
  std::vector<Matrix> hidden_weight;
  std::vector<std::vector<double>> hidden_bias;
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<double>> beta;
  Matrix output_weight;
  std::vector<double> output_bias;

  /// Same order as BnnModel::parameters().
  std::vector<std::span<const double>> tensors() const {
    std::vector<std::span<const double>> ts;
    for (std::size_t l = 0; l < hidden_weight.size(); ++l) {
      ts.emplace_back(hidden_weight[l].a);
      ts.emplace_back(hidden_bias[l]);
      ts.emplace_back(gamma[l]);
      ts.emplace_back(beta[l]);
    }
    ts.emplace_back(output_weight.a);
    ts.emplace_back(output_bias);
    return ts;
  }
};

namespace detail {

// out[i][o] = bias[o] + sum_j in[i][j] * w[o][j]
inline Matrix affine(const Matrix& in, const Matrix& w, const std::vector<double>& b) {
  Matrix out(in.rows, w.rows);
  for (std::size_t i = 0; i < in.rows; ++i) {
    const double* x = in.row(i);
    double* z = out.row(i);
    for (std::size_t o = 0; o < w.rows; ++o) {
      const double* wr = w.row(o);
      double acc = b[o];
      for (std::size_t j = 0; j < w.cols; ++j) {
        acc += x[j] * wr[j];
      }
      z[o] = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Per hidden layer: affine -> batch norm -> sign; output layer affine only.
inline ForwardTrace forward(BnnModel& model, const Matrix& inputs) {
  if (inputs.cols != model.arch().input_dim) {
    throw std::invalid_argument("forward: input width mismatch");
  }
  if (inputs.rows == 0) {
    throw std::invalid_argument("forward: empty batch");
  }
  ForwardTrace trace;
  trace.mode = model.mode();
  const Matrix* current = &inputs;
  const std::size_t n = inputs.rows;
  for (auto& layer : model.hidden()) {
    LayerTrace lt;
    lt.input = *current;
    lt.pre_norm = detail::affine(lt.input, layer.weight, layer.bias);
    const std::size_t width = layer.weight.rows;
    lt.batch_mean.assign(width, 0.0);
    lt.batch_inv_std.assign(width, 1.0);
    lt.normalized = Matrix(n, width);
    if (model.batchnorm_identity) {
      lt.normalized = lt.pre_norm;
    } else if (model.mode() == Mode::training) {
      std::vector<double> var(width, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          lt.batch_mean[o] += lt.pre_norm(i, o);
        }
      }
      for (std::size_t o = 0; o < width; ++o) {
        lt.batch_mean[o] /= static_cast<double>(n);
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          const double d = lt.pre_norm(i, o) - lt.batch_mean[o];
          var[o] += d * d;
        }
      }
      for (std::size_t o = 0; o < width; ++o) {
        var[o] /= static_cast<double>(n);  // biased batch variance
        lt.batch_inv_std[o] = 1.0 / std::sqrt(var[o] + model.bn_eps);
        const double unbiased =
            n > 1 ? var[o] * static_cast<double>(n) / static_cast<double>(n - 1)
                  : var[o];
        layer.running_mean[o] = (1.0 - model.bn_momentum) * layer.running_mean[o] +
                                model.bn_momentum * lt.batch_mean[o];
        layer.running_var[o] = (1.0 - model.bn_momentum) * layer.running_var[o] +
                               model.bn_momentum * unbiased;
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          lt.normalized(i, o) =
              (lt.pre_norm(i, o) - lt.batch_mean[o]) * lt.batch_inv_std[o];
        }
      }
    } else {
      for (std::size_t o = 0; o < width; ++o) {
        lt.batch_mean[o] = layer.running_mean[o];
        lt.batch_inv_std[o] = 1.0 / std::sqrt(layer.running_var[o] + model.bn_eps);
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          lt.normalized(i, o) =
              (lt.pre_norm(i, o) - lt.batch_mean[o]) * lt.batch_inv_std[o];
        }
      }
    }
    lt.pre_sign = Matrix(n, width);
    lt.activated = Matrix(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < width; ++o) {
        const double y = layer.gamma[o] * lt.normalized(i, o) + layer.beta[o];
        lt.pre_sign(i, o) = y;
        lt.activated(i, o) = model.activation == HiddenActivation::sign_binary
                                 ? sign_forward(y)
                                 : std::clamp(y, -1.0, 1.0);
      }
    }
    trace.layers.push_back(std::move(lt));
    current = &trace.layers.back().activated;
  }
  trace.logits = detail::affine(*current, model.output().weight, model.output().bias);
  return trace;
}

/// Mean softmax cross-entropy of the trace's logits.
inline double cross_entropy_loss(const ForwardTrace& trace,
                                 const std::vector<std::uint16_t>& labels) {
  const std::size_t n = trace.logits.rows;
  if (labels.size() != n) {
    throw std::invalid_argument("cross_entropy_loss: label count mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = trace.logits.row(i);
    const std::size_t c = trace.logits.cols;
    const double mx = *std::max_element(z, z + c);
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      sum += std::exp(z[k] - mx);
    }
    loss += std::log(sum) - (z[labels[i]] - mx);
  }
  return loss / static_cast<double>(n);
}

/// Backpropagation: softmax cross-entropy at the output, chain rule
/// through affine and batch-norm layers, STE through each sign.
inline Gradients backward(const BnnModel& model, const ForwardTrace& trace,
                          const std::vector<std::uint16_t>& labels) {
  if (trace.mode != Mode::training) {
    throw std::invalid_argument("backward: trace was not produced in training mode");
  }
  const std::size_t n = trace.logits.rows;
  if (labels.size() != n) {
    throw std::invalid_argument("backward: label count mismatch");
  }
  const std::size_t classes = trace.logits.cols;
  Gradients g;
  const std::size_t depth = model.hidden().size();
  g.hidden_weight.resize(depth);
  g.hidden_bias.resize(depth);
  g.gamma.resize(depth);
  g.beta.resize(depth);

  // d loss / d logits = (softmax - onehot) / n
  Matrix dlogits(n, classes);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = trace.logits.row(i);
    const double mx = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      sum += std::exp(z[k] - mx);
    }
    for (std::size_t k = 0; k < classes; ++k) {
      dlogits(i, k) = std::exp(z[k] - mx) / sum / static_cast<double>(n);
    }
    dlogits(i, labels[i]) -= 1.0 / static_cast<double>(n);
  }

  const Matrix& last_act = trace.layers.back().activated;
  g.output_weight = Matrix(classes, last_act.cols);
  g.output_bias.assign(classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < classes; ++k) {
      const double d = dlogits(i, k);
      g.output_bias[k] += d;
      const double* x = last_act.row(i);
      double* gw = g.output_weight.row(k);
      for (std::size_t j = 0; j < last_act.cols; ++j) {
        gw[j] += d * x[j];
      }
    }
  }

  // d loss / d t for the last hidden layer
  Matrix dt(n, last_act.cols);
  const Matrix& wout = model.output().weight;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < last_act.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < classes; ++k) {
        acc += dlogits(i, k) * wout(k, j);
      }
      dt(i, j) = acc;
    }
  }

  for (std::size_t l = depth; l-- > 0;) {
    const LayerTrace& lt = trace.layers[l];
    const HiddenLayerParams& layer = model.hidden()[l];
    const std::size_t width = lt.pre_sign.cols;

    // STE gate on the batch-norm output
    Matrix dy(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < width; ++o) {
        dy(i, o) = ste_backward(lt.pre_sign(i, o), dt(i, o));
      }
    }

    g.gamma[l].assign(width, 0.0);
    g.beta[l].assign(width, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < width; ++o) {
        g.gamma[l][o] += dy(i, o) * lt.normalized(i, o);
        g.beta[l][o] += dy(i, o);
      }
    }

    // batch-norm backward
    Matrix dz(n, width);
    if (model.batchnorm_identity) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          dz(i, o) = dy(i, o) * layer.gamma[o];
        }
      }
    } else {
      std::vector<double> sum_dzhat(width, 0.0), sum_dzhat_zhat(width, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          const double dzhat = dy(i, o) * layer.gamma[o];
          sum_dzhat[o] += dzhat;
          sum_dzhat_zhat[o] += dzhat * lt.normalized(i, o);
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < width; ++o) {
          const double dzhat = dy(i, o) * layer.gamma[o];
          dz(i, o) = lt.batch_inv_std[o] *
                     (dzhat - inv_n * sum_dzhat[o] -
                      inv_n * lt.normalized(i, o) * sum_dzhat_zhat[o]);
        }
      }
    }

    g.hidden_weight[l] = Matrix(width, lt.input.cols);
    g.hidden_bias[l].assign(width, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = lt.input.row(i);
      for (std::size_t o = 0; o < width; ++o) {
        const double d = dz(i, o);
        if (d == 0.0) {
          continue;
        }
        g.hidden_bias[l][o] += d;
        double* gw = g.hidden_weight[l].row(o);
        for (std::size_t j = 0; j < lt.input.cols; ++j) {
          gw[j] += d * x[j];
        }
      }
    }

    if (l > 0) {
      Matrix dx(n, lt.input.cols);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < lt.input.cols; ++j) {
          double acc = 0.0;
          for (std::size_t o = 0; o < width; ++o) {
            acc += dz(i, o) * layer.weight(o, j);
          }
          dx(i, j) = acc;
        }
      }
      dt = std::move(dx);
    }
  }
  return g;
}

enum class OptimizerVariant { adam, adamw };

/// Adam / AdamW with decoupled weight decay (w -= lr * lambda * w).
/// lambda = 0 means plain Adam; the trajectories are then bit-identical.
class Optimizer {
public:
  Optimizer(BnnModel& model, double learning_rate, double weight_decay = 0.0,
            double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), lambda_(weight_decay), beta1_(beta1), beta2_(beta2),
        eps_(eps) {
    if (weight_decay < 0.0) {
      throw std::invalid_argument("Optimizer: weight decay must be >= 0");
    }
    for (auto p : model.parameters()) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  OptimizerVariant variant() const {
    return lambda_ == 0.0 ? OptimizerVariant::adam : OptimizerVariant::adamw;
  }
  double learning_rate() const { return lr_; }
  double weight_decay() const { return lambda_; }
  std::uint64_t step_count() const { return step_; }

  void step(BnnModel& model, const Gradients& grads) {
    auto params = model.parameters();
    auto gs = grads.tensors();
    if (params.size() != m_.size() || gs.size() != m_.size()) {
      throw std::invalid_argument("Optimizer::step: tensor count mismatch");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t t = 0; t < params.size(); ++t) {
      if (params[t].size() != gs[t].size()) {
        throw std::invalid_argument("Optimizer::step: tensor shape mismatch");
      }
      auto& m = m_[t];
      auto& v = v_[t];
      for (std::size_t i = 0; i < params[t].size(); ++i) {
        const double g = gs[t][i];
        double& w = params[t][i];
        w -= lr_ * lambda_ * w;  // decoupled decay, all trainable tensors
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  // checkpoint access
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void set_step_count(std::uint64_t s) { step_ = s; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return eps_; }

private:
  double lr_;
  double lambda_;
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

namespace detail {

inline Matrix batch_matrix(const LabeledDataset& ds,
                           const std::vector<std::size_t>& idx, std::size_t begin,
                           std::size_t end) {
  Matrix m(end - begin, ds.input_dim);
  for (std::size_t k = begin; k < end; ++k) {
    std::memcpy(m.row(k - begin), ds.row(idx[k]), ds.input_dim * sizeof(double));
  }
  return m;
}

}  // namespace detail

/// One shuffled pass over the dataset; returns the mean per-sample loss.
/// The shuffle is derived from (seed, epoch_index) so runs replay exactly.
inline double train_epoch(BnnModel& model, Optimizer& opt, const LabeledDataset& ds,
                          std::size_t batch_size, std::uint64_t seed,
                          std::uint64_t epoch_index = 0) {
  if (ds.size() == 0) {
    throw std::invalid_argument("train_epoch: empty dataset");
  }
  if (batch_size == 0) {
    throw std::invalid_argument("train_epoch: batch size must be >= 1");
  }
  model.set_mode(Mode::training);
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  detail::deterministic_shuffle(idx, splitmix64(seed) ^ epoch_index);
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < ds.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, ds.size());
    Matrix batch = detail::batch_matrix(ds, idx, begin, end);
    std::vector<std::uint16_t> labels(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      labels[k - begin] = ds.labels[idx[k]];
    }
    ForwardTrace trace = forward(model, batch);
    loss_sum += cross_entropy_loss(trace, labels) * static_cast<double>(end - begin);
    Gradients grads = backward(model, trace, labels);
    opt.step(model, grads);
  }
  return loss_sum / static_cast<double>(ds.size());
}

/// Binary activations of every hidden layer, one batch per layer.
/// Evaluation mode only; training-mode batch statistics would leak into
/// the estimates.
inline std::vector<PatternBatch> extract_binary_activations(BnnModel& model,
                                                            const Matrix& inputs) {
  if (model.mode() != Mode::evaluation) {
    throw std::invalid_argument(
        "extract_binary_activations: model must be in evaluation mode");
  }
  ForwardTrace trace = forward(model, inputs);
  std::vector<PatternBatch> batches;
  for (const LayerTrace& lt : trace.layers) {
    PatternBatch batch(static_cast<std::uint32_t>(lt.activated.cols));
    for (std::size_t i = 0; i < lt.activated.rows; ++i) {
      BinaryPattern p(static_cast<std::uint32_t>(lt.activated.cols));
      for (std::size_t o = 0; o < lt.activated.cols; ++o) {
        if (lt.activated(i, o) > 0.5) {
          p.set_bit(static_cast<std::uint32_t>(o), true);
        }
      }
      batch.push_back(std::move(p));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

inline Matrix dataset_matrix(const LabeledDataset& ds) {
  Matrix m(ds.size(), ds.input_dim);
  std::memcpy(m.a.data(), ds.inputs.data(), ds.inputs.size() * sizeof(double));
  return m;
}

/// Percentage of argmax-correct predictions; ties go to the lowest index.
inline double evaluate_accuracy(BnnModel& model, const LabeledDataset& ds) {
  if (model.mode() != Mode::evaluation) {
    throw std::invalid_argument("evaluate_accuracy: model must be in evaluation mode");
  }
  if (ds.size() == 0) {
    throw std::invalid_argument("evaluate_accuracy: empty dataset");
  }
  ForwardTrace trace = forward(model, dataset_matrix(ds));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double* z = trace.logits.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < trace.logits.cols; ++k) {
      if (z[k] > z[best]) {
        best = k;
      }
    }
    if (best == ds.labels[i]) {
      ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// Checkpoint container: "IPBC" magic, version, architecture, all parameter
// tensors and batch-norm statistics as raw little-endian doubles, optimizer
// state and step counter. Round trips are bit-exact.

namespace detail {

inline void write_doubles(std::ostream& out, std::span<const double> xs) {
  for (double x : xs) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    write_le<std::uint64_t>(out, bits);
  }
}

inline void read_doubles(std::istream& in, std::span<double> xs) {
  for (double& x : xs) {
    const std::uint64_t bits = read_le<std::uint64_t>(in, "checkpoint payload");
    std::memcpy(&x, &bits, 8);
  }
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, BnnModel& model,
                            const Optimizer& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataFormatError("cannot write checkpoint: " + path.string());
  }
  out.write("IPBC", 4);
  detail::write_le<std::uint16_t>(out, 1);
  detail::write_le<std::uint64_t>(out, model.arch().input_dim);
  detail::write_le<std::uint64_t>(out, model.arch().hidden_widths.size());
  for (std::size_t w : model.arch().hidden_widths) {
    detail::write_le<std::uint64_t>(out, w);
  }
  detail::write_le<std::uint64_t>(out, model.arch().output_classes);
  for (auto p : model.parameters()) {
    detail::write_doubles(out, p);
  }
  for (const auto& h : model.hidden()) {
    detail::write_doubles(out, h.running_mean);
    detail::write_doubles(out, h.running_var);
  }
  const double hyper[5] = {opt.learning_rate(), opt.weight_decay(), opt.beta1(),
                           opt.beta2(), opt.epsilon()};
  detail::write_doubles(out, hyper);
  detail::write_le<std::uint64_t>(out, opt.step_count());
  for (const auto& m : opt.first_moments()) {
    detail::write_doubles(out, m);
  }
  for (const auto& v : opt.second_moments()) {
    detail::write_doubles(out, v);
  }
}

struct Checkpoint {
  BnnModel model;
  Optimizer optimizer;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataFormatError("cannot open checkpoint: " + path.string());
  }
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "IPBC", 4) != 0) {
    throw DataFormatError("bad checkpoint magic (expected IPBC)");
  }
  const auto version = detail::read_le<std::uint16_t>(in, "version");
  if (version != 1) {
    throw DataFormatError("unsupported checkpoint version: " + std::to_string(version));
  }
  ArchitectureSpec arch;
  arch.input_dim = detail::read_le<std::uint64_t>(in, "input dim");
  const auto depth = detail::read_le<std::uint64_t>(in, "layer count");
  for (std::uint64_t i = 0; i < depth; ++i) {
    arch.hidden_widths.push_back(detail::read_le<std::uint64_t>(in, "layer width"));
  }
  arch.output_classes = detail::read_le<std::uint64_t>(in, "output classes");
  BnnModel model(arch, 0);
  for (auto p : model.parameters()) {
    detail::read_doubles(in, p);
  }
  for (auto& h : model.hidden()) {
    detail::read_doubles(in, h.running_mean);
    detail::read_doubles(in, h.running_var);
  }
  double hyper[5];
  detail::read_doubles(in, hyper);
  Optimizer opt(model, hyper[0], hyper[1], hyper[2], hyper[3], hyper[4]);
  opt.set_step_count(detail::read_le<std::uint64_t>(in, "step counter"));
  for (auto& m : opt.first_moments()) {
    detail::read_doubles(in, m);
  }
  for (auto& v : opt.second_moments()) {
    detail::read_doubles(in, v);
  }
  return Checkpoint{std::move(model), std::move(opt)};
}

}  // namespace ipbnn
