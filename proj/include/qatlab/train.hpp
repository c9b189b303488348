#pragma once

// Weight-only QAT on a two-layer tanh MLP with hand-written reverse mode.
//
//   H = tanh(X W1q + b1),  Y = H W2q + b2,  loss = mean((Y - targets)^2)
//
// Wkq = fake_quant(Wk) with a per-tensor max-abs scale recomputed every step.
// dL/dWk = surrogate_backward(dL/dWkq, Wk): the surrogate multiplier replaces
// the rounding Jacobian; no gradient flows into the scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qatlab/error.hpp"
#include "qatlab/quantizer.hpp"
#include "qatlab/rng.hpp"
#include "qatlab/surrogates.hpp"
#include "qatlab/tensor.hpp"

namespace qatlab {

enum class DatasetKind { linear_synth, sine_synth };

inline std::string to_string(DatasetKind kind) {
  return kind == DatasetKind::linear_synth ? "linear_synth" : "sine_synth";
}

struct Dataset {
  Tensor inputs;   // [n, d_in]
  Tensor targets;  // [n, d_out]
};

/// Seed of the hidden teacher weights; fixed so every dataset seed shares one task.
inline constexpr std::uint64_t kTeacherSeed = 0x7EAC4E5ULL;

/// Hidden linear map W* [d_in, d_out] ~ N(0, 1/d_in).
inline Tensor teacher_weights(std::size_t d_in, std::size_t d_out) {
  Rng rng(kTeacherSeed);
  Tensor w({d_in, d_out});
  const double k = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (double& v : w.values()) v = k * rng.normal();
  return w;
}

/// X ~ N(0, I). linear_synth: X W* + eps. sine_synth (d_out = 1): sin(2 pi <w*, x>) + eps,
/// with w* the first teacher column scaled by 1/2.
inline Dataset synth_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed, std::size_t d_in = 8,
                             std::size_t d_out = 1, double noise_sigma = 0.01) {
  if (n == 0) throw DomainError("synth_dataset: n must be >= 1");
  if (d_in == 0 || d_out == 0) throw DomainError("synth_dataset: dimensions must be >= 1");
  if (kind == DatasetKind::sine_synth && d_out != 1) throw DomainError("sine_synth produces scalar targets");

  Rng rng(seed);
  Tensor x({n, d_in});
  for (double& v : x.values()) v = rng.normal();

  const Tensor w_star = teacher_weights(d_in, d_out);
  Tensor y = matmul(x, w_star);
  if (kind == DatasetKind::sine_synth) {
    y = map(y, [](double z) { return std::sin(2.0 * std::numbers::pi * 0.5 * z); });
  }
  Rng noise = rng.split(1);
  if (noise_sigma != 0.0) {
    for (double& v : y.values()) v += noise_sigma * noise.normal();
  }
  return Dataset{std::move(x), std::move(y)};
}

struct MlpDims {
  std::size_t d_in = 8;
  std::size_t d_hidden = 32;
  std::size_t d_out = 1;
};

class MlpModel {
 public:
  MlpModel(Tensor w1, Tensor b1, Tensor w2, Tensor b2)
      : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
    if (w1_.rank() != 2 || w2_.rank() != 2 || b1_.rank() != 1 || b2_.rank() != 1 || w1_.cols() != b1_.numel() ||
        w2_.rows() != w1_.cols() || w2_.cols() != b2_.numel()) {
      throw ShapeError("MlpModel: inconsistent parameter shapes");
    }
  }

  /// W ~ N(0, 1/fan_in), b = 0.
  static MlpModel init(const MlpDims& dims, std::uint64_t seed) {
    Rng rng(seed);
    Tensor w1({dims.d_in, dims.d_hidden});
    Tensor w2({dims.d_hidden, dims.d_out});
    const double k1 = 1.0 / std::sqrt(static_cast<double>(dims.d_in));
    const double k2 = 1.0 / std::sqrt(static_cast<double>(dims.d_hidden));
    for (double& v : w1.values()) v = k1 * rng.normal();
    for (double& v : w2.values()) v = k2 * rng.normal();
    return MlpModel(std::move(w1), Tensor({dims.d_hidden}), std::move(w2), Tensor({dims.d_out}));
  }

  MlpDims dims() const { return {w1_.rows(), w1_.cols(), w2_.cols()}; }
  std::size_t parameter_count() const { return w1_.numel() + b1_.numel() + w2_.numel() + b2_.numel(); }

  const Tensor& w1() const noexcept { return w1_; }
  const Tensor& b1() const noexcept { return b1_; }
  const Tensor& w2() const noexcept { return w2_; }
  const Tensor& b2() const noexcept { return b2_; }

  /// Bumped by every parameter mutation; forward caches record it.
  std::uint64_t version() const noexcept { return version_; }

  /// Flat parameter i in the order W1, b1, W2, b2 (for finite-difference checks).
  double& parameter(std::size_t i) {
    ++version_;
    for (Tensor* t : {&w1_, &b1_, &w2_, &b2_}) {
      if (i < t->numel()) return (*t)[i];
      i -= t->numel();
    }
    throw DomainError("MlpModel::parameter: index out of range");
  }

  bool all_finite() const {
    for (const Tensor* t : {&w1_, &b1_, &w2_, &b2_})
      for (double v : t->values())
        if (!std::isfinite(v)) return false;
    return true;
  }

  template <typename Grads>
  void sgd_step(const Grads& g, double lr) {
    auto step = [lr](Tensor& p, const Tensor& d) {
      auto pv = p.values();
      auto dv = d.values();
      for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= lr * dv[i];
    };
    step(w1_, g.w1);
    step(b1_, g.b1);
    step(w2_, g.w2);
    step(b2_, g.b2);
    ++version_;
  }

 private:
  Tensor w1_, b1_, w2_, b2_;
  std::uint64_t version_ = 0;
};

struct ForwardCache {
  std::uint64_t model_version = 0;
  bool quant_on = false;
  QuantConfig cfg1;
  QuantConfig cfg2;
  Tensor w1;      // pre-quant
  Tensor w2;
  Tensor w1_used; // dequantized when quant_on, else == w1
  Tensor w2_used;
  Tensor x;
  Tensor hidden;  // tanh activations [n, d_hidden]
  Tensor prediction;
};

struct Gradients {
  Tensor w1, b1, w2, b2;

  double global_norm() const {
    double ss = 0.0;
    for (const Tensor* t : {&w1, &b1, &w2, &b2})
      for (double v : t->values()) ss += v * v;
    return std::sqrt(ss);
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const Tensor* t : {&w1, &b1, &w2, &b2}) out.insert(out.end(), t->values().begin(), t->values().end());
    return out;
  }
};

/// Signed b-bit config with the max-abs scale of w.
inline QuantConfig weight_quant_config(const Tensor& w, int bits) {
  const QuantConfig tmpl = QuantConfig::make(bits, true);
  return tmpl.with_scale(compute_scale(w, tmpl));
}

inline ForwardCache qat_forward(const MlpModel& model, const Tensor& x, int bits, bool quant_on) {
  if (x.rank() != 2 || x.cols() != model.dims().d_in) {
    throw ShapeError("qat_forward: input shape " + shape_to_string(x.shape()) + " does not match d_in");
  }
  ForwardCache c;
  c.model_version = model.version();
  c.quant_on = quant_on;
  c.w1 = model.w1();
  c.w2 = model.w2();
  if (quant_on) {
    c.cfg1 = weight_quant_config(c.w1, bits);
    c.cfg2 = weight_quant_config(c.w2, bits);
    c.w1_used = fake_quant(c.w1, c.cfg1);
    c.w2_used = fake_quant(c.w2, c.cfg2);
  } else {
    c.w1_used = c.w1;
    c.w2_used = c.w2;
  }
  c.x = x;

  Tensor z = matmul(x, c.w1_used);
  const auto b1 = model.b1().values();
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) z.at(i, j) = std::tanh(z.at(i, j) + b1[j]);
  c.hidden = std::move(z);

  Tensor y = matmul(c.hidden, c.w2_used);
  const auto b2 = model.b2().values();
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y.at(i, j) += b2[j];
  c.prediction = std::move(y);
  return c;
}

inline double mse_loss(const Tensor& prediction, const Tensor& targets) {
  const Tensor d = sub(prediction, targets);
  const double ss = reduce(hadamard(d, d), Reduction::sum);
  return ss / static_cast<double>(d.numel());
}

inline Tensor mse_loss_grad(const Tensor& prediction, const Tensor& targets) {
  const double k = 2.0 / static_cast<double>(prediction.numel());
  return scale(sub(prediction, targets), k);
}

inline Tensor column_sums(const Tensor& t) {
  Tensor out({t.cols()});
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out[j] += t.at(i, j);
  return out;
}

/// Gradients w.r.t. the pre-quant parameters. Throws StaleCacheError when the model changed after forward.
inline Gradients qat_backward(const MlpModel& model, const ForwardCache& cache, const Tensor& dloss_dpred,
                              const SurrogateSpec& spec) {
  if (cache.model_version != model.version()) throw StaleCacheError("qat_backward: forward cache is stale");
  if (dloss_dpred.shape() != cache.prediction.shape()) throw ShapeError("qat_backward: loss gradient shape mismatch");

  Gradients g;
  Tensor dw2_used = matmul(transpose(cache.hidden), dloss_dpred);
  g.b2 = column_sums(dloss_dpred);
  Tensor dhidden = matmul(dloss_dpred, transpose(cache.w2_used));
  Tensor dz = zip_map(dhidden, cache.hidden, [](double dh, double h) { return dh * (1.0 - h * h); });
  Tensor dw1_used = matmul(transpose(cache.x), dz);
  g.b1 = column_sums(dz);

  if (cache.quant_on) {
    g.w1 = surrogate_backward(dw1_used, cache.w1, cache.cfg1, spec);
    g.w2 = surrogate_backward(dw2_used, cache.w2, cache.cfg2, spec);
  } else {
    g.w1 = std::move(dw1_used);
    g.w2 = std::move(dw2_used);
  }
  return g;
}

struct TrainConfig {
  int bits = 3;
  bool quant_on = true;
  SurrogateSpec surrogate = SurrogateSpec::rdfs();
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  DatasetKind dataset = DatasetKind::linear_synth;
  std::size_t log_every = 1;
  MlpDims dims{};
  std::size_t train_samples = 512;
  double noise_sigma = 0.01;

  void validate() const {
    if (steps < 1) throw DomainError("TrainConfig: steps must be >= 1");
    if (!(learning_rate > 0.0)) throw DomainError("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw DomainError("TrainConfig: batch_size must be >= 1");
    if (log_every < 1) throw DomainError("TrainConfig: log_every must be >= 1");
    if (quant_on && (bits < 2 || bits > 8)) throw DomainError("TrainConfig: bits must be in [2, 8]");
  }
};

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  /// Non-finite loss or gradient norm observed at this step; training stopped here.
  bool failed = false;

  bool operator==(const TrainLogRow&) const = default;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  bool failed = false;
  std::size_t failure_step = 0;
  /// Full-dataset loss of the final model (quantized forward when quant_on); NaN after a failure.
  double final_loss = std::numeric_limits<double>::quiet_NaN();
};

inline double evaluate_loss(const MlpModel& model, const Dataset& data, int bits, bool quant_on) {
  return mse_loss(qat_forward(model, data.inputs, bits, quant_on).prediction, data.targets);
}

/// The listed rows of a 2-D tensor, in order.
inline Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& index) {
  Tensor out({index.size(), t.cols()});
  for (std::size_t r = 0; r < index.size(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out.at(r, c) = t.at(index[r], c);
  return out;
}

/// Plain minibatch SGD on MSE. The log is a pure function of cfg.
inline TrainLog train(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset data =
      synth_dataset(cfg.dataset, cfg.train_samples, derive_seed(cfg.seed, 1), cfg.dims.d_in, cfg.dims.d_out,
                    cfg.noise_sigma);
  MlpModel model = MlpModel::init(cfg.dims, derive_seed(cfg.seed, 2));
  Rng batches(derive_seed(cfg.seed, 3));

  TrainLog log;
  std::vector<std::size_t> index(std::min(cfg.batch_size, cfg.train_samples));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (auto& i : index) i = static_cast<std::size_t>(batches.below(cfg.train_samples));
    const Tensor xb = gather_rows(data.inputs, index);
    const Tensor yb = gather_rows(data.targets, index);

    const ForwardCache cache = qat_forward(model, xb, cfg.bits, cfg.quant_on);
    const double loss = mse_loss(cache.prediction, yb);
    const Gradients grads = qat_backward(model, cache, mse_loss_grad(cache.prediction, yb), cfg.surrogate);
    const double norm = grads.global_norm();

    if (!std::isfinite(loss) || !std::isfinite(norm)) {
      log.rows.push_back({step, loss, norm, cfg.learning_rate, true});
      log.failed = true;
      log.failure_step = step;
      return log;
    }
    if (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
      log.rows.push_back({step, loss, norm, cfg.learning_rate, false});
    }
    model.sgd_step(grads, cfg.learning_rate);
  }
  log.final_loss = evaluate_loss(model, data, cfg.bits, cfg.quant_on);
  if (!std::isfinite(log.final_loss)) {
    log.failed = true;
    log.failure_step = cfg.steps;
  }
  return log;
}

}  // namespace qatlab
