#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qatlab/train.hpp"

using namespace qatlab;

namespace {

MlpModel perturbed_model(const MlpDims& dims, std::uint64_t seed) {
  MlpModel m = MlpModel::init(dims, seed);
  for (std::size_t i = 0; i < m.parameter_count(); ++i) m.parameter(i) += 0.1 * std::cos(3.0 * i + seed);
  return m;
}

}  // namespace

TEST(Dataset, DeterministicAndValidated) {
  const Dataset a = synth_dataset(DatasetKind::linear_synth, 20, 3);
  const Dataset b = synth_dataset(DatasetKind::linear_synth, 20, 3);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.inputs.shape(), (Shape{20, 8}));
  EXPECT_EQ(a.targets.shape(), (Shape{20, 1}));
  EXPECT_NE(synth_dataset(DatasetKind::linear_synth, 20, 4).inputs, a.inputs);
  EXPECT_THROW(synth_dataset(DatasetKind::linear_synth, 0, 3), DomainError);
  EXPECT_THROW(synth_dataset(DatasetKind::sine_synth, 5, 3, 8, 2), DomainError);
}

TEST(Dataset, NoiselessLinearTargetsAreExact) {
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 30, 5, 4, 2, 0.0);
  EXPECT_EQ(d.targets, matmul(d.inputs, teacher_weights(4, 2)));
}

TEST(Dataset, SineTargetsAreBounded) {
  const Dataset d = synth_dataset(DatasetKind::sine_synth, 200, 6, 8, 1, 0.0);
  for (double v : d.targets.values()) EXPECT_LE(std::abs(v), 1.0);
}

TEST(Mlp, ShapesAreChecked) {
  EXPECT_THROW(MlpModel(Tensor({2, 3}), Tensor({2}), Tensor({3, 1}), Tensor({1})), ShapeError);
  const MlpModel m = MlpModel::init({8, 32, 1}, 0);
  EXPECT_EQ(m.parameter_count(), 8u * 32 + 32 + 32 + 1);
  EXPECT_THROW(qat_forward(m, Tensor({4, 7}), 3, false), ShapeError);
}

TEST(Forward, QuantOffIsPlainMlp) {
  const MlpModel m = perturbed_model({3, 4, 2}, 1);
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 5, 2, 3, 2);
  const ForwardCache c = qat_forward(m, d.inputs, 3, false);
  for (std::size_t n = 0; n < 5; ++n) {
    for (std::size_t o = 0; o < 2; ++o) {
      double y = m.b2()[o];
      for (std::size_t h = 0; h < 4; ++h) {
        double z = m.b1()[h];
        for (std::size_t i = 0; i < 3; ++i) z += d.inputs.at(n, i) * m.w1().at(i, h);
        y += std::tanh(z) * m.w2().at(h, o);
      }
      EXPECT_NEAR(c.prediction.at(n, o), y, 1e-14);
    }
  }
}

TEST(Forward, WeightsOnGridAreUnchangedAtEightBits) {
  // integer multiples of s with -128 present, so the max-abs scale is exactly s
  const double s = 0.0078125;
  auto on_grid = [s](std::size_t r, std::size_t c, int offset) {
    Tensor w({r, c});
    for (std::size_t i = 0; i < w.numel(); ++i) {
      w[i] = s * static_cast<double>((static_cast<int>(i) * 37 + offset) % 255 - 127);
    }
    w[0] = -128 * s;
    return w;
  };
  const MlpModel m(on_grid(3, 4, 5), Tensor::vector({0.1, -0.2, 0.3, 0.0}), on_grid(4, 1, 11), Tensor::vector({0.05}));
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 6, 3, 3, 1);
  const ForwardCache q = qat_forward(m, d.inputs, 8, true);
  EXPECT_EQ(q.cfg1.scale, s);
  EXPECT_EQ(q.prediction, qat_forward(m, d.inputs, 8, false).prediction);
}

TEST(Forward, TwoBitQuantizationIsLive) {
  const MlpModel m = MlpModel::init({8, 32, 1}, 3);
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 16, 4);
  EXPECT_NE(qat_forward(m, d.inputs, 2, true).prediction, qat_forward(m, d.inputs, 2, false).prediction);
}

TEST(Backward, FiniteDifferencesOnSmallModel) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MlpModel m = perturbed_model({2, 3, 1}, seed);
    const Dataset d = synth_dataset(DatasetKind::sine_synth, 12, seed, 2, 1);
    const ForwardCache c = qat_forward(m, d.inputs, 3, false);
    const auto g = qat_backward(m, c, mse_loss_grad(c.prediction, d.targets), SurrogateSpec::rdfs()).flatten();
    constexpr double h = 1e-6;
    for (std::size_t i = 0; i < m.parameter_count(); ++i) {
      const double p0 = m.parameter(i);
      m.parameter(i) = p0 + h;
      const double up = evaluate_loss(m, d, 3, false);
      m.parameter(i) = p0 - h;
      const double down = evaluate_loss(m, d, 3, false);
      m.parameter(i) = p0;
      const double fd = (up - down) / (2 * h);
      EXPECT_LE(std::abs(fd - g[i]), 1e-4 * std::max(std::abs(g[i]), 1e-6)) << "seed " << seed << " param " << i;
    }
  }
}

TEST(Backward, StaleCacheIsRejected) {
  MlpModel m = MlpModel::init({2, 3, 1}, 0);
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 4, 0, 2, 1);
  const ForwardCache c = qat_forward(m, d.inputs, 3, true);
  m.parameter(0) += 0.5;
  EXPECT_THROW(qat_backward(m, c, mse_loss_grad(c.prediction, d.targets), SurrogateSpec::ste()), StaleCacheError);
}

TEST(Backward, SteEqualsPlainGradientsAtQuantizedWeights) {
  const MlpModel m = perturbed_model({4, 6, 2}, 7);
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 10, 8, 4, 2);
  const ForwardCache cq = qat_forward(m, d.inputs, 3, true);
  const Gradients gq = qat_backward(m, cq, mse_loss_grad(cq.prediction, d.targets), SurrogateSpec::ste());

  const MlpModel mq(cq.w1_used, m.b1(), cq.w2_used, m.b2());
  const ForwardCache cp = qat_forward(mq, d.inputs, 3, false);
  const Gradients gp = qat_backward(mq, cp, mse_loss_grad(cp.prediction, d.targets), SurrogateSpec::ste());

  EXPECT_EQ(gq.b1, gp.b1);
  EXPECT_EQ(gq.b2, gp.b2);
  auto check = [](const Tensor& w, const QuantConfig& cfg, const Tensor& quantized, const Tensor& plain) {
    for (std::size_t i = 0; i < w.numel(); ++i) {
      EXPECT_EQ(quantized[i], in_clip_range(w[i], cfg) ? plain[i] : 0.0);
    }
  };
  check(m.w1(), cq.cfg1, gq.w1, gp.w1);
  check(m.w2(), cq.cfg2, gq.w2, gp.w2);
}

TEST(Backward, SurrogateFactorization) {
  const MlpModel m = perturbed_model({4, 6, 1}, 9);
  const Dataset d = synth_dataset(DatasetKind::linear_synth, 10, 9, 4, 1);
  const ForwardCache c = qat_forward(m, d.inputs, 3, true);
  const Tensor dl = mse_loss_grad(c.prediction, d.targets);
  const Gradients ste = qat_backward(m, c, dl, SurrogateSpec::ste());
  const double cc = amplitude_to_c(0.21);
  for (const auto& spec : {SurrogateSpec::rdfs(0.21), SurrogateSpec::dsq(0.4), SurrogateSpec::rdfs(0.1, 2)}) {
    const Gradients g = qat_backward(m, c, dl, spec);
    const Tensor m1 = surrogate_multipliers(c.w1, c.cfg1, spec);
    for (std::size_t i = 0; i < m1.numel(); ++i) {
      EXPECT_NEAR(g.w1[i], ste.w1[i] * m1[i], 1e-15 * std::abs(ste.w1[i]) + 1e-300);
      if (spec == SurrogateSpec::rdfs(0.21) && in_clip_range(c.w1[i], c.cfg1)) {
        EXPECT_GE(m1[i], (1 - cc) / (1 + cc) * (1 - 1e-12));
        EXPECT_LE(m1[i], (1 + cc) / (1 - cc) * (1 + 1e-12));
      }
    }
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.steps = 0;
  EXPECT_THROW(train(c), DomainError);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(train(c), DomainError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(train(c), DomainError);
  c = {};
  c.log_every = 0;
  EXPECT_THROW(train(c), DomainError);
}

TEST(Train, FullPrecisionLearnsLinearTask) {
  TrainConfig c;
  c.quant_on = false;
  c.steps = 500;
  c.learning_rate = 0.05;
  const TrainLog log = train(c);
  ASSERT_FALSE(log.failed);
  const MlpModel init = MlpModel::init(c.dims, derive_seed(c.seed, 2));
  const Dataset data = synth_dataset(c.dataset, c.train_samples, derive_seed(c.seed, 1));
  const double initial = evaluate_loss(init, data, c.bits, false);
  EXPECT_LE(log.final_loss, 0.1 * initial);
}

TEST(Train, Deterministic) {
  TrainConfig c;
  c.steps = 300;
  c.log_every = 7;
  const TrainLog a = train(c), b = train(c);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.final_loss, b.final_loss);
  EXPECT_EQ(a.rows.front().step, 0u);
  EXPECT_EQ(a.rows.back().step, 299u);
  EXPECT_EQ(a.rows.size(), 300u / 7 + 1 + 1);
}

TEST(Train, RdfsSeedGridHasNoFailures) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig c;
    c.seed = seed;
    c.steps = 2000;
    const TrainLog log = train(c);
    EXPECT_FALSE(log.failed) << seed;
    std::vector<double> norms;
    for (const auto& r : log.rows) {
      EXPECT_GE(r.loss, 0.0);
      EXPECT_GE(r.grad_norm, 0.0);
      norms.push_back(r.grad_norm);
    }
    std::sort(norms.begin(), norms.end());
    EXPECT_LE(norms.back() / norms[norms.size() / 2], 50.0) << seed;
  }
}

TEST(Train, DivergenceIsRecordedNotSwallowed) {
  TrainConfig c;
  c.quant_on = false;
  c.learning_rate = 1e6;
  c.steps = 200;
  const TrainLog log = train(c);
  ASSERT_TRUE(log.failed);
  EXPECT_TRUE(log.rows.back().failed);
  EXPECT_EQ(log.rows.back().step, log.failure_step);
  EXPECT_TRUE(std::isnan(log.final_loss));
}
