#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsketch/errors.hpp"

namespace fedsketch {

/// Dense model parameter or update vector.
using ParamVector = std::vector<double>;

struct Example {
  std::vector<double> features;
  int label = 0;  // {-1, +1} for the linear task, class index for multiclass
};

struct SgdConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t local_epochs = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Stateless model description; parameters travel separately as flat
/// ParamVectors, so all training math is a pure function of (params, data).
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t param_count() const = 0;
  virtual std::size_t input_dim() const = 0;

  /// Mean per-example loss over the batch.
  virtual double loss(const ParamVector& params, std::span<const Example> batch) const = 0;

  /// Mean per-example gradient over the batch.
  virtual ParamVector gradient(const ParamVector& params, std::span<const Example> batch) const = 0;

  /// Predicted label for one example.
  virtual int predict(const ParamVector& params, const Example& example) const = 0;

  /// Deterministic starting parameters for a training run.
  virtual ParamVector initial_params(std::uint64_t seed) const = 0;
};

/// Squared-loss binary classifier with +/-1 labels and sign prediction.
/// Parameters are [per-feature weights..., bias]; the bias multiplies an
/// implicit trailing 1.0 feature.
class LinearModel final : public Model {
 public:
  explicit LinearModel(std::size_t feature_dim);

  std::size_t param_count() const override { return feature_dim_ + 1; }
  std::size_t input_dim() const override { return feature_dim_; }
  double loss(const ParamVector& params, std::span<const Example> batch) const override;
  ParamVector gradient(const ParamVector& params, std::span<const Example> batch) const override;
  int predict(const ParamVector& params, const Example& example) const override;
  ParamVector initial_params(std::uint64_t seed) const override;

 private:
  std::size_t feature_dim_;
};

/// Two-layer perceptron: rectifier hidden layer, softmax cross-entropy
/// output. Flat parameter layout: [W1 (in x hidden, row-major), b1,
/// W2 (hidden x out, row-major), b2].
class MlpModel final : public Model {
 public:
  MlpModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

  /// Offsets of the four blocks inside the flat parameter vector.
  struct Layout {
    std::size_t w1 = 0;
    std::size_t b1 = 0;
    std::size_t w2 = 0;
    std::size_t b2 = 0;
    std::size_t total = 0;
  };
  Layout layout() const;

  std::size_t hidden_dim() const { return hidden_; }
  std::size_t output_dim() const { return out_; }

  std::size_t param_count() const override;
  std::size_t input_dim() const override { return in_; }
  double loss(const ParamVector& params, std::span<const Example> batch) const override;
  ParamVector gradient(const ParamVector& params, std::span<const Example> batch) const override;
  int predict(const ParamVector& params, const Example& example) const override;
  ParamVector initial_params(std::uint64_t seed) const override;

 private:
  std::size_t in_;
  std::size_t hidden_;
  std::size_t out_;
};

/// Runs `local_epochs` passes of shuffled mini-batch SGD over the shard and
/// returns the updated parameters. Deterministic given cfg.rng_seed; the
/// input parameters are left untouched.
ParamVector local_train(const Model& model, const ParamVector& params,
                        std::span<const Example> shard, const SgdConfig& cfg);

/// Fraction of correct predictions plus mean loss on a held-out set.
EvalResult evaluate(const Model& model, const ParamVector& params,
                    std::span<const Example> test_set);

/// after - before, elementwise.
ParamVector delta(const ParamVector& after, const ParamVector& before);

/// params + update, elementwise.
ParamVector apply_delta(const ParamVector& params, const ParamVector& update);

}  // namespace fedsketch
