#include "fedsketch/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsketch/rng.hpp"

namespace fedsketch {

namespace {

constexpr std::uint64_t kEpochTag = 0x65706f6368ull;  // "epoch"

void check_batch(std::span<const Example> batch, std::size_t input_dim) {
  if (batch.empty()) throw InputError("batch is empty");
  for (const Example& ex : batch) {
    if (ex.features.size() != input_dim) {
      throw InputError("feature dim " + std::to_string(ex.features.size()) +
                       " does not match model input dim " + std::to_string(input_dim));
    }
  }
}

void check_params(const ParamVector& params, std::size_t expected) {
  if (params.size() != expected) {
    throw InputError("parameter vector length " + std::to_string(params.size()) +
                     " does not match model size " + std::to_string(expected));
  }
}

// w . [x, 1]
double affine_margin(const ParamVector& w, const std::vector<double>& x) {
  double acc = w[x.size()];
  for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
  return acc;
}

}  // namespace

void SgdConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (local_epochs == 0) throw ConfigError("local_epochs must be >= 1");
}

LinearModel::LinearModel(std::size_t feature_dim) : feature_dim_(feature_dim) {
  if (feature_dim == 0) throw ConfigError("linear model needs feature_dim >= 1");
}

double LinearModel::loss(const ParamVector& params, std::span<const Example> batch) const {
  check_params(params, param_count());
  check_batch(batch, feature_dim_);
  double total = 0.0;
  for (const Example& ex : batch) {
    const double r = affine_margin(params, ex.features) - ex.label;
    total += r * r;
  }
  return total / static_cast<double>(batch.size());
}

ParamVector LinearModel::gradient(const ParamVector& params,
                                  std::span<const Example> batch) const {
  check_params(params, param_count());
  check_batch(batch, feature_dim_);
  ParamVector grad(param_count(), 0.0);
  for (const Example& ex : batch) {
    const double c = 2.0 * (affine_margin(params, ex.features) - ex.label);
    for (std::size_t j = 0; j < feature_dim_; ++j) grad[j] += c * ex.features[j];
    grad[feature_dim_] += c;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return grad;
}

int LinearModel::predict(const ParamVector& params, const Example& example) const {
  check_params(params, param_count());
  if (example.features.size() != feature_dim_) {
    throw InputError("feature dim mismatch in predict");
  }
  return affine_margin(params, example.features) >= 0.0 ? 1 : -1;
}

ParamVector LinearModel::initial_params(std::uint64_t) const {
  return ParamVector(param_count(), 0.0);
}

MlpModel::MlpModel(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim)
    : in_(input_dim), hidden_(hidden_dim), out_(output_dim) {
  if (in_ == 0 || hidden_ == 0 || out_ < 2) {
    throw ConfigError("mlp needs input_dim >= 1, hidden_dim >= 1, output_dim >= 2");
  }
}

MlpModel::Layout MlpModel::layout() const {
  Layout l;
  l.w1 = 0;
  l.b1 = in_ * hidden_;
  l.w2 = l.b1 + hidden_;
  l.b2 = l.w2 + hidden_ * out_;
  l.total = l.b2 + out_;
  return l;
}

std::size_t MlpModel::param_count() const { return layout().total; }

namespace {

struct MlpForward {
  std::vector<double> pre_hidden;   // z1
  std::vector<double> hidden;       // relu(z1)
  std::vector<double> logits;       // z2
  std::vector<double> probs;        // softmax(z2)
  double example_loss = 0.0;
};

MlpForward mlp_forward(const MlpModel::Layout& l, std::size_t in, std::size_t hid,
                       std::size_t out, const ParamVector& p, const Example& ex) {
  MlpForward f;
  f.pre_hidden.assign(hid, 0.0);
  for (std::size_t h = 0; h < hid; ++h) f.pre_hidden[h] = p[l.b1 + h];
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = ex.features[i];
    if (xi == 0.0) continue;
    const double* w1_row = &p[l.w1 + i * hid];
    for (std::size_t h = 0; h < hid; ++h) f.pre_hidden[h] += xi * w1_row[h];
  }
  f.hidden.assign(hid, 0.0);
  for (std::size_t h = 0; h < hid; ++h) f.hidden[h] = std::max(0.0, f.pre_hidden[h]);

  f.logits.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) f.logits[o] = p[l.b2 + o];
  for (std::size_t h = 0; h < hid; ++h) {
    const double ah = f.hidden[h];
    if (ah == 0.0) continue;
    const double* w2_row = &p[l.w2 + h * out];
    for (std::size_t o = 0; o < out; ++o) f.logits[o] += ah * w2_row[o];
  }

  const double peak = *std::max_element(f.logits.begin(), f.logits.end());
  double norm = 0.0;
  f.probs.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    f.probs[o] = std::exp(f.logits[o] - peak);
    norm += f.probs[o];
  }
  for (std::size_t o = 0; o < out; ++o) f.probs[o] /= norm;

  const auto y = static_cast<std::size_t>(ex.label);
  f.example_loss = -std::log(std::max(f.probs[y], 1e-300));
  return f;
}

void check_labels(std::span<const Example> batch, std::size_t num_classes) {
  for (const Example& ex : batch) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= num_classes) {
      throw InputError("class label " + std::to_string(ex.label) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace

double MlpModel::loss(const ParamVector& params, std::span<const Example> batch) const {
  check_params(params, param_count());
  check_batch(batch, in_);
  check_labels(batch, out_);
  const Layout l = layout();
  double total = 0.0;
  for (const Example& ex : batch) {
    total += mlp_forward(l, in_, hidden_, out_, params, ex).example_loss;
  }
  return total / static_cast<double>(batch.size());
}

ParamVector MlpModel::gradient(const ParamVector& params,
                               std::span<const Example> batch) const {
  check_params(params, param_count());
  check_batch(batch, in_);
  check_labels(batch, out_);
  const Layout l = layout();
  ParamVector grad(param_count(), 0.0);
  std::vector<double> d_logits(out_);
  std::vector<double> d_hidden(hidden_);

  for (const Example& ex : batch) {
    const MlpForward f = mlp_forward(l, in_, hidden_, out_, params, ex);

    for (std::size_t o = 0; o < out_; ++o) d_logits[o] = f.probs[o];
    d_logits[static_cast<std::size_t>(ex.label)] -= 1.0;

    for (std::size_t o = 0; o < out_; ++o) grad[l.b2 + o] += d_logits[o];
    for (std::size_t h = 0; h < hidden_; ++h) {
      const double ah = f.hidden[h];
      double acc = 0.0;
      const double* w2_row = &params[l.w2 + h * out_];
      double* g2_row = &grad[l.w2 + h * out_];
      for (std::size_t o = 0; o < out_; ++o) {
        g2_row[o] += ah * d_logits[o];
        acc += w2_row[o] * d_logits[o];
      }
      d_hidden[h] = f.pre_hidden[h] > 0.0 ? acc : 0.0;
    }
    for (std::size_t h = 0; h < hidden_; ++h) grad[l.b1 + h] += d_hidden[h];
    for (std::size_t i = 0; i < in_; ++i) {
      const double xi = ex.features[i];
      if (xi == 0.0) continue;
      double* g1_row = &grad[l.w1 + i * hidden_];
      for (std::size_t h = 0; h < hidden_; ++h) g1_row[h] += xi * d_hidden[h];
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return grad;
}

int MlpModel::predict(const ParamVector& params, const Example& example) const {
  check_params(params, param_count());
  if (example.features.size() != in_) throw InputError("feature dim mismatch in predict");
  const Layout l = layout();
  const MlpForward f = mlp_forward(l, in_, hidden_, out_, params, example);
  const auto best = std::max_element(f.logits.begin(), f.logits.end());
  return static_cast<int>(best - f.logits.begin());  // first max wins ties
}

ParamVector MlpModel::initial_params(std::uint64_t seed) const {
  const Layout l = layout();
  ParamVector p(param_count(), 0.0);
  rng::Engine eng(seed);
  const double s1 = std::sqrt(6.0 / static_cast<double>(in_ + hidden_));
  for (std::size_t i = l.w1; i < l.b1; ++i) p[i] = (2.0 * eng.uniform01() - 1.0) * s1;
  const double s2 = std::sqrt(6.0 / static_cast<double>(hidden_ + out_));
  for (std::size_t i = l.w2; i < l.b2; ++i) p[i] = (2.0 * eng.uniform01() - 1.0) * s2;
  return p;
}

ParamVector local_train(const Model& model, const ParamVector& params,
                        std::span<const Example> shard, const SgdConfig& cfg) {
  cfg.validate();
  if (shard.empty()) throw InputError("local_train needs a nonempty shard");

  ParamVector w = params;
  std::vector<Example> scratch(shard.begin(), shard.end());
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    rng::Engine eng(rng::derive(cfg.rng_seed, kEpochTag, epoch));
    rng::shuffle(scratch, eng);
    for (std::size_t offset = 0; offset < scratch.size(); offset += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, scratch.size() - offset);
      const ParamVector grad =
          model.gradient(w, std::span<const Example>(scratch.data() + offset, len));
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.learning_rate * grad[j];
    }
  }
  return w;
}

EvalResult evaluate(const Model& model, const ParamVector& params,
                    std::span<const Example> test_set) {
  if (test_set.empty()) throw InputError("evaluate needs a nonempty test set");
  std::size_t correct = 0;
  for (const Example& ex : test_set) {
    if (model.predict(params, ex) == ex.label) ++correct;
  }
  EvalResult r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  r.loss = model.loss(params, test_set);
  return r;
}

ParamVector delta(const ParamVector& after, const ParamVector& before) {
  if (after.size() != before.size()) throw InputError("delta length mismatch");
  ParamVector d(after.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = after[i] - before[i];
  return d;
}

ParamVector apply_delta(const ParamVector& params, const ParamVector& update) {
  if (params.size() != update.size()) throw InputError("apply_delta length mismatch");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = params[i] + update[i];
  return out;
}

}  // namespace fedsketch
