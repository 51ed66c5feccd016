// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/nn_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "geomdn/error.hpp"

namespace geomdn {

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw InvalidArgument("network needs at least an input and an output layer");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw InvalidArgument("network layer sizes must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidArgument("dropout rate must be in [0, 1)");
  }
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) {
    throw InvalidArgument("elastic-net coefficients must be non-negative");
  }
}

Network Network::initialize(const NetworkSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const std::size_t fan_in = spec.layer_sizes[l];
    const std::size_t fan_out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
    for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return from_layers(spec, std::move(layers));
}

Network Network::from_layers(const NetworkSpec& spec, std::vector<DenseLayer> layers) {
  spec.validate();
  if (layers.size() + 1 != spec.layer_sizes.size()) {
    throw ContractError("layer count does not match network spec");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weights.rows() != spec.layer_sizes[l] ||
        layer.weights.cols() != spec.layer_sizes[l + 1] ||
        layer.bias.size() != spec.layer_sizes[l + 1]) {
      std::ostringstream os;
      os << "layer " << l << " shape does not match network spec";
      throw ContractError(os.str());
    }
  }
  Network net;
  net.spec_ = spec;
  net.layers_ = std::move(layers);
  return net;
}

std::vector<DenseLayer>& Network::mutable_layers() {
  ++generation_;
  return layers_;
}

std::vector<ParamRef> Network::parameters() {
  ++generation_;
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    out.push_back({prefix + ".weights", layers_[l].weights.values()});
    out.push_back({prefix + ".bias", layers_[l].bias});
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

ForwardCache forward(const Network& net, const Matrix& batch, bool train_mode,
                     Rng* rng) {
  const auto& layers = net.layers();
  if (layers.empty()) throw ContractError("forward on an uninitialized network");
  if (batch.cols() != net.spec().input_size()) {
    std::ostringstream os;
    os << "batch width " << batch.cols() << " does not match network input size "
       << net.spec().input_size();
    throw ContractError(os.str());
  }
  const double rate = net.spec().dropout_rate;
  const bool dropout = train_mode && rate > 0.0;
  if (dropout && rng == nullptr) throw ContractError("dropout requires an RNG");

  ForwardCache cache;
  cache.network = &net;
  cache.generation = net.generation();
  cache.inputs.push_back(batch);

  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = matmul(cache.inputs.back(), layers[l].weights);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += layers[l].bias[j];
    }
    if (l + 1 == layers.size()) {
      cache.output = std::move(z);
      break;
    }
    for (double& v : z.values()) v = std::tanh(v);
    Matrix activation = z;
    if (dropout) {
      Matrix mask(z.rows(), z.cols());
      const double keep_scale = 1.0 / (1.0 - rate);
      for (double& m : mask.values()) m = rng->uniform() < rate ? 0.0 : keep_scale;
      auto a = activation.values();
      auto mv = mask.values();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] *= mv[i];
      cache.masks.push_back(std::move(mask));
    } else {
      cache.masks.emplace_back();
    }
    cache.hidden_tanh.push_back(std::move(z));
    cache.inputs.push_back(std::move(activation));
  }
  return cache;
}

NetworkGradients backward(const Network& net, const ForwardCache& cache,
                          const Matrix& d_output) {
  if (cache.network != &net || cache.generation != net.generation()) {
    throw ContractError("backward called with activations from a stale forward pass");
  }
  const auto& layers = net.layers();
  if (d_output.rows() != cache.output.rows() || d_output.cols() != cache.output.cols()) {
    throw ContractError("output gradient shape does not match forward output");
  }

  NetworkGradients g;
  g.weights.resize(layers.size());
  g.biases.resize(layers.size());

  Matrix delta = d_output;
  for (std::size_t l = layers.size(); l-- > 0;) {
    g.weights[l] = matmul_at_b(cache.inputs[l], delta);
    g.biases[l].assign(delta.cols(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const auto row = delta.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g.biases[l][j] += row[j];
    }
    Matrix d_in = matmul_a_bt(delta, layers[l].weights);
    if (l == 0) {
      g.input = std::move(d_in);
      break;
    }
    // Through dropout and tanh of hidden layer l-1.
    const auto h = cache.hidden_tanh[l - 1].values();
    const auto& mask = cache.masks[l - 1];
    auto d = d_in.values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      double v = d[i];
      if (!mask.empty()) v *= mask.values()[i];
      d[i] = v * (1.0 - h[i] * h[i]);
    }
    delta = std::move(d_in);
  }

  const double l1 = net.spec().l1;
  const double l2 = net.spec().l2;
  if (l1 != 0.0 || l2 != 0.0) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto w = layers[l].weights.values();
      auto gw = g.weights[l].values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double sign = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
        gw[i] += l1 * sign + 2.0 * l2 * w[i];
      }
    }
  }
  return g;
}

double regularization_penalty(const Network& net) {
  const double l1 = net.spec().l1;
  const double l2 = net.spec().l2;
  if (l1 == 0.0 && l2 == 0.0) return 0.0;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (const auto& layer : net.layers()) {
    for (double w : layer.weights.values()) {
      abs_sum += std::abs(w);
      sq_sum += w * w;
    }
  }
  return l1 * abs_sum + l2 * sq_sum;
}

void append_gradients(Gradients& out, const NetworkGradients& g) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto w = g.weights[l].values();
    out.emplace_back(w.begin(), w.end());
    out.push_back(g.biases[l]);
  }
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0) || !(epsilon > 0.0)) {
    throw InvalidArgument("adam learning rate and epsilon must be positive");
  }
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in (0, 1)");
  }
}

void adam_step(std::span<const ParamRef> params, const Gradients& grads,
               const AdamConfig& cfg, AdamState& state) {
  if (grads.size() != params.size()) {
    throw ContractError("gradient block count does not match parameters");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (grads[b].size() != params[b].values.size()) {
      throw ContractError("gradient shape mismatch for block " + params[b].name);
    }
    for (double g : grads[b]) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in parameter block " + params[b].name);
      }
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.values.size(), 0.0);
      state.second_moment.emplace_back(p.values.size(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto values = params[b].values;
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    const auto& g = grads[b];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

const char* to_string(DevMetric m) {
  return m == DevMetric::kDevLoss ? "dev_nll" : "dev_median_km";
}

DevMetric parse_dev_metric(const std::string& name) {
  if (name == "dev_nll" || name == "dev_loss") return DevMetric::kDevLoss;
  if (name == "dev_median_km") return DevMetric::kDevMedianKm;
  throw InvalidArgument("unknown monitored metric '" + name +
                        "' (expected dev_nll or dev_median_km)");
}

std::string format_epoch_record(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.3f", r.epoch, r.train_loss,
                r.dev_metric, r.elapsed_seconds);
  return buf;
}

namespace {

std::vector<std::vector<double>> snapshot(const std::vector<ParamRef>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.values.begin(), p.values.end());
  return out;
}

void restore(const std::vector<ParamRef>& params,
             const std::vector<std::vector<double>>& saved) {
  for (std::size_t b = 0; b < params.size(); ++b) {
    std::copy(saved[b].begin(), saved[b].end(), params[b].values.begin());
  }
}

}  // namespace

TrainResult train_loop(Objective& objective, const TrainOptions& options,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  options.adam.validate();
  if (options.early_stop.patience < 1) throw InvalidArgument("patience must be >= 1");
  if (options.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  const std::size_t n = objective.train_size();
  if (n == 0) throw InvalidArgument("training set is empty");

  TrainResult result;
  result.initial_dev_metric = objective.dev_metric(options.early_stop.metric);
  result.best_dev_metric = std::numeric_limits<double>::infinity();
  if (options.max_epochs == 0) return result;

  Rng rng(options.seed);
  AdamState adam;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<double>> best;
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double weighted_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += options.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, begin + options.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      Gradients grads;
      const double loss = objective.loss(batch, rng, &grads);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite training loss at epoch " << epoch << ", batch " << batch_index;
        throw TrainingError(os.str());
      }
      weighted_loss += loss * static_cast<double>(batch.size());
      const auto params = objective.parameters();
      try {
        adam_step(params, grads, options.adam, adam);
      } catch (const TrainingError& e) {
        std::ostringstream os;
        os << e.what() << " at epoch " << epoch << ", batch " << batch_index;
        throw TrainingError(os.str());
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = weighted_loss / static_cast<double>(n);
    record.dev_metric = objective.dev_metric(options.early_stop.metric);
    record.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.dev_metric < result.best_dev_metric) {
      result.best_dev_metric = record.dev_metric;
      result.best_epoch = epoch;
      best = snapshot(objective.parameters());
      since_best = 0;
    } else if (++since_best >= options.early_stop.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (!best.empty()) restore(objective.parameters(), best);
  return result;
}

bool GradientCheckReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [](const BlockCheck& b) { return b.passed; });
}

double GradientCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_relative_error);
  return worst;
}

GradientCheckReport gradient_check(Objective& objective,
                                   std::span<const std::size_t> batch,
                                   const GradientCheckOptions& options) {
  Gradients analytic;
  {
    Rng rng(options.seed);
    objective.loss(batch, rng, &analytic);
  }
  const auto params = objective.parameters();
  if (analytic.size() != params.size()) {
    throw ContractError("objective returned a gradient block count that does not "
                        "match its parameters");
  }
  GradientCheckReport report;
  for (std::size_t b = 0; b < params.size(); ++b) {
    BlockCheck check{params[b].name, 0.0, true};
    auto values = params[b].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      Rng rng_plus(options.seed);
      const double plus = objective.loss(batch, rng_plus, nullptr);
      values[i] = saved - options.step;
      Rng rng_minus(options.seed);
      const double minus = objective.loss(batch, rng_minus, nullptr);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[b][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      check.max_relative_error = std::max(check.max_relative_error, rel);
    }
    check.passed = check.max_relative_error <= options.tolerance;
    report.blocks.push_back(std::move(check));
  }
  return report;
}

}  // namespace geomdn
