// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "geomdn/matrix.hpp"
#include "geomdn/random.hpp"

namespace geomdn {

/// Architecture of a feedforward network: tanh hidden layers, affine output.
struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  double dropout_rate = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
};

struct DenseLayer {
  Matrix weights;             // fan_in x fan_out
  std::vector<double> bias;   // fan_out
};

/// A named, mutable view of one block of trainable parameters.
struct ParamRef {
  std::string name;
  std::span<double> values;
};

/// One gradient vector per ParamRef, in the same order.
using Gradients = std::vector<std::vector<double>>;

class Network {
 public:
  Network() = default;

  /// Glorot-uniform weights drawn from spec.seed, zero biases.
  static Network initialize(const NetworkSpec& spec);
  /// Adopts explicit parameters; shapes must agree with the spec.
  static Network from_layers(const NetworkSpec& spec, std::vector<DenseLayer> layers);

  const NetworkSpec& spec() const { return spec_; }
  NetworkSpec& mutable_spec() { return spec_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Mutable access invalidates every ForwardCache made before the call.
  std::vector<DenseLayer>& mutable_layers();
  std::vector<ParamRef> parameters();
  std::size_t parameter_count() const;

  std::uint64_t generation() const { return generation_; }

 private:
  NetworkSpec spec_;
  std::vector<DenseLayer> layers_;
  std::uint64_t generation_ = 0;
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;        // input to each layer (post-dropout)
  std::vector<Matrix> hidden_tanh;   // tanh output of each hidden layer
  std::vector<Matrix> masks;         // inverted-dropout masks (empty if none)
  Matrix output;
  const Network* network = nullptr;
  std::uint64_t generation = 0;
};

ForwardCache forward(const Network& net, const Matrix& batch, bool train_mode,
                     Rng* rng);

struct NetworkGradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Matrix input;  // dLoss/dBatch
};

/// Reverse pass; elastic-net terms l1*sign(W) + 2*l2*W are added to the
/// weight gradients.
NetworkGradients backward(const Network& net, const ForwardCache& cache,
                          const Matrix& d_output);

/// l1 * sum|W| + l2 * sum W^2 over all weight matrices.
double regularization_penalty(const Network& net);

/// Appends the network gradients in Network::parameters() order.
void append_gradients(Gradients& out, const NetworkGradients& g);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update. Throws TrainingError on a non-finite gradient
/// before touching any parameter.
void adam_step(std::span<const ParamRef> params, const Gradients& grads,
               const AdamConfig& cfg, AdamState& state);

enum class DevMetric {
  kDevLoss,      // the model's own objective on dev ("dev_nll")
  kDevMedianKm,
};

const char* to_string(DevMetric m);
DevMetric parse_dev_metric(const std::string& name);

struct EarlyStopConfig {
  std::size_t patience = 10;
  DevMetric metric = DevMetric::kDevLoss;
};

/// A trainable model bound to its data.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::vector<ParamRef> parameters() = 0;
  virtual std::size_t train_size() const = 0;
  /// Mean training loss over `batch` (train mode, regularization included).
  /// Fills `grads` when non-null.
  virtual double loss(std::span<const std::size_t> batch, Rng& rng,
                      Gradients* grads) = 0;
  virtual double dev_metric(DevMetric metric) = 0;
};

struct TrainOptions {
  AdamConfig adam;
  EarlyStopConfig early_stop;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
  double elapsed_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  double initial_dev_metric = 0.0;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_dev_metric = 0.0;
  bool stopped_early = false;
};

/// "epoch\ttrain_loss\tdev_metric\telapsed_seconds"
std::string format_epoch_record(const EpochRecord& r);

/// Mini-batch Adam with per-epoch shuffling and early stopping. On return the
/// objective holds the best-epoch parameters.
TrainResult train_loop(Objective& objective, const TrainOptions& options,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

struct BlockCheck {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = true;
};

struct GradientCheckReport {
  std::vector<BlockCheck> blocks;
  bool passed() const;
  double max_relative_error() const;
};

struct GradientCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor: relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 7;
};

/// Compares analytic gradients with central differences on every parameter.
/// Each loss evaluation reseeds the RNG so dropout masks are identical.
GradientCheckReport gradient_check(Objective& objective,
                                   std::span<const std::size_t> batch,
                                   const GradientCheckOptions& options = {});

}  // namespace geomdn
