// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/geolocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geomdn/error.hpp"
#include "geomdn/geo_eval.hpp"

namespace geomdn {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kRegression: return "regression";
    case ModelKind::kMdn: return "mdn";
    case ModelKind::kMdnShared: return "mdn_shared";
    case ModelKind::kDialect: return "dialect";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "regression") return ModelKind::kRegression;
  if (name == "mdn") return ModelKind::kMdn;
  if (name == "mdn_shared" || name == "mdn-shared") return ModelKind::kMdnShared;
  if (name == "dialect") return ModelKind::kDialect;
  throw InvalidArgument("unknown model '" + name +
                        "' (expected regression, mdn, mdn_shared or dialect)");
}

const char* to_string(GaussianActivation a) {
  return a == GaussianActivation::kDensity ? "density" : "log_density";
}

GaussianActivation parse_gaussian_activation(const std::string& name) {
  if (name == "density") return GaussianActivation::kDensity;
  if (name == "log_density") return GaussianActivation::kLogDensity;
  throw InvalidArgument("unknown gaussian activation '" + name +
                        "' (expected density or log_density)");
}

const char* to_string(OutputInit i) {
  return i == OutputInit::kZero ? "zero" : "labels";
}

OutputInit parse_output_init(const std::string& name) {
  if (name == "zero") return OutputInit::kZero;
  if (name == "labels") return OutputInit::kLabels;
  throw InvalidArgument("unknown output init '" + name + "' (expected zero or labels)");
}

namespace {

constexpr std::size_t kEvalChunk = 512;

std::size_t output_width(const GeoModelOptions& o) {
  switch (o.kind) {
    case ModelKind::kRegression: return 2;
    case ModelKind::kMdn: return o.head.raw_width();
    case ModelKind::kMdnShared: return o.head.num_components;
    case ModelKind::kDialect: break;
  }
  throw InvalidArgument("init_geo_model called with a dialect model kind");
}

}  // namespace

Model init_geo_model(const GeoModelOptions& options, std::size_t input_dim,
                     std::span<const GeoPoint> train_labels) {
  if (train_labels.empty()) throw InitError("no training labels to initialize from");
  if (options.kind != ModelKind::kRegression && options.head.num_components < 1) {
    throw InvalidArgument("number of components K must be >= 1");
  }
  NetworkSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), options.hidden.begin(),
                          options.hidden.end());
  spec.layer_sizes.push_back(output_width(options));
  spec.dropout_rate = options.dropout;
  spec.l1 = options.l1;
  spec.l2 = options.l2;
  spec.seed = options.seed;

  Model model;
  model.kind = options.kind;
  model.head = options.head;
  model.network = Network::initialize(spec);
  if (options.kind == ModelKind::kRegression && options.output_init == OutputInit::kZero) {
    return model;
  }
  auto& out_bias = model.network.mutable_layers().back().bias;
  const double n = static_cast<double>(train_labels.size());
  double lat = 0.0, lon = 0.0;
  for (const auto& p : train_labels) {
    lat += p.lat;
    lon += p.lon;
  }
  lat /= n;
  lon /= n;

  if (options.kind == ModelKind::kRegression) {
    out_bias[0] = lat;
    out_bias[1] = lon;
    return model;
  }

  const std::size_t K = options.head.num_components;
  if (options.kind == ModelKind::kMdnShared) {
    model.components = init_shared(train_labels, K, options.seed, options.sigma_init_lo,
                                   options.sigma_init_hi, options.head.transform);
    return model;
  }
  if (options.output_init == OutputInit::kZero) return model;
  double var_lat = 0.0, var_lon = 0.0;
  for (const auto& p : train_labels) {
    var_lat += (p.lat - lat) * (p.lat - lat);
    var_lon += (p.lon - lon) * (p.lon - lon);
  }
  const double sd_lat = std::max(std::sqrt(var_lat / n), 1e-3);
  const double sd_lon = std::max(std::sqrt(var_lon / n), 1e-3);
  for (std::size_t k = 0; k < K; ++k) {
    out_bias[k] = lat;
    out_bias[K + k] = lon;
    out_bias[2 * K + k] = sigma_to_raw(sd_lat, options.head.transform);
    out_bias[3 * K + k] = sigma_to_raw(sd_lon, options.head.transform);
  }
  return model;
}

Matrix densify(std::span<const FeatureVector> rows, std::span<const std::size_t> indices,
               std::size_t dim) {
  Matrix out(indices.size(), dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    for (const auto& [col, w] : rows[indices[r]].entries) {
      if (col >= dim) throw ContractError("feature index exceeds input dimension");
      out(r, col) = w;
    }
  }
  return out;
}

Matrix densify(std::span<const FeatureVector> rows, std::size_t dim) {
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return densify(rows, idx, dim);
}

std::vector<MixtureDensity> predict_mixtures(const Model& model, const Matrix& inputs) {
  const auto cache = forward(model.network, inputs, false, nullptr);
  if (model.kind == ModelKind::kMdn) return mdn_unpack(cache.output, model.head);
  if (model.kind != ModelKind::kMdnShared) {
    throw ContractError(std::string("model kind ") + to_string(model.kind) +
                        " has no mixture output");
  }
  const auto comps = model.components.components(model.head.transform);
  std::vector<MixtureDensity> out;
  out.reserve(inputs.rows());
  for (std::size_t i = 0; i < cache.output.rows(); ++i) {
    out.push_back({comps, softmax(cache.output.row(i))});
  }
  return out;
}

std::vector<GeoPoint> predict_locations(const Model& model, const Matrix& inputs,
                                        SelectionRule rule) {
  std::vector<GeoPoint> out;
  out.reserve(inputs.rows());
  if (model.kind == ModelKind::kRegression) {
    const auto cache = forward(model.network, inputs, false, nullptr);
    for (std::size_t i = 0; i < cache.output.rows(); ++i) {
      out.push_back({cache.output(i, 0), cache.output(i, 1)});
    }
    return out;
  }
  for (const auto& m : predict_mixtures(model, inputs)) out.push_back(predict(m, rule));
  return out;
}

GeoObjective::GeoObjective(Model& model, GeoDataset train, GeoDataset dev,
                           std::size_t input_dim)
    : model_(model), train_(train), dev_(dev), input_dim_(input_dim) {
  if (!model.is_geolocation()) throw ContractError("GeoObjective needs a geolocation model");
  if (train.inputs.size() != train.labels.size() || dev.inputs.size() != dev.labels.size()) {
    throw ContractError("feature and label counts differ");
  }
}

std::vector<ParamRef> GeoObjective::parameters() {
  auto params = model_.network.parameters();
  if (model_.kind == ModelKind::kMdnShared) {
    for (auto& p : model_.components.parameters("shared")) params.push_back(std::move(p));
  }
  return params;
}

double GeoObjective::loss(std::span<const std::size_t> batch, Rng& rng, Gradients* grads) {
  const Matrix x = densify(train_.inputs, batch, input_dim_);
  std::vector<GeoPoint> labels;
  labels.reserve(batch.size());
  for (std::size_t i : batch) labels.push_back(train_.labels[i]);

  const auto cache = forward(model_.network, x, true, &rng);
  double loss = regularization_penalty(model_.network);
  Matrix d_output;
  SharedGradients shared_grads;
  switch (model_.kind) {
    case ModelKind::kRegression: {
      auto r = regression_loss(cache.output, labels);
      loss += r.loss;
      d_output = std::move(r.grad);
      break;
    }
    case ModelKind::kMdn: {
      auto r = mdn_nll(cache.output, labels, model_.head.transform);
      loss += r.loss;
      d_output = std::move(r.grad);
      break;
    }
    case ModelKind::kMdnShared: {
      auto r = shared_nll(cache.output, model_.components, labels, model_.head.transform);
      loss += r.loss;
      d_output = std::move(r.grad_pi_raw);
      shared_grads = std::move(r.grad_shared);
      break;
    }
    case ModelKind::kDialect:
      throw ContractError("GeoObjective needs a geolocation model");
  }
  if (grads != nullptr) {
    grads->clear();
    append_gradients(*grads, backward(model_.network, cache, d_output));
    if (model_.kind == ModelKind::kMdnShared) {
      grads->push_back(std::move(shared_grads.mu));
      grads->push_back(std::move(shared_grads.raw_sigma));
      grads->push_back(std::move(shared_grads.raw_rho));
    }
  }
  return loss;
}

double GeoObjective::data_loss(const Matrix& x, std::span<const GeoPoint> labels) const {
  const auto cache = forward(model_.network, x, false, nullptr);
  switch (model_.kind) {
    case ModelKind::kRegression: return regression_loss(cache.output, labels).loss;
    case ModelKind::kMdn: return mdn_nll(cache.output, labels, model_.head.transform).loss;
    case ModelKind::kMdnShared:
      return shared_nll(cache.output, model_.components, labels, model_.head.transform).loss;
    case ModelKind::kDialect: break;
  }
  throw ContractError("GeoObjective needs a geolocation model");
}

double GeoObjective::dev_metric(DevMetric metric) {
  const std::size_t n = dev_.labels.size();
  if (n == 0) throw InvalidArgument("development set is empty");
  std::vector<GeoPoint> predictions;
  double total = 0.0;
  for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
    const std::size_t end = std::min(n, begin + kEvalChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Matrix x = densify(dev_.inputs, idx, input_dim_);
    const auto labels = dev_.labels.subspan(begin, end - begin);
    if (metric == DevMetric::kDevLoss) {
      total += data_loss(x, labels) * static_cast<double>(end - begin);
    } else {
      for (const auto& p : predict_locations(model_, x, model_.head.rule)) {
        predictions.push_back(p);
      }
    }
  }
  if (metric == DevMetric::kDevLoss) return total / static_cast<double>(n);
  return evaluate(predictions, dev_.labels).median_km;
}

}  // namespace geomdn
