// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <span>
#include <vector>

#include "geomdn/features.hpp"
#include "geomdn/model.hpp"

namespace geomdn {

/// Starting point of the output-layer biases.
enum class OutputInit {
  kZero,    // Glorot weights, zero biases
  kLabels,  // biases from training-label statistics
};

const char* to_string(OutputInit i);
OutputInit parse_output_init(const std::string& name);

struct GeoModelOptions {
  ModelKind kind = ModelKind::kMdn;
  std::vector<std::size_t> hidden = {100};
  MdnHeadConfig head;
  double dropout = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 1;
  OutputInit output_init = OutputInit::kLabels;
  // Effective initial sigma range for mixture components.
  double sigma_init_lo = 0.0;
  double sigma_init_hi = 10.0;
};

/// Builds a text-to-location model. MDN-SHARED's shared layer always starts
/// from K-means centroids and random sigmas. With OutputInit::kLabels the
/// regression bias is the label mean and the MDN head biases encode the same
/// centroids and sigmas.
Model init_geo_model(const GeoModelOptions& options, std::size_t input_dim,
                     std::span<const GeoPoint> train_labels);

Matrix densify(std::span<const FeatureVector> rows, std::span<const std::size_t> indices,
               std::size_t dim);
Matrix densify(std::span<const FeatureVector> rows, std::size_t dim);

/// Eval-mode mixtures for MDN and MDN-SHARED models.
std::vector<MixtureDensity> predict_mixtures(const Model& model, const Matrix& inputs);
std::vector<GeoPoint> predict_locations(const Model& model, const Matrix& inputs,
                                        SelectionRule rule);

struct GeoDataset {
  std::span<const FeatureVector> inputs;
  std::span<const GeoPoint> labels;
};

/// Binds a geolocation model to its train/dev data for train_loop and
/// gradient_check. The dev loss is the NLL for mixture models and the squared
/// error for regression.
class GeoObjective : public Objective {
 public:
  GeoObjective(Model& model, GeoDataset train, GeoDataset dev, std::size_t input_dim);

  std::vector<ParamRef> parameters() override;
  std::size_t train_size() const override { return train_.labels.size(); }
  double loss(std::span<const std::size_t> batch, Rng& rng, Gradients* grads) override;
  double dev_metric(DevMetric metric) override;

  double data_loss(const Matrix& inputs, std::span<const GeoPoint> labels) const;

 private:
  Model& model_;
  GeoDataset train_;
  GeoDataset dev_;
  std::size_t input_dim_;
};

}  // namespace geomdn
