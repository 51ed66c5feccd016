// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "geomdn/mdn_models.hpp"
#include "geomdn/nn_core.hpp"

namespace geomdn {

enum class ModelKind {
  kRegression,
  kMdn,
  kMdnShared,
  kDialect,
};

const char* to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

/// What the dialect model's Gaussian layer emits per component.
enum class GaussianActivation {
  kDensity,     // N(x | mu_k, Sigma_k)
  kLogDensity,  // log N(x | mu_k, Sigma_k)
};

const char* to_string(GaussianActivation a);
GaussianActivation parse_gaussian_activation(const std::string& name);

/// Every model the library trains. Fields a kind does not use stay empty:
/// `components` holds the MDN-SHARED output layer or the dialect input layer.
struct Model {
  ModelKind kind = ModelKind::kMdn;
  MdnHeadConfig head;
  GaussianActivation activation = GaussianActivation::kDensity;
  Network network;
  SharedComponents components;
  std::string vocab_hash;

  bool is_geolocation() const { return kind != ModelKind::kDialect; }
  bool has_mixture_output() const {
    return kind == ModelKind::kMdn || kind == ModelKind::kMdnShared;
  }
};

}  // namespace geomdn
