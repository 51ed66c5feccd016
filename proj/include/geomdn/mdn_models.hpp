// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "geomdn/math_core.hpp"
#include "geomdn/matrix.hpp"
#include "geomdn/nn_core.hpp"
#include "geomdn/types.hpp"

namespace geomdn {

enum class SelectionRule {
  kStrongestPi,     // mean of the component with the largest weight
  kMaxMixtureProb,  // component mean with the highest mixture density
};

const char* to_string(SelectionRule r);
SelectionRule parse_selection_rule(const std::string& name);

// Column blocks of an MDN output row, each K wide, in this order.
inline constexpr const char* kSliceLayoutTag = "mu1,mu2,sigma1,sigma2,rho,pi";

struct MdnHeadConfig {
  std::size_t num_components = 1;
  SelectionRule rule = SelectionRule::kStrongestPi;
  ConstraintTransform transform = ConstraintTransform::kSoftplusSoftsign;

  std::size_t raw_width() const { return 6 * num_components; }
};

MixtureDensity mdn_unpack_row(std::span<const double> raw, std::size_t num_components,
                              ConstraintTransform transform =
                                  ConstraintTransform::kSoftplusSoftsign);
/// Throws ContractError unless raw.cols() == 6K.
std::vector<MixtureDensity> mdn_unpack(const Matrix& raw, const MdnHeadConfig& head);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // dLoss/dRaw, same shape as the input
};

/// Mean negative log-likelihood of the labels under the unpacked mixtures.
/// K is taken from raw.cols() / 6.
LossResult mdn_nll(const Matrix& raw, std::span<const GeoPoint> labels,
                   ConstraintTransform transform = ConstraintTransform::kSoftplusSoftsign);

/// K Gaussian components shared across samples, stored unconstrained.
/// Used as the MDN-SHARED output layer and as the dialect model's
/// Gaussian input layer (which has no mixture weights).
struct SharedComponents {
  std::vector<double> mu;         // K x 2: lat, lon
  std::vector<double> raw_sigma;  // K x 2, pre-transform
  std::vector<double> raw_rho;    // K, pre-transform

  std::size_t size() const { return raw_rho.size(); }
  GaussianParams component(std::size_t k, ConstraintTransform t) const;
  std::vector<GaussianParams> components(ConstraintTransform t) const;
  std::vector<ParamRef> parameters(const std::string& prefix);
};

using SharedMixtureState = SharedComponents;

struct SharedGradients {
  std::vector<double> mu;
  std::vector<double> raw_sigma;
  std::vector<double> raw_rho;
};

struct SharedLossResult {
  double loss = 0.0;
  Matrix grad_pi_raw;
  SharedGradients grad_shared;
};

/// NLL with per-sample weights softmax(pi_raw row) and global components.
SharedLossResult shared_nll(const Matrix& pi_raw, const SharedComponents& shared,
                            std::span<const GeoPoint> labels,
                            ConstraintTransform transform =
                                ConstraintTransform::kSoftplusSoftsign);

/// Means from K-means over the labels; effective sigmas uniform in the open
/// interval (sigma_lo, sigma_hi); rho = 0.
SharedComponents init_shared(std::span<const GeoPoint> labels, std::size_t num_components,
                             std::uint64_t seed, double sigma_lo = 0.0,
                             double sigma_hi = 10.0,
                             ConstraintTransform transform =
                                 ConstraintTransform::kSoftplusSoftsign);

/// Ties go to the lowest component index.
GeoPoint predict(const MixtureDensity& mixture, SelectionRule rule);

/// Mean over samples of the squared error summed over both coordinates.
LossResult regression_loss(const Matrix& raw, std::span<const GeoPoint> labels);

/// Row-major grid of cell-center values; row i runs along latitude from
/// lat_min, column j along longitude from lon_min.
struct DensityGrid {
  BoundingBox bbox;
  std::size_t resolution = 0;
  std::vector<double> values;

  GeoPoint cell_center(std::size_t i, std::size_t j) const;
  double cell_area() const;
  double at(std::size_t i, std::size_t j) const { return values[i * resolution + j]; }
};

DensityGrid make_grid(const BoundingBox& bbox, std::size_t resolution,
                      const std::function<double(GeoPoint)>& value);

/// Grid of mixture log-densities. Throws InvalidArgument for an invalid box or
/// resolution < 2.
DensityGrid predictive_density_grid(const MixtureDensity& mixture, const BoundingBox& bbox,
                                    std::size_t resolution);

}  // namespace geomdn
