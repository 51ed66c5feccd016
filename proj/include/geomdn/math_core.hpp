// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "geomdn/types.hpp"

namespace geomdn {

/// One bivariate Gaussian component in (lat, lon) degree space.
struct GaussianParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double rho = 0.0;

  /// Throws DomainError unless sigma1, sigma2 > 0 and |rho| < 1.
  void validate() const;
  GeoPoint mean() const { return {mu1, mu2}; }
};

/// Partial derivatives of a scalar with respect to each component parameter.
struct GaussianGrad {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;
};

struct MixtureDensity {
  std::vector<GaussianParams> components;
  std::vector<double> weights;

  std::size_t size() const { return components.size(); }
  /// Throws DomainError on K = 0, mismatched sizes, negative weights, weights
  /// not summing to 1 within 1e-6 or any invalid component.
  void validate() const;
};

// Lower bound on the effective (1 - rho^2). Inside the clamp zone the density
// is evaluated at the bound and d/d(rho) is zero.
inline constexpr double kMinOneMinusRhoSq = 1e-9;

// Floor applied to transformed standard deviations. It only affects values
// whose softplus underflows; the derivative remains the transform's own.
inline constexpr double kMinSigma = 1e-6;

double log_pdf(const GaussianParams& g, GeoPoint x);
/// Also writes d(log N)/d(parameter) into `grad`.
double log_pdf(const GaussianParams& g, GeoPoint x, GaussianGrad& grad);
double pdf(const GaussianParams& g, GeoPoint x);

/// log sum_k pi_k N(x | component k); zero-weight components are skipped.
double mixture_log_pdf(const MixtureDensity& m, GeoPoint x);

double logsumexp(std::span<const double> v);

double softplus(double x);
double softplus_grad(double x);
/// Inverse of softplus for y > 0.
double softplus_inverse(double y);

double softsign(double x);
double softsign_grad(double x);

std::vector<double> softmax(std::span<const double> v);
/// log(softmax(v)) without forming the probabilities.
std::vector<double> log_softmax(std::span<const double> v);
/// Given p = softmax(v) and upstream g = dL/dp, returns dL/dv.
std::vector<double> softmax_jacobian_vector_product(std::span<const double> p,
                                                    std::span<const double> g);

/// Transforms mapping unconstrained network outputs to valid sigma and rho.
enum class ConstraintTransform {
  kSoftplusSoftsign,
  kExpTanh,
};

double sigma_from_raw(double raw, ConstraintTransform t);
double sigma_from_raw_grad(double raw, ConstraintTransform t);
double sigma_to_raw(double sigma, ConstraintTransform t);
double rho_from_raw(double raw, ConstraintTransform t);
double rho_from_raw_grad(double raw, ConstraintTransform t);

const char* to_string(ConstraintTransform t);
ConstraintTransform parse_constraint_transform(const std::string& name);

}  // namespace geomdn
