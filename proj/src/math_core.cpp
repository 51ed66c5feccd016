// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/math_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "geomdn/error.hpp"

namespace geomdn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// exp/tanh variants saturate; keep them inside the representable range.
constexpr double kMaxExpArg = 50.0;
constexpr double kMaxAbsTanhRho = 1.0 - 1e-12;

}  // namespace

void GaussianParams::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(sigma1) ||
      !std::isfinite(sigma2)) {
    std::ostringstream os;
    os << "gaussian sigma must be positive and finite (sigma1=" << sigma1
       << ", sigma2=" << sigma2 << ")";
    throw DomainError(os.str());
  }
  if (!(std::abs(rho) < 1.0)) {
    std::ostringstream os;
    os << "gaussian correlation must satisfy |rho| < 1 (rho=" << rho << ")";
    throw DomainError(os.str());
  }
  if (!std::isfinite(mu1) || !std::isfinite(mu2)) {
    throw DomainError("gaussian mean must be finite");
  }
}

void MixtureDensity::validate() const {
  if (components.empty()) throw DomainError("mixture needs at least one component");
  if (weights.size() != components.size()) {
    throw DomainError("mixture weight count does not match component count");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("mixture weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw DomainError("mixture weights must sum to 1");
  }
  for (const auto& c : components) c.validate();
}

double log_pdf(const GaussianParams& g, GeoPoint x) {
  GaussianGrad unused;
  return log_pdf(g, x, unused);
}

double log_pdf(const GaussianParams& g, GeoPoint x, GaussianGrad& grad) {
  g.validate();
  const double s1 = g.sigma1;
  const double s2 = g.sigma2;
  const double r = g.rho;
  const double d1 = x.lat - g.mu1;
  const double d2 = x.lon - g.mu2;

  const double raw_q = 1.0 - r * r;
  const bool clamped = raw_q < kMinOneMinusRhoSq;
  const double q = clamped ? kMinOneMinusRhoSq : raw_q;

  const double u1 = d1 / s1;
  const double u2 = d2 / s2;
  const double z = u1 * u1 - 2.0 * r * u1 * u2 + u2 * u2;

  const double value =
      -kLog2Pi - std::log(s1) - std::log(s2) - 0.5 * std::log(q) - z / (2.0 * q);

  grad.mu1 = (u1 - r * u2) / (s1 * q);
  grad.mu2 = (u2 - r * u1) / (s2 * q);
  grad.sigma1 = -1.0 / s1 + (u1 * u1 - r * u1 * u2) / (s1 * q);
  grad.sigma2 = -1.0 / s2 + (u2 * u2 - r * u1 * u2) / (s2 * q);
  grad.rho = clamped ? 0.0 : r / q + u1 * u2 / q - z * r / (q * q);
  return value;
}

double pdf(const GaussianParams& g, GeoPoint x) { return std::exp(log_pdf(g, x)); }

double mixture_log_pdf(const MixtureDensity& m, GeoPoint x) {
  if (m.components.empty() || m.weights.size() != m.components.size()) {
    throw DomainError("mixture is empty or has mismatched weights");
  }
  std::vector<double> terms;
  terms.reserve(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.weights[k] < 0.0) throw DomainError("mixture weights must be non-negative");
    if (m.weights[k] == 0.0) continue;
    terms.push_back(std::log(m.weights[k]) + log_pdf(m.components[k], x));
  }
  if (terms.empty()) throw DomainError("all mixture weights are zero");
  return logsumexp(terms);
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) throw DomainError("logsumexp of an empty list");
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_grad(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw DomainError("softplus inverse needs a positive argument");
  // log(exp(y) - 1) = y + log(1 - exp(-y))
  if (y > 20.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

double softsign(double x) { return x / (1.0 + std::abs(x)); }

double softsign_grad(double x) {
  const double d = 1.0 + std::abs(x);
  return 1.0 / (d * d);
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.size());
  if (v.empty()) return out;
  const double hi = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - hi);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  if (v.empty()) return out;
  const double lse = logsumexp(v);
  for (double& x : out) x -= lse;
  return out;
}

std::vector<double> softmax_jacobian_vector_product(std::span<const double> p,
                                                    std::span<const double> g) {
  if (p.size() != g.size()) throw ContractError("softmax jvp size mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * g[i];
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (g[i] - dot);
  return out;
}

double sigma_from_raw(double raw, ConstraintTransform t) {
  const double s = t == ConstraintTransform::kSoftplusSoftsign
                       ? softplus(raw)
                       : std::exp(std::min(raw, kMaxExpArg));
  return std::max(s, kMinSigma);
}

double sigma_from_raw_grad(double raw, ConstraintTransform t) {
  if (t == ConstraintTransform::kSoftplusSoftsign) return softplus_grad(raw);
  return raw > kMaxExpArg ? 0.0 : std::exp(raw);
}

double sigma_to_raw(double sigma, ConstraintTransform t) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  return t == ConstraintTransform::kSoftplusSoftsign ? softplus_inverse(sigma)
                                                     : std::log(sigma);
}

double rho_from_raw(double raw, ConstraintTransform t) {
  if (t == ConstraintTransform::kSoftplusSoftsign) return softsign(raw);
  return std::clamp(std::tanh(raw), -kMaxAbsTanhRho, kMaxAbsTanhRho);
}

double rho_from_raw_grad(double raw, ConstraintTransform t) {
  if (t == ConstraintTransform::kSoftplusSoftsign) return softsign_grad(raw);
  const double th = std::tanh(raw);
  return 1.0 - th * th;
}

const char* to_string(ConstraintTransform t) {
  return t == ConstraintTransform::kSoftplusSoftsign ? "softplus_softsign"
                                                     : "exp_tanh";
}

ConstraintTransform parse_constraint_transform(const std::string& name) {
  if (name == "softplus_softsign") return ConstraintTransform::kSoftplusSoftsign;
  if (name == "exp_tanh") return ConstraintTransform::kExpTanh;
  throw InvalidArgument("unknown constraint transform '" + name +
                        "' (expected softplus_softsign or exp_tanh)");
}

}  // namespace geomdn
