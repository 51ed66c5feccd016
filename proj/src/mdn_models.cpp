// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/mdn_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geomdn/error.hpp"
#include "geomdn/kmeans.hpp"
#include "geomdn/random.hpp"

namespace geomdn {

const char* to_string(SelectionRule r) {
  return r == SelectionRule::kStrongestPi ? "strongest_pi" : "max_mixture_prob";
}

SelectionRule parse_selection_rule(const std::string& name) {
  if (name == "strongest_pi") return SelectionRule::kStrongestPi;
  if (name == "max_mixture_prob") return SelectionRule::kMaxMixtureProb;
  throw InvalidArgument("unknown selection rule '" + name +
                        "' (expected strongest_pi or max_mixture_prob)");
}

namespace {

void check_labels(std::size_t rows, std::span<const GeoPoint> labels) {
  if (rows != labels.size()) {
    std::ostringstream os;
    os << "label count " << labels.size() << " does not match batch size " << rows;
    throw ContractError(os.str());
  }
  if (rows == 0) throw ContractError("loss over an empty batch");
}

void check_finite(const Matrix& raw) {
  for (double v : raw.values()) {
    if (!std::isfinite(v)) throw TrainingError("non-finite network output");
  }
}

std::size_t components_from_width(std::size_t width) {
  if (width == 0 || width % 6 != 0) {
    std::ostringstream os;
    os << "MDN output width " << width << " is not a positive multiple of 6";
    throw ContractError(os.str());
  }
  return width / 6;
}

}  // namespace

MixtureDensity mdn_unpack_row(std::span<const double> raw, std::size_t K,
                              ConstraintTransform t) {
  if (K == 0 || raw.size() != 6 * K) {
    std::ostringstream os;
    os << "MDN row width " << raw.size() << " does not equal 6 x " << K;
    throw ContractError(os.str());
  }
  MixtureDensity m;
  m.components.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& c = m.components[k];
    c.mu1 = raw[k];
    c.mu2 = raw[K + k];
    c.sigma1 = sigma_from_raw(raw[2 * K + k], t);
    c.sigma2 = sigma_from_raw(raw[3 * K + k], t);
    c.rho = rho_from_raw(raw[4 * K + k], t);
  }
  m.weights = softmax(raw.subspan(5 * K, K));
  return m;
}

std::vector<MixtureDensity> mdn_unpack(const Matrix& raw, const MdnHeadConfig& head) {
  if (raw.cols() != head.raw_width()) {
    std::ostringstream os;
    os << "MDN output width " << raw.cols() << " does not equal 6 x "
       << head.num_components;
    throw ContractError(os.str());
  }
  std::vector<MixtureDensity> out;
  out.reserve(raw.rows());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    out.push_back(mdn_unpack_row(raw.row(i), head.num_components, head.transform));
  }
  return out;
}

LossResult mdn_nll(const Matrix& raw, std::span<const GeoPoint> labels,
                   ConstraintTransform t) {
  const std::size_t K = components_from_width(raw.cols());
  check_labels(raw.rows(), labels);
  check_finite(raw);

  const double inv_n = 1.0 / static_cast<double>(raw.rows());
  LossResult result{0.0, Matrix(raw.rows(), raw.cols())};
  std::vector<double> terms(K);
  std::vector<GaussianGrad> grads(K);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const auto row = raw.row(i);
    const auto log_pi = log_softmax(row.subspan(5 * K, K));
    std::vector<GaussianParams> comps(K);
    for (std::size_t k = 0; k < K; ++k) {
      comps[k] = {row[k], row[K + k], sigma_from_raw(row[2 * K + k], t),
                  sigma_from_raw(row[3 * K + k], t), rho_from_raw(row[4 * K + k], t)};
      terms[k] = log_pi[k] + log_pdf(comps[k], labels[i], grads[k]);
    }
    const double lse = logsumexp(terms);
    result.loss -= lse * inv_n;

    auto g = result.grad.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double gamma = std::exp(terms[k] - lse);
      const double w = -gamma * inv_n;
      g[k] = w * grads[k].mu1;
      g[K + k] = w * grads[k].mu2;
      g[2 * K + k] = w * grads[k].sigma1 * sigma_from_raw_grad(row[2 * K + k], t);
      g[3 * K + k] = w * grads[k].sigma2 * sigma_from_raw_grad(row[3 * K + k], t);
      g[4 * K + k] = w * grads[k].rho * rho_from_raw_grad(row[4 * K + k], t);
      g[5 * K + k] = (std::exp(log_pi[k]) - gamma) * inv_n;
    }
  }
  return result;
}

GaussianParams SharedComponents::component(std::size_t k, ConstraintTransform t) const {
  return {mu[2 * k], mu[2 * k + 1], sigma_from_raw(raw_sigma[2 * k], t),
          sigma_from_raw(raw_sigma[2 * k + 1], t), rho_from_raw(raw_rho[k], t)};
}

std::vector<GaussianParams> SharedComponents::components(ConstraintTransform t) const {
  std::vector<GaussianParams> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back(component(k, t));
  return out;
}

std::vector<ParamRef> SharedComponents::parameters(const std::string& prefix) {
  return {{prefix + ".mu", mu}, {prefix + ".raw_sigma", raw_sigma},
          {prefix + ".raw_rho", raw_rho}};
}

SharedLossResult shared_nll(const Matrix& pi_raw, const SharedComponents& shared,
                            std::span<const GeoPoint> labels, ConstraintTransform t) {
  const std::size_t K = shared.size();
  if (pi_raw.cols() != K || K == 0) {
    std::ostringstream os;
    os << "mixture-weight width " << pi_raw.cols() << " does not match " << K
       << " shared components";
    throw ContractError(os.str());
  }
  check_labels(pi_raw.rows(), labels);
  check_finite(pi_raw);

  const auto comps = shared.components(t);
  const double inv_n = 1.0 / static_cast<double>(pi_raw.rows());
  SharedLossResult result;
  result.grad_pi_raw = Matrix(pi_raw.rows(), K);
  result.grad_shared.mu.assign(2 * K, 0.0);
  result.grad_shared.raw_sigma.assign(2 * K, 0.0);
  result.grad_shared.raw_rho.assign(K, 0.0);

  // Chain factors of the transforms do not depend on the sample.
  std::vector<double> dsigma1(K), dsigma2(K), drho(K);
  for (std::size_t k = 0; k < K; ++k) {
    dsigma1[k] = sigma_from_raw_grad(shared.raw_sigma[2 * k], t);
    dsigma2[k] = sigma_from_raw_grad(shared.raw_sigma[2 * k + 1], t);
    drho[k] = rho_from_raw_grad(shared.raw_rho[k], t);
  }

  std::vector<double> terms(K);
  std::vector<GaussianGrad> grads(K);
  auto& gs = result.grad_shared;
  for (std::size_t i = 0; i < pi_raw.rows(); ++i) {
    const auto log_pi = log_softmax(pi_raw.row(i));
    for (std::size_t k = 0; k < K; ++k) {
      terms[k] = log_pi[k] + log_pdf(comps[k], labels[i], grads[k]);
    }
    const double lse = logsumexp(terms);
    result.loss -= lse * inv_n;
    auto g = result.grad_pi_raw.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double gamma = std::exp(terms[k] - lse);
      const double w = -gamma * inv_n;
      g[k] = (std::exp(log_pi[k]) - gamma) * inv_n;
      gs.mu[2 * k] += w * grads[k].mu1;
      gs.mu[2 * k + 1] += w * grads[k].mu2;
      gs.raw_sigma[2 * k] += w * grads[k].sigma1 * dsigma1[k];
      gs.raw_sigma[2 * k + 1] += w * grads[k].sigma2 * dsigma2[k];
      gs.raw_rho[k] += w * grads[k].rho * drho[k];
    }
  }
  return result;
}

SharedComponents init_shared(std::span<const GeoPoint> labels, std::size_t K,
                             std::uint64_t seed, double sigma_lo, double sigma_hi,
                             ConstraintTransform t) {
  if (!(sigma_lo >= 0.0 && sigma_hi > sigma_lo)) {
    throw InvalidArgument("initial sigma range must satisfy 0 <= lo < hi");
  }
  const KMeansResult km = kmeans(labels, K, seed);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  SharedComponents s;
  s.mu.reserve(2 * K);
  for (const auto& c : km.centroids) {
    s.mu.push_back(c.lat);
    s.mu.push_back(c.lon);
  }
  s.raw_sigma.resize(2 * K);
  for (double& r : s.raw_sigma) {
    const double sigma = sigma_lo + (sigma_hi - sigma_lo) * rng.uniform_open();
    r = sigma_to_raw(sigma, t);
  }
  s.raw_rho.assign(K, 0.0);
  return s;
}

GeoPoint predict(const MixtureDensity& m, SelectionRule rule) {
  if (m.components.empty()) throw DomainError("prediction from an empty mixture");
  std::size_t best = 0;
  if (rule == SelectionRule::kStrongestPi) {
    for (std::size_t k = 1; k < m.size(); ++k) {
      if (m.weights[k] > m.weights[best]) best = k;
    }
  } else {
    double best_value = mixture_log_pdf(m, m.components[0].mean());
    for (std::size_t k = 1; k < m.size(); ++k) {
      const double v = mixture_log_pdf(m, m.components[k].mean());
      if (v > best_value) {
        best_value = v;
        best = k;
      }
    }
  }
  return m.components[best].mean();
}

LossResult regression_loss(const Matrix& raw, std::span<const GeoPoint> labels) {
  if (raw.cols() != 2) throw ContractError("regression output must be 2 wide");
  check_labels(raw.rows(), labels);
  const double inv_n = 1.0 / static_cast<double>(raw.rows());
  LossResult result{0.0, Matrix(raw.rows(), 2)};
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const double d1 = raw(i, 0) - labels[i].lat;
    const double d2 = raw(i, 1) - labels[i].lon;
    result.loss += (d1 * d1 + d2 * d2) * inv_n;
    result.grad(i, 0) = 2.0 * d1 * inv_n;
    result.grad(i, 1) = 2.0 * d2 * inv_n;
  }
  return result;
}

GeoPoint DensityGrid::cell_center(std::size_t i, std::size_t j) const {
  const double dlat = (bbox.lat_max - bbox.lat_min) / static_cast<double>(resolution);
  const double dlon = (bbox.lon_max - bbox.lon_min) / static_cast<double>(resolution);
  return {bbox.lat_min + (static_cast<double>(i) + 0.5) * dlat,
          bbox.lon_min + (static_cast<double>(j) + 0.5) * dlon};
}

double DensityGrid::cell_area() const {
  const double r = static_cast<double>(resolution);
  return (bbox.lat_max - bbox.lat_min) / r * (bbox.lon_max - bbox.lon_min) / r;
}

DensityGrid make_grid(const BoundingBox& bbox, std::size_t resolution,
                      const std::function<double(GeoPoint)>& value) {
  if (!bbox.valid()) throw InvalidArgument("bounding box must satisfy min < max");
  if (resolution < 2) throw InvalidArgument("grid resolution must be >= 2");
  DensityGrid grid{bbox, resolution, {}};
  grid.values.reserve(resolution * resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      grid.values.push_back(value(grid.cell_center(i, j)));
    }
  }
  return grid;
}

DensityGrid predictive_density_grid(const MixtureDensity& mixture, const BoundingBox& bbox,
                                    std::size_t resolution) {
  return make_grid(bbox, resolution,
                   [&](GeoPoint p) { return mixture_log_pdf(mixture, p); });
}

}  // namespace geomdn
