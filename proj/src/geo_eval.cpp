// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/geo_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "geomdn/error.hpp"

namespace geomdn {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double haversine_km(GeoPoint a, GeoPoint b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

EvalReport evaluate(std::span<const GeoPoint> predictions, std::span<const GeoPoint> truths) {
  if (predictions.size() != truths.size()) {
    throw ContractError("evaluate: prediction and truth counts differ");
  }
  if (predictions.empty()) throw ContractError("evaluate: empty evaluation set");

  EvalReport report;
  report.errors_km.reserve(predictions.size());
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double km = haversine_km(predictions[i], truths[i]);
    report.errors_km.push_back(km);
    total += km;
    if (km <= kAccuracyRadiusKm) ++hits;
  }
  const double n = static_cast<double>(predictions.size());
  report.acc_at_161 = 100.0 * static_cast<double>(hits) / n;
  report.mean_km = total / n;
  std::vector<double> sorted = report.errors_km;
  std::sort(sorted.begin(), sorted.end());
  report.median_km = sorted[(sorted.size() - 1) / 2];
  return report;
}

void write_error_tsv(std::ostream& out, std::span<const UserError> rows) {
  out << "user_id\ttrue_lat\ttrue_lon\tpred_lat\tpred_lon\tkm_error\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t%.6f\t%.6f\t%.3f\n", r.truth.lat,
                  r.truth.lon, r.prediction.lat, r.prediction.lon, r.km);
    out << r.user_id << buf;
  }
}

}  // namespace geomdn
