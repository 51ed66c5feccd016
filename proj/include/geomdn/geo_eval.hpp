// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geomdn/types.hpp"

namespace geomdn {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kAccuracyRadiusKm = 161.0;

/// Great-circle distance on a sphere of radius 6371 km.
double haversine_km(GeoPoint a, GeoPoint b);

struct EvalReport {
  double acc_at_161 = 0.0;  // percent, distance <= 161 km counts as correct
  double mean_km = 0.0;
  double median_km = 0.0;   // lower-middle element for even counts
  std::vector<double> errors_km;
};

/// Throws ContractError on empty input or mismatched lengths.
EvalReport evaluate(std::span<const GeoPoint> predictions, std::span<const GeoPoint> truths);

struct UserError {
  std::string user_id;
  GeoPoint truth;
  GeoPoint prediction;
  double km = 0.0;
};

/// TSV: user_id, true_lat, true_lon, pred_lat, pred_lon, km_error.
void write_error_tsv(std::ostream& out, std::span<const UserError> rows);

}  // namespace geomdn
