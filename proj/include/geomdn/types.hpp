// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace geomdn {

/// Latitude/longitude in degrees. The Gaussian math treats (lat, lon) as a
/// plain Euclidean plane; only geo_eval applies spherical geometry.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

inline bool is_valid(GeoPoint p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  bool valid() const { return lat_min < lat_max && lon_min < lon_max; }
};

}  // namespace geomdn
