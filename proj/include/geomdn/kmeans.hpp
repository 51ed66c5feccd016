// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geomdn/types.hpp"

namespace geomdn {

struct KMeansOptions {
  std::size_t max_iters = 300;
  double tol = 1e-6;
};

struct KMeansResult {
  std::vector<GeoPoint> centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  std::size_t iterations = 0;
  // Inertia after every Lloyd update, in order.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm on raw (lat, lon) with k-means++ seeding. Distances are
/// Euclidean in degree space, the same space the Gaussian components live in.
/// Throws InitError when there are fewer than k distinct points.
KMeansResult kmeans(std::span<const GeoPoint> points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

std::size_t count_distinct(std::span<const GeoPoint> points);

}  // namespace geomdn
