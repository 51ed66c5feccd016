// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "geomdn/error.hpp"
#include "geomdn/random.hpp"

namespace geomdn {

namespace {

double squared_distance(GeoPoint a, GeoPoint b) {
  const double d1 = a.lat - b.lat;
  const double d2 = a.lon - b.lon;
  return d1 * d1 + d2 * d2;
}

std::vector<GeoPoint> seed_plus_plus(std::span<const GeoPoint> points, std::size_t k,
                                     Rng& rng) {
  std::vector<GeoPoint> centroids;
  centroids.push_back(points[rng.below(points.size())]);
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
      total += nearest[i];
    }
    // total > 0 because there are at least k distinct points.
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (nearest[i] == 0.0) continue;
      acc += nearest[i];
      pick = i;
      if (acc > target) break;
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

double assign(std::span<const GeoPoint> points, const std::vector<GeoPoint>& centroids,
              std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    assignments[i] = arg;
    inertia += best;
  }
  return inertia;
}

// Moves the point farthest from its centroid into each empty cluster.
void repair_empty(std::span<const GeoPoint> points, std::vector<GeoPoint>& centroids,
                  std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.size();
  for (;;) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assignments) ++counts[a];
    const auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
    if (empty == counts.end()) return;
    double worst = -1.0;
    std::size_t far = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[assignments[i]] < 2) continue;
      const double d = squared_distance(points[i], centroids[assignments[i]]);
      if (d > worst) {
        worst = d;
        far = i;
      }
    }
    const auto cluster = static_cast<std::size_t>(empty - counts.begin());
    assignments[far] = cluster;
    centroids[cluster] = points[far];
  }
}

double update_centroids(std::span<const GeoPoint> points,
                        const std::vector<std::size_t>& assignments,
                        std::vector<GeoPoint>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<double> sum_lat(k, 0.0), sum_lon(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sum_lat[assignments[i]] += points[i].lat;
    sum_lon[assignments[i]] += points[i].lon;
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double n = static_cast<double>(counts[c]);
    centroids[c] = {sum_lat[c] / n, sum_lon[c] / n};
  }
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    inertia += squared_distance(points[i], centroids[assignments[i]]);
  }
  return inertia;
}

}  // namespace

std::size_t count_distinct(std::span<const GeoPoint> points) {
  std::vector<GeoPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](GeoPoint a, GeoPoint b) {
    return a.lat < b.lat || (a.lat == b.lat && a.lon < b.lon);
  });
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) -
                                  sorted.begin());
}

KMeansResult kmeans(std::span<const GeoPoint> points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k == 0) throw InvalidArgument("k-means needs k >= 1");
  const std::size_t distinct = count_distinct(points);
  if (distinct < k) {
    std::ostringstream os;
    os << "k-means needs at least " << k << " distinct points, got " << distinct;
    throw InitError(os.str());
  }

  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments.assign(points.size(), 0);

  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < std::max<std::size_t>(options.max_iters, 1); ++iter) {
    assign(points, result.centroids, result.assignments);
    repair_empty(points, result.centroids, result.assignments);
    const double inertia = update_centroids(points, result.assignments, result.centroids);
    result.inertia_history.push_back(inertia);
    result.inertia = inertia;
    result.iterations = iter + 1;
    // A single cluster is optimal after its first update.
    if (k == 1 || previous - inertia < options.tol) break;
    previous = inertia;
  }
  return result;
}

}  // namespace geomdn
