// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "geomdn/error.hpp"
#include "geomdn/kmeans.hpp"
#include "oracles.hpp"

using namespace geomdn;

namespace {

std::vector<oracle::Point> to_oracle(const std::vector<GeoPoint>& pts) {
  std::vector<oracle::Point> out;
  for (const auto& p : pts) out.push_back({p.lat, p.lon});
  return out;
}

bool has_centroid(const KMeansResult& r, double lat, double lon, double tol) {
  return std::any_of(r.centroids.begin(), r.centroids.end(), [&](GeoPoint c) {
    return std::abs(c.lat - lat) <= tol && std::abs(c.lon - lon) <= tol;
  });
}

}  // namespace

TEST_CASE("four-point example") {
  const std::vector<GeoPoint> pts{{0, 0}, {0, 0.1}, {10, 10}, {10, 10.1}};
  const auto best = oracle::exhaustive_kmeans(to_oracle(pts), 2);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = kmeans(pts, 2, seed);
    CHECK(has_centroid(r, 0, 0.05, 1e-9));
    CHECK(has_centroid(r, 10, 10.05, 1e-9));
    for (const auto& c : best.centroids) CHECK(has_centroid(r, c.lat, c.lon, 1e-9));
    CHECK(std::abs(r.inertia - best.inertia) <= 1e-9);
  }
}

TEST_CASE("well-separated clusters reach the global optimum") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 0.3);
  const std::vector<GeoPoint> centers{{0, 0}, {20, 5}, {-10, 30}};
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<GeoPoint> pts;
    for (std::size_t i = 0; i < 9; ++i) {
      pts.push_back({centers[i % 3].lat + n(gen), centers[i % 3].lon + n(gen)});
    }
    const auto best = oracle::exhaustive_kmeans(to_oracle(pts), 3);
    const auto r = kmeans(pts, 3, static_cast<std::uint64_t>(trial + 1));
    CHECK(std::abs(r.inertia - best.inertia) <= 1e-9);
  }
}

TEST_CASE("inertia never increases") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-50, 50);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<GeoPoint> pts(300);
    for (auto& p : pts) p = {u(gen), u(gen)};
    const auto r = kmeans(pts, 7, seed);
    REQUIRE_FALSE(r.inertia_history.empty());
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      CHECK(r.inertia_history[i] <= r.inertia_history[i - 1]);
    }
    CHECK(r.inertia >= 0.0);
    std::vector<std::size_t> sizes(7, 0);
    for (auto a : r.assignments) ++sizes[a];
    for (auto s : sizes) CHECK(s > 0);
  }
}

TEST_CASE("one cluster is the mean after one iteration") {
  const std::vector<GeoPoint> pts{{1, 2}, {3, 8}, {5, -1}};
  const auto r = kmeans(pts, 1, 9);
  CHECK(r.iterations == 1);
  CHECK(r.centroids[0].lat == doctest::Approx(3.0));
  CHECK(r.centroids[0].lon == doctest::Approx(3.0));
}

TEST_CASE("as many clusters as distinct points") {
  const std::vector<GeoPoint> pts{{1, 1}, {1, 1}, {2, 5}, {7, 3}, {7, 3}, {-4, 0}};
  CHECK(count_distinct(pts) == 4);
  CHECK(kmeans(pts, 4, 2).inertia == 0.0);
  CHECK_THROWS_AS(kmeans(pts, 5, 2), InitError);
  CHECK_THROWS_AS(kmeans(pts, 0, 2), InvalidArgument);
}

TEST_CASE("deterministic for a seed") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-50, 50);
  std::vector<GeoPoint> pts(200);
  for (auto& p : pts) p = {u(gen), u(gen)};
  const auto a = kmeans(pts, 5, 11), b = kmeans(pts, 5, 11);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
}
