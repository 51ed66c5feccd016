// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "geomdn/error.hpp"
#include "geomdn/geo_eval.hpp"
#include "oracles.hpp"

using namespace geomdn;

namespace {

GeoPoint north_of(GeoPoint p, double km) {
  return {p.lat + km / 6371.0 * 180.0 / std::numbers::pi, p.lon};
}

std::vector<GeoPoint> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  std::vector<GeoPoint> out(n);
  for (auto& p : out) p = {lat(gen), lon(gen)};
  return out;
}

}  // namespace

TEST_CASE("haversine") {
  const GeoPoint nyc{40.7128, -74.0060}, la{34.0522, -118.2437};
  CHECK(haversine_km(nyc, nyc) == 0.0);
  CHECK(std::abs(haversine_km(nyc, la) - oracle::law_of_cosines_km({40.7128, -74.0060},
                                                                    {34.0522, -118.2437})) <= 1.0);
  CHECK(haversine_km(nyc, la) == doctest::Approx(3936).epsilon(1e-3));
  CHECK(haversine_km({0, 0}, {0, 180}) == doctest::Approx(std::numbers::pi * 6371.0));
  CHECK(haversine_km({90, 0}, {-90, 0}) == doctest::Approx(20015.1).epsilon(1e-5));
  CHECK(haversine_km(nyc, la) == haversine_km(la, nyc));
}

TEST_CASE("haversine agrees with the law of cosines") {
  const auto a = random_points(1000, 1), b = random_points(1000, 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double want = oracle::law_of_cosines_km({a[i].lat, a[i].lon}, {b[i].lat, b[i].lon});
    CHECK(std::abs(haversine_km(a[i], b[i]) - want) <= 1e-3);
  }
}

TEST_CASE("triangle inequality") {
  const auto a = random_points(1000, 3), b = random_points(1000, 4), c = random_points(1000, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(haversine_km(a[i], c[i]) <= haversine_km(a[i], b[i]) + haversine_km(b[i], c[i]) + 1e-6);
  }
}

TEST_CASE("metric examples") {
  SUBCASE("exact predictions") {
    const auto p = random_points(5, 6);
    const auto r = evaluate(p, p);
    CHECK(r.acc_at_161 == 100.0);
    CHECK(r.mean_km == 0.0);
    CHECK(r.median_km == 0.0);
  }
  SUBCASE("errors 100, 200, 600") {
    const GeoPoint o{10, 20};
    const std::vector<GeoPoint> truth{o, o, o};
    const std::vector<GeoPoint> pred{north_of(o, 100), north_of(o, 600), north_of(o, 200)};
    const auto r = evaluate(pred, truth);
    CHECK(r.mean_km == doctest::Approx(300.0));
    CHECK(r.median_km == doctest::Approx(200.0));
    CHECK(r.acc_at_161 == doctest::Approx(100.0 / 3.0));
    CHECK(r.errors_km.size() == 3);
  }
  SUBCASE("even count takes the lower middle") {
    const GeoPoint o{0, 0};
    const std::vector<GeoPoint> truth{o, o, o, o};
    const std::vector<GeoPoint> pred{north_of(o, 40), north_of(o, 10), north_of(o, 30),
                                     north_of(o, 20)};
    CHECK(evaluate(pred, truth).median_km == doctest::Approx(20.0));
  }
  SUBCASE("161 km is inclusive") {
    const GeoPoint o{0, 0};
    const std::vector<GeoPoint> truth{o};
    GeoPoint p = north_of(o, 161.0);
    while (haversine_km(p, o) > 161.0) p.lat = std::nextafter(p.lat, 0.0);
    CHECK(haversine_km(p, o) == doctest::Approx(161.0));
    CHECK(evaluate(std::vector<GeoPoint>{p}, truth).acc_at_161 == 100.0);
    CHECK(evaluate(std::vector<GeoPoint>{north_of(o, 161.01)}, truth).acc_at_161 == 0.0);
  }
  SUBCASE("contracts") {
    const std::vector<GeoPoint> one{{0, 0}}, two{{0, 0}, {1, 1}}, none;
    CHECK_THROWS_AS(evaluate(one, two), ContractError);
    CHECK_THROWS_AS(evaluate(none, none), ContractError);
  }
}

TEST_CASE("metrics match a brute-force implementation") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> lat(25, 49), lon(-124, -67);
  std::vector<GeoPoint> pred(1000), truth(1000);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    truth[i] = {lat(gen), lon(gen)};
    pred[i] = i % 3 ? GeoPoint{truth[i].lat + 0.5, truth[i].lon - 0.5}
                    : GeoPoint{lat(gen), lon(gen)};
  }
  const auto r = evaluate(pred, truth);
  std::vector<double> errs;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    errs.push_back(oracle::law_of_cosines_km({pred[i].lat, pred[i].lon},
                                             {truth[i].lat, truth[i].lon}));
  }
  // The brute-force metrics run on the library's per-user distances so the
  // comparison isolates the aggregation.
  const auto want = oracle::brute_metrics(r.errors_km);
  CHECK(oracle::relative_error(r.acc_at_161, want.acc, 1e-300) <= 1e-9);
  CHECK(oracle::relative_error(r.mean_km, want.mean, 1e-300) <= 1e-9);
  CHECK(oracle::relative_error(r.median_km, want.median, 1e-300) <= 1e-9);
  for (std::size_t i = 0; i < errs.size(); ++i) CHECK(std::abs(r.errors_km[i] - errs[i]) <= 1e-3);

  std::vector<std::size_t> perm(pred.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<GeoPoint> p2, t2;
  for (auto i : perm) {
    p2.push_back(pred[i]);
    t2.push_back(truth[i]);
  }
  const auto r2 = evaluate(p2, t2);
  CHECK(r2.acc_at_161 == r.acc_at_161);
  CHECK(r2.median_km == r.median_km);
  CHECK(r2.mean_km == doctest::Approx(r.mean_km).epsilon(1e-12));
  CHECK(r.acc_at_161 >= 0.0);
  CHECK(r.acc_at_161 <= 100.0);
}

TEST_CASE("error export") {
  std::ostringstream out;
  const std::vector<UserError> rows{{"u1", {1, 2}, {3, 4}, 12.5}};
  write_error_tsv(out, rows);
  CHECK(out.str() ==
        "user_id\ttrue_lat\ttrue_lon\tpred_lat\tpred_lon\tkm_error\n"
        "u1\t1.000000\t2.000000\t3.000000\t4.000000\t12.500\n");
}
