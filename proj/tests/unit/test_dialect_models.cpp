// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "geomdn/dialect_models.hpp"
#include "geomdn/error.hpp"
#include "oracles.hpp"

using namespace geomdn;

namespace {

const auto kT = ConstraintTransform::kSoftplusSoftsign;

GeoPoint north_of(GeoPoint p, double km) {
  return {p.lat + km / 6371.0 * 180.0 / std::numbers::pi, p.lon};
}

std::vector<GeoPoint> grid_points() {
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) pts.push_back({30.0 + 2 * i, -100.0 + 3 * j});
  }
  return pts;
}

// log P(w|x) for a two-word vocabulary: word 0 is constant, word 1 is 1 inside
// a box and 0 elsewhere.
LogProbFn box_fn() {
  return [](std::span<const GeoPoint> pts) {
    Matrix m(pts.size(), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      m(i, 0) = -0.7;
      m(i, 1) = pts[i].lat > 35.0 ? 1.0 : 0.0;
    }
    return m;
  };
}

}  // namespace

TEST_CASE("gaussian layer activation") {
  GaussianLayerState s{{1.0, 2.0, 5.0, 5.0},
                       {softplus_inverse(1.0), softplus_inverse(1.0), 0.3, -0.2},
                       {0.0, 0.4}};
  const auto at_mean = gaussian_layer_forward(s, {1.0, 2.0}, kT);
  CHECK(at_mean[0] == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-12));
  CHECK(at_mean[0] == doctest::Approx(0.159155).epsilon(1e-6));
  CHECK(gaussian_layer_forward(s, {11.0, 2.0}, kT)[0] < 1e-20);

  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> d(-3, 8);
  for (int i = 0; i < 100; ++i) {
    const GeoPoint x{d(gen), d(gen)};
    const auto act = gaussian_layer_forward(s, x, kT);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto g = s.component(k, kT);
      const double want =
          std::exp(oracle::matrix_log_pdf(g.mu1, g.mu2, g.sigma1, g.sigma2, g.rho, x.lat, x.lon));
      CHECK(std::abs(act[k] - want) <= 1e-12);
    }
  }
  const auto logs = gaussian_layer_forward(s, {1.0, 2.0}, kT, GaussianActivation::kLogDensity);
  CHECK(logs[0] == doctest::Approx(-std::log(2.0 * std::numbers::pi)));
}

TEST_CASE("dialect_forward") {
  const auto pts = grid_points();
  DialectModelOptions opt;
  opt.num_components = 4;
  opt.hidden = 6;
  auto model = init_dialect_model(opt, 7, pts);

  SUBCASE("output is a strictly positive distribution") {
    for (const auto& p : pts) {
      const auto prob = dialect_forward(model, p);
      double sum = 0.0;
      for (double v : prob) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
  SUBCASE("zero weights give a uniform distribution") {
    for (auto& layer : model.network.mutable_layers()) {
      for (auto& w : layer.weights.values()) w = 0.0;
      for (auto& b : layer.bias) b = 0.0;
    }
    for (double v : dialect_forward(model, {40, -90})) CHECK(v == doctest::Approx(1.0 / 7.0));
  }
  SUBCASE("a weight tied to one component favours its word near that component") {
    auto& layers = model.network.mutable_layers();
    for (auto& layer : layers) {
      for (auto& w : layer.weights.values()) w = 0.0;
      for (auto& b : layer.bias) b = 0.0;
    }
    layers[0].weights(0, 0) = 50.0;
    layers[1].weights(0, 1) = 5.0;
    const GeoPoint mu{model.components.mu[0], model.components.mu[1]};
    const GeoPoint far{mu.lat + 40.0, mu.lon + 40.0};
    CHECK(dialect_forward(model, mu)[1] > dialect_forward(model, far)[1]);
  }
}

TEST_CASE("dialect loss") {
  SUBCASE("one-hot prediction equal to the target") {
    Matrix logits(1, 3, -800.0);
    logits(0, 1) = 800.0;
    Matrix t(1, 3);
    t(0, 1) = 1.0;
    CHECK(dialect_loss(logits, t).loss == doctest::Approx(0.0));
  }
  SUBCASE("uniform prediction costs log V") {
    Matrix t(2, 5);
    t(0, 0) = 0.25;
    t(0, 3) = 0.75;
    t(1, 2) = 1.0;
    CHECK(dialect_loss(Matrix(2, 5, 0.3), t).loss == doctest::Approx(std::log(5.0)));
  }
  SUBCASE("empty rows are skipped and negative rows rejected") {
    Matrix t(2, 3);
    t(0, 0) = 1.0;
    const auto r = dialect_loss(Matrix(2, 3), t);
    CHECK(r.loss == doctest::Approx(std::log(3.0)));
    for (double g : r.grad.row(1)) CHECK(g == 0.0);
    t(1, 0) = 1.5;
    t(1, 1) = -0.5;
    CHECK_THROWS_AS(dialect_loss(Matrix(2, 3), t), ContractError);
  }
  SUBCASE("gradient is (p - t) / N and matches differences") {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> d(-2, 2), u(0, 1);
    const std::size_t n = 3, v = 4;
    std::vector<double> logits(n * v);
    for (auto& x : logits) x = d(gen);
    Matrix t(n, v);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < v; ++j) s += (t(i, j) = u(gen));
      for (std::size_t j = 0; j < v; ++j) t(i, j) /= s;
    }
    const auto to_m = [&](const std::vector<double>& x) {
      Matrix m(n, v);
      std::copy(x.begin(), x.end(), m.values().begin());
      return m;
    };
    const auto r = dialect_loss(to_m(logits), t);
    const auto f = [&](const std::vector<double>& x) { return dialect_loss(to_m(x), t).loss; };
    for (std::size_t i = 0; i < logits.size(); ++i) {
      CHECK(oracle::relative_error(r.grad.values()[i],
                                   oracle::central_difference(f, logits, i)) <= 1e-4);
    }
  }
}

TEST_CASE("dialect model gradients pass the check") {
  const auto pts = grid_points();
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<FeatureVector> targets(pts.size());
  for (auto& t : targets) {
    double s = 0.0;
    for (std::size_t v = 0; v < 5; ++v) {
      if (u(gen) < 0.5) {
        t.entries.push_back({v, u(gen) + 0.1});
        s += t.entries.back().second;
      }
    }
    for (auto& e : t.entries) e.second /= s;
  }
  for (auto act : {GaussianActivation::kDensity, GaussianActivation::kLogDensity}) {
    for (double dropout : {0.0, 0.3}) {
      DialectModelOptions opt;
      opt.num_components = 3;
      opt.hidden = 4;
      opt.dropout = dropout;
      opt.l1 = opt.l2 = 1e-3;
      opt.activation = act;
      auto model = init_dialect_model(opt, 5, pts);
      DialectObjective obj(model, {pts, targets}, {pts, targets});
      std::vector<std::size_t> batch(pts.size());
      for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
      const auto report = gradient_check(obj, batch);
      CAPTURE(dropout);
      for (const auto& b : report.blocks) {
        CAPTURE(b.name);
        CHECK(b.max_relative_error <= 1e-4);
      }
    }
  }
}

TEST_CASE("perplexity") {
  const std::size_t v = 6;
  const LogProbFn uniform = [&](std::span<const GeoPoint> pts) {
    return Matrix(pts.size(), v, -std::log(static_cast<double>(v)));
  };
  std::vector<DialectUser> users{{{30, -90}, {{{0, 2.0}, {3, 1.0}}}},
                                 {{40, -80}, {{{5, 4.0}}}}};
  CHECK(perplexity(uniform, users) == doctest::Approx(6.0).epsilon(1e-12));

  const LogProbFn perfect = [&](std::span<const GeoPoint> pts) {
    Matrix m(pts.size(), v, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pts.size(); ++i) m(i, pts[i].lat < 35 ? 0 : 5) = 0.0;
    return m;
  };
  std::vector<DialectUser> one_word{{{30, -90}, {{{0, 1.0}}}}, {{40, -80}, {{{5, 3.0}}}}};
  CHECK(perplexity(perfect, one_word) == 1.0);
  CHECK(std::isinf(perplexity(perfect, users)));

  // Direct computation from a per-token table.
  const LogProbFn table = [&](std::span<const GeoPoint> pts) {
    Matrix m(pts.size(), v);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<double> w{1, 2, 3, 4, 5, 6};
      if (pts[i].lat > 35) std::reverse(w.begin(), w.end());
      const auto lp = log_softmax(w);
      std::copy(lp.begin(), lp.end(), m.row(i).begin());
    }
    return m;
  };
  const auto p1 = softmax(std::vector<double>{1, 2, 3, 4, 5, 6});
  const auto p2 = softmax(std::vector<double>{6, 5, 4, 3, 2, 1});
  const double want =
      std::exp(-(2 * std::log(p1[0]) + std::log(p1[3]) + 4 * std::log(p2[5])) / 7.0);
  CHECK(perplexity(table, users) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(perplexity(uniform, std::vector<DialectUser>{}), InvalidArgument);
}

TEST_CASE("dialect score") {
  const DialectRegion north{"north", {{40.0, -90.0}}, {"x"}};
  std::vector<GeoPoint> samples{{40.0, -90.0}, {40.2, -90.1}, {30.0, -90.0},
                                {31.0, -91.0}, {32.0, -89.0}};
  SUBCASE("indicator log probability gives 1 - N/P") {
    CHECK(dialect_score(box_fn(), 1, north, samples) == doctest::Approx(1.0 - 2.0 / 5.0));
  }
  SUBCASE("a location-constant word scores zero") {
    CHECK(dialect_score(box_fn(), 0, north, samples) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("shift consistency") {
    const LogProbFn base = box_fn();
    const LogProbFn shifted = [&](std::span<const GeoPoint> pts) {
      Matrix m = base(pts);
      for (auto& x : m.values()) x += 3.25;
      return m;
    };
    CHECK(dialect_score(shifted, 1, north, samples) ==
          doctest::Approx(dialect_score(base, 1, north, samples)));
  }
  SUBCASE("no sample inside the region") {
    const DialectRegion far{"far", {{-30.0, 150.0}}, {"x"}};
    CHECK_THROWS_AS(dialect_score(box_fn(), 1, far, samples), DomainError);
    const DialectRegion regions[] = {north, far};
    const auto all = score_regions(box_fn(), regions, samples);
    CHECK(all[0].in_region == 2);
    CHECK(all[1].in_region == 0);
    CHECK(all[1].scores.empty());
  }
}

TEST_CASE("ranking and recall") {
  const std::vector<std::string> terms{"w1", "w2"};
  const std::vector<double> s{0.5, -0.5};
  auto ranked = dialect_rank(s, terms);
  CHECK(ranked[0].term == "w1");
  const std::vector<std::string> tie_terms{"b", "c", "a"};
  const std::vector<double> tie{0.1, 0.1, 0.1};
  ranked = dialect_rank(tie, tie_terms);
  CHECK(ranked[0].term == "a");
  CHECK(ranked[1].term == "b");
  CHECK(ranked[2].term == "c");

  const std::vector<RankedTerm> r{{"a", 5}, {"b", 4}, {"c", 3}, {"d", 2}, {"e", 1}, {"f", 0}};
  CHECK(recall_at_k(r, std::vector<std::string>{"a", "b"}, 3).recall == 1.0);
  CHECK(recall_at_k(r, std::vector<std::string>{"e", "f"}, 3).recall == 0.0);
  const auto half = recall_at_k(r, std::vector<std::string>{"a", "c", "e", "f", "zz"}, 3);
  CHECK(half.recall == 0.5);
  CHECK(half.gold_in_vocab == 4);
  CHECK(half.out_of_vocab == std::vector<std::string>{"zz"});
  CHECK_FALSE(recall_at_k(r, std::vector<std::string>{"zz"}, 3).defined);
  CHECK_THROWS_AS(recall_at_k(r, std::vector<std::string>{"a"}, 0), InvalidArgument);
}

TEST_CASE("region membership") {
  const DialectRegion r{"r", {{40.0, -90.0}, {10.0, 10.0}}, {"t"}};
  CHECK(region_membership({40.0, -90.0}, r));
  CHECK(region_membership(north_of({40.0, -90.0}, 160.0), r));
  CHECK_FALSE(region_membership(north_of({40.0, -90.0}, 162.0), r));
  CHECK(region_membership(north_of({10.0, 10.0}, 100.0), r));
  CHECK(region_membership(north_of({40.0, -90.0}, 300.0), r, 320.0));
  CHECK_THROWS_AS(region_membership({0, 0}, DialectRegion{"e", {}, {"t"}}), ContractError);
  CHECK_THROWS_AS(region_membership({0, 0}, r, 0.0), InvalidArgument);
}

TEST_CASE("point sampling") {
  const auto pool = grid_points();
  const auto a = sample_points(pool, 10, 3);
  CHECK(a == sample_points(pool, 10, 3));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) CHECK_FALSE(a[i] == a[j]);
  }
  CHECK(sample_points(pool, 100, 3).size() == 100);
  CHECK_THROWS_AS(sample_points(std::vector<GeoPoint>{}, 1, 1), InvalidArgument);
}

TEST_CASE("region files") {
  std::istringstream in("# comment\nsouth\t30,-90;31.5,-91\ty'all,fixin\n\n");
  const auto regions = read_regions(in);
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].points.size() == 2);
  CHECK(regions[0].terms == std::vector<std::string>{"y'all", "fixin"});
  std::ostringstream out;
  write_regions(out, regions);
  std::istringstream back(out.str());
  CHECK(read_regions(back)[0].points == regions[0].points);

  std::istringstream bad("south\t30,-90\n");
  CHECK_THROWS_AS(read_regions(bad), FormatError);
  std::istringstream range("south\t95,-90\tx\n");
  CHECK_THROWS_AS(read_regions(range), FormatError);
}
