// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "geomdn/data_io.hpp"
#include "geomdn/error.hpp"
#include "geomdn/geo_eval.hpp"
#include "geomdn/geolocation.hpp"

using namespace geomdn;

namespace {

CorpusReadResult read_string(const std::string& s) {
  std::istringstream in(s);
  return read_corpus(in);
}

std::string corpus_bytes(const std::vector<SyntheticUser>& users) {
  std::ostringstream out;
  write_corpus(out, records_of(users));
  return out.str();
}

Model small_model(ModelKind kind) {
  const std::vector<GeoPoint> labels{{30, -90}, {32, -94}, {34, -92}, {36, -96}, {31, -99}};
  if (kind == ModelKind::kDialect) {
    DialectModelOptions opt;
    opt.num_components = 3;
    opt.hidden = 4;
    return init_dialect_model(opt, 6, labels);
  }
  GeoModelOptions opt;
  opt.kind = kind;
  opt.hidden = {4, 3};
  opt.head.num_components = 3;
  opt.head.rule = SelectionRule::kMaxMixtureProb;
  auto m = init_geo_model(opt, 6, labels);
  m.vocab_hash = "0123456789abcdef";
  return m;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("read_corpus") {
  SUBCASE("well-formed rows") {
    const auto r = read_string("u1\t40.7\t-74.0\thello world\nu2\t34.0\t-118.2\t\n"
                               "u3\t-33.9\t151.2\tg'day mate\n");
    CHECK(r.records.size() == 3);
    CHECK(r.malformed == 0);
    CHECK(r.records[2].text == "g'day mate");
    CHECK(r.records[1].text.empty());
  }
  SUBCASE("out-of-range latitude is skipped and reported") {
    std::string s;
    for (int i = 0; i < 10; ++i) s += "u" + std::to_string(i) + "\t10\t10\tx\n";
    s += "bad\t91.0\t10\tx\n";
    const auto r = read_string(s);
    CHECK(r.records.size() == 10);
    CHECK(r.malformed == 1);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].find("line 11") != std::string::npos);
  }
  SUBCASE("empty input") {
    const auto r = read_string("");
    CHECK(r.records.empty());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].find("empty") != std::string::npos);
  }
  SUBCASE("too many malformed rows") {
    CHECK_THROWS_AS(read_string("u1\t1\t1\tok\nu2\tx\t1\tno\n"), FormatError);
    CHECK_THROWS_AS(read_string("u1\t1\t1\tok\nonly two\tfields\n"), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_corpus(std::string("/nonexistent/corpus.tsv")), IoError);
  }
}

TEST_CASE("write then read is the identity") {
  const std::vector<UserRecord> records{{"a", {0.1 + 0.2, -1.0 / 3.0}, "text with  spaces"},
                                        {"b", {89.999999999999, 179.5}, ""},
                                        {"c", {-45.123456789012345, 0.0}, "#tag @who"}};
  std::ostringstream out;
  write_corpus(out, records);
  CHECK(read_string(out.str()).records == records);
}

TEST_CASE("synthetic generation") {
  const auto spec = bimodal_synthetic_spec(4);
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(corpus_bytes(a.train) == corpus_bytes(b.train));
  CHECK(corpus_bytes(a.test) == corpus_bytes(b.test));
  CHECK(corpus_bytes(a.train) != corpus_bytes(generate_synthetic(bimodal_synthetic_spec(5)).train));

  const std::size_t total = a.train.size() + a.dev.size() + a.test.size();
  CHECK(total == 2000);
  CHECK(a.train.size() == 1600);
  CHECK(a.test.size() == 200);
  CHECK(haversine_km(spec.modes[0], spec.modes[1]) == doctest::Approx(2224).epsilon(1e-2));

  // Ambiguous-only users never see their mode's exclusive tokens, and their
  // mode center is ten degrees from the midpoint.
  const GeoPoint mid{(spec.modes[0].lat + spec.modes[1].lat) / 2, spec.modes[0].lon};
  std::size_t ambiguous = 0;
  for (const auto& u : a.test) {
    if (!u.ambiguous_only) continue;
    ++ambiguous;
    CHECK(u.record.text.find("m" + std::to_string(u.mode) + "w") == std::string::npos);
    CHECK(std::abs(spec.modes[u.mode].lat - mid.lat) == doctest::Approx(10.0));
  }
  CHECK(ambiguous > 0);
  CHECK(ambiguous_records_of(a.test).size() == ambiguous);
  CHECK(a.regions.size() == 2);
  CHECK(a.regions[0].terms.size() == spec.exclusive_per_mode);
}

TEST_CASE("noise-only corpus carries no exclusive tokens") {
  auto spec = bimodal_synthetic_spec(1);
  spec.exclusive_share = 0.0;
  spec.ambiguous_share = 0.0;
  spec.ambiguous_fraction = 0.0;
  const auto c = generate_synthetic(spec);
  for (const auto& u : c.train) {
    CHECK(u.record.text.find("m0w") == std::string::npos);
    CHECK(u.record.text.find("amb") == std::string::npos);
  }
}

TEST_CASE("synthetic spec validation") {
  auto spec = bimodal_synthetic_spec(1);
  spec.modes.pop_back();
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = bimodal_synthetic_spec(1);
  spec.exclusive_share = 0.9;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = bimodal_synthetic_spec(1);
  spec.ambiguous_tokens = 0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("checkpoint round trip is bitwise") {
  for (auto kind : {ModelKind::kRegression, ModelKind::kMdn, ModelKind::kMdnShared,
                    ModelKind::kDialect}) {
    CAPTURE(to_string(kind));
    const Model m = small_model(kind);
    const std::string text = serialize_model(m);
    const Model back = parse_model(text);
    CHECK(serialize_model(back) == text);
    CHECK(back.kind == m.kind);
    CHECK(back.head.num_components == m.head.num_components);
    CHECK(back.head.rule == m.head.rule);
    for (std::size_t l = 0; l < m.network.layers().size(); ++l) {
      const auto& a = m.network.layers()[l].weights.values();
      const auto& b = back.network.layers()[l].weights.values();
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(bitwise_equal(a[i], b[i]));
    }
    for (std::size_t i = 0; i < m.components.mu.size(); ++i) {
      CHECK(bitwise_equal(m.components.mu[i], back.components.mu[i]));
    }
    if (kind == ModelKind::kDialect) {
      const std::vector<GeoPoint> pts{{33.3, -93.3}, {1.0, 2.0}};
      const auto pa = dialect_logits(m, pts), pb = dialect_logits(back, pts);
      for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(bitwise_equal(pa.values()[i], pb.values()[i]));
      }
    } else {
      Matrix x(3, 6);
      for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] = 0.1 * static_cast<double>(i % 5);
      const auto pa = predict_locations(m, x, m.head.rule);
      const auto pb = predict_locations(back, x, back.head.rule);
      for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(bitwise_equal(pa[i].lat, pb[i].lat));
        CHECK(bitwise_equal(pa[i].lon, pb[i].lon));
      }
    }
  }
}

TEST_CASE("damaged checkpoints are refused") {
  const std::string text = serialize_model(small_model(ModelKind::kMdn));
  SUBCASE("truncated") {
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, text.size() / 2, text.size() - 2}) {
      CHECK_THROWS_AS(parse_model(text.substr(0, cut)), FormatError);
    }
  }
  SUBCASE("different K") {
    try {
      parse_model(text, 5);
      FAIL("expected a FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("K=3") != std::string::npos);
      CHECK(msg.find("K=5") != std::string::npos);
    }
    CHECK_NOTHROW(parse_model(text, 3));
  }
  SUBCASE("wrong layout tag") {
    std::string bad = text;
    const auto pos = bad.find("mu1,mu2,sigma1,sigma2,rho,pi");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 3, "pi_");
    CHECK_THROWS_AS(parse_model(bad), FormatError);
  }
  SUBCASE("not json") { CHECK_THROWS_AS(parse_model("hello"), FormatError); }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
  }
}
