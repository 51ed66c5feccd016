// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "geomdn/config.hpp"
#include "geomdn/error.hpp"

using namespace geomdn;

namespace {

RunConfig profile(const std::string& name) {
  RunConfig c;
  c.apply_profile(name);
  return c;
}

}  // namespace

TEST_CASE("dataset hyper-parameter profiles") {
  auto c = profile("geotext-regression");
  CHECK(c.model == ModelKind::kRegression);
  CHECK(c.hidden == std::vector<std::size_t>{100, 50});
  CHECK(c.l1 == 0.0);

  c = profile("geotext-mdn");
  CHECK(c.model == ModelKind::kMdn);
  CHECK(c.hidden == std::vector<std::size_t>{100});
  CHECK(c.num_components == 100);
  CHECK(c.dropout == 0.5);

  c = profile("geotext-mdn-shared");
  CHECK(c.model == ModelKind::kMdnShared);
  CHECK(c.hidden == std::vector<std::size_t>{100});
  CHECK(c.num_components == 300);
  CHECK(c.dropout == 0.0);
  CHECK(c.l1 == 0.0);
  CHECK(c.l2 == 0.0);

  c = profile("twitterus-regression");
  CHECK(c.l1 == 1e-5);
  CHECK(c.l2 == 1e-5);

  c = profile("twitterus-mdn");
  CHECK(c.hidden == std::vector<std::size_t>{300});
  CHECK(c.num_components == 100);
  CHECK(c.l1 == 1e-5);
  CHECK(c.l2 == 1e-5);

  c = profile("twitterus-mdn-shared");
  CHECK(c.hidden == std::vector<std::size_t>{900});
  CHECK(c.num_components == 900);
  CHECK(c.l1 == 0.0);

  CHECK_THROWS_AS(profile("geotext-lstm"), InvalidArgument);
  for (const auto& name : RunConfig::profile_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(profile(name).validate());
  }
}

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.min_df == 10);
  CHECK(c.rule == SelectionRule::kStrongestPi);
  CHECK(c.adam.learning_rate == 1e-3);
  CHECK(c.patience >= 1);
}

TEST_CASE("set and get") {
  RunConfig c;
  c.set("hidden", "30, 20");
  CHECK(c.hidden == std::vector<std::size_t>{30, 20});
  CHECK(c.get("hidden") == "30,20");
  c.set("regul", "1e-4");
  CHECK(c.l1 == 1e-4);
  CHECK(c.l2 == 1e-4);
  c.set("l2", "0.5");
  CHECK(c.get("l2") == "0.5");
  c.set("rule", "max_mixture_prob");
  CHECK(c.rule == SelectionRule::kMaxMixtureProb);
  c.set("modes", "10,20;30,40");
  CHECK(c.synthetic.modes.size() == 2);
  CHECK(c.synthetic.modes[1] == GeoPoint{30, 40});
  c.set("seed", "9");
  CHECK(c.synthetic.seed == 9);
  CHECK(c.was_set("seed"));
  CHECK_FALSE(c.was_set("lr"));

  for (const auto& k : RunConfig::keys()) {
    CAPTURE(k.name);
    RunConfig d;
    const std::string v = d.get(k.name);
    if (!v.empty()) CHECK_NOTHROW(d.set(k.name, v));
    CHECK(d.get(k.name) == v);
  }

  CHECK_THROWS_AS(c.set("K", "-3"), InvalidArgument);
  CHECK_THROWS_AS(c.set("K", "three"), InvalidArgument);
  CHECK_THROWS_AS(c.set("lr", "1e-3x"), InvalidArgument);
  CHECK_THROWS_AS(c.set("model", "lstm"), InvalidArgument);
  CHECK_THROWS_AS(c.set("nonsense", "1"), InvalidArgument);
  CHECK_THROWS_AS(c.get("nonsense"), InvalidArgument);
}

TEST_CASE("config files") {
  std::istringstream in(
      "# comment\n"
      "[model]\n"
      "model = mdn_shared   # trailing comment\n"
      "K = 12\n"
      "\n"
      "[train]\n"
      "lr = 0.01\n"
      "max_epochs = 3\n"
      "[paths]\n"
      "train = data/train.tsv\n");
  RunConfig c;
  c.load(in);
  CHECK(c.model == ModelKind::kMdnShared);
  CHECK(c.num_components == 12);
  CHECK(c.adam.learning_rate == 0.01);
  CHECK(c.max_epochs == 3);
  CHECK(c.train_path == "data/train.tsv");

  std::istringstream unknown("[model]\nwidth = 3\n");
  try {
    RunConfig d;
    d.load(unknown);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream wrong_section("[train]\nK = 3\n");
  RunConfig d;
  CHECK_THROWS_AS(d.load(wrong_section), InvalidArgument);
  std::istringstream no_equals("[model]\nK 3\n");
  CHECK_THROWS_AS(d.load(no_equals), InvalidArgument);
  CHECK_THROWS_AS(d.load_file("/nonexistent/geomdn.ini"), IoError);
}

TEST_CASE("flags override the profile") {
  RunConfig c;
  c.apply_profile("geotext-mdn");
  c.set("K", "7");
  CHECK(c.num_components == 7);
  CHECK(c.hidden == std::vector<std::size_t>{100});
}

TEST_CASE("validation") {
  SUBCASE("K with regression is a warning") {
    RunConfig c;
    c.set("model", "regression");
    CHECK(c.validate().empty());
    c.set("K", "5");
    const auto w = c.validate();
    REQUIRE(w.size() == 1);
    CHECK(w[0].find("K is ignored") != std::string::npos);
  }
  SUBCASE("dialect hidden layers") {
    RunConfig c;
    c.set("model", "dialect");
    c.set("hidden", "10,10");
    CHECK(c.validate().size() == 1);
    c.set("monitor", "dev_median_km");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }
  SUBCASE("ranges") {
    RunConfig c;
    c.set("dropout", "1");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.set("patience", "0");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.set("min_df", "0");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.set("beta1", "1.5");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.set("K", "0");
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }
}

TEST_CASE("every key has a section and help text") {
  std::set<std::string> names;
  for (const auto& k : RunConfig::keys()) {
    CHECK(names.insert(k.name).second);
    const std::string section = k.section;
    CHECK((section == "model" || section == "train" || section == "paths" ||
           section == "synthetic"));
    CHECK(std::string(k.help).size() > 0);
  }
}
