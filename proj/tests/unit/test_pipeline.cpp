// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "geomdn/error.hpp"
#include "geomdn/geolocation.hpp"
#include "geomdn/pipeline.hpp"
#include "temp_dir.hpp"

using namespace geomdn;

namespace {

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

RunConfig small_run(const TempDir& dir, const std::string& model) {
  RunConfig c;
  c.set("model", model);
  c.set("K", "4");
  c.set("hidden", "16");
  c.set("min_df", "1");
  c.set("max_epochs", "3");
  c.set("lr", "0.01");
  c.set("regul", "0");
  c.set("dropout", "0");
  c.set("users_per_mode", "120,80");
  c.train_path = dir / "train.tsv";
  c.dev_path = dir / "dev.tsv";
  c.test_path = dir / "test.tsv";
  c.vocab_path = dir / "vocab.tsv";
  c.checkpoint_path = dir / "model.json";
  c.log_path = dir / "train.log";
  return c;
}

}  // namespace

TEST_CASE("train then evaluate on a small synthetic corpus") {
  TempDir dir("pipeline");
  RunConfig c = small_run(dir, "mdn");
  c.set("users_per_mode", "300,200");
  c.set("ambiguous_fraction", "0");
  write_synthetic(synthetic_spec_for(c, "bimodal"), dir.path().string());
  std::vector<std::string> lines;
  const auto trained = run_train(c, [&](const std::string& l) { lines.push_back(l); });
  CHECK(trained.result.log.size() == 3);
  CHECK(trained.result.best_dev_metric < trained.result.initial_dev_metric);

  const std::string log = slurp(c.log_path);
  CHECK(log.rfind("epoch\ttrain_loss\tdev_nll\n0\t\t", 0) == 0);
  CHECK(count_lines(log) == 1 + 1 + 3 + 1);
  CHECK(log.find("# best_epoch=") != std::string::npos);

  const auto summary = run_evaluate(c);
  CHECK(summary.geolocation);
  CHECK(summary.users == 50);
  const std::string text = format_evaluate_summary(summary);
  CHECK(text.rfind("Acc@161: ", 0) == 0);
  CHECK(text.find("\nMean: ") != std::string::npos);
  CHECK(text.find("\nMedian: ") != std::string::npos);
  CHECK(text.find("\nErrors: " + c.checkpoint_path + ".errors.tsv\n") != std::string::npos);
  const std::string errors = slurp(summary.errors_path);
  CHECK(errors.rfind("# rule=strongest_pi", 0) == 0);
  CHECK(count_lines(errors) == 2 + 50);

  SUBCASE("predict") {
    std::istringstream in("a\tm0w1 m0w2 amb0\nnothing known here\n\n");
    const auto inputs = read_predict_inputs(in);
    REQUIRE(inputs.size() == 3);
    CHECK(inputs[1].id == "2");
    std::ostringstream out;
    write_predictions(out, trained.model, trained.vocab, inputs, SelectionRule::kMaxMixtureProb,
                      99);
    const std::string s = out.str();
    CHECK(s.rfind("# rule=max_mixture_prob model=mdn top_k=4\n", 0) == 0);
    CHECK(s.find("\n2\tno-features\n") != std::string::npos);
    CHECK(s.find("\n3\tno-features\n") != std::string::npos);
    std::size_t rows_a = 0;
    std::istringstream rows(s);
    for (std::string line; std::getline(rows, line);) {
      if (line.rfind("a\t", 0) == 0) ++rows_a;
    }
    CHECK(rows_a == 4);
  }
  SUBCASE("heatmap") {
    HeatmapOptions h;
    h.text = "m1w3 amb2";
    h.resolution = 7;
    const auto grid = heatmap_grid(trained.model, trained.vocab, h);
    std::ostringstream out;
    write_heatmap(out, grid);
    CHECK(out.str().rfind("lat,lon,log_value\n", 0) == 0);
    CHECK(count_lines(out.str()) == 1 + 49);
    h.text = "zzz";
    CHECK_THROWS_AS(heatmap_grid(trained.model, trained.vocab, h), InvalidArgument);
  }
  SUBCASE("vocabulary mismatch is refused") {
    RunConfig other = c;
    other.vocab_path = dir / "other_vocab.tsv";
    const std::vector<std::vector<std::string>> docs{{"different", "words"}};
    Vocabulary::build(docs, 1, default_stopwords()).save_file(other.vocab_path);
    try {
      run_evaluate(other);
      FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
      CHECK(std::string(e.what()).find("vocabulary mismatch") != std::string::npos);
    }
  }
  SUBCASE("rule override") {
    RunConfig o = c;
    o.set("rule", "max_mixture_prob");
    o.errors_path = dir / "errs.tsv";
    const auto s = run_evaluate(o);
    CHECK(slurp(s.errors_path).rfind("# rule=max_mixture_prob", 0) == 0);
  }
}

TEST_CASE("a perfect stub model scores 100 / 0 / 0") {
  const std::vector<UserRecord> records{
      {"a", {40.0, -75.0}, "cheesesteak"}, {"b", {40.0, -75.0}, "jawn"}, {"c", {40.0, -75.0}, "wawa"}};
  std::vector<std::vector<std::string>> docs;
  for (const auto& r : records) docs.push_back(tokenize(r.text));
  const auto vocab = Vocabulary::build(docs, 1, {});
  NetworkSpec spec{{vocab.size(), 2, 2}, 0.0, 0.0, 0.0, 1};
  Model m;
  m.kind = ModelKind::kRegression;
  m.network = Network::from_layers(spec, {{Matrix(vocab.size(), 2), {0, 0}},
                                          {Matrix(2, 2), {40.0, -75.0}}});
  m.vocab_hash = vocab.hash();
  const auto report = evaluate_records(m, vocab, records, SelectionRule::kStrongestPi);
  CHECK(report.acc_at_161 == 100.0);
  CHECK(report.mean_km == 0.0);
  CHECK(report.median_km == 0.0);

  HeatmapOptions h;
  h.text = "jawn";
  CHECK_THROWS_AS(heatmap_grid(m, vocab, h), InvalidArgument);
  std::ostringstream out;
  const std::vector<PredictInput> in{{"u", "jawn"}};
  write_predictions(out, m, vocab, in, SelectionRule::kStrongestPi, 3);
  CHECK(out.str().find("u\t40.000000\t-75.000000\t0\t") != std::string::npos);
}

TEST_CASE("dialect pipeline") {
  TempDir dir("dialect");
  RunConfig c = small_run(dir, "dialect");
  c.set("users_per_mode", "60,60,60,60");
  c.set("max_epochs", "2");
  c.output_path = dir / "out";
  write_synthetic(synthetic_spec_for(c, "dialect"), dir.path().string());
  run_train(c);
  const auto s = run_evaluate(c);
  CHECK_FALSE(s.geolocation);
  CHECK(s.perplexity > 1.0);
  CHECK(format_evaluate_summary(s).rfind("Perplexity: ", 0) == 0);

  DialectOptions d;
  d.regions_path = dir / "regions.tsv";
  d.samples = 500;
  std::vector<std::string> log;
  const auto reports = run_dialect(c, d, [&](const std::string& l) { log.push_back(l); });
  CHECK(reports.size() == 4);
  CHECK(std::any_of(log.begin(), log.end(), [](const std::string& l) {
    return l.find("with replacement") != std::string::npos;
  }));
  const std::string recall = slurp(dir / "out/recall.tsv");
  CHECK(recall.rfind("region\tin_region\tk\trecall\thits\tgold_in_vocab\n", 0) == 0);
  CHECK(count_lines(recall) == 5);
  CHECK(slurp(dir / "out/region0.tsv").rfind("rank\tterm\tscore\n1\t", 0) == 0);

  HeatmapOptions h;
  h.word = "m0w0";
  h.resolution = 5;
  c.output_path = dir / "heat.csv";
  run_heatmap(c, h);
  CHECK(count_lines(slurp(c.output_path)) == 26);
  h.word = "m0w9x";
  try {
    run_heatmap(c, h);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("nearest: m0w") != std::string::npos);
  }
}

TEST_CASE("synthetic preset overrides") {
  RunConfig c;
  c.set("seed", "3");
  c.set("noise_tokens", "7");
  const auto spec = synthetic_spec_for(c, "dialect");
  CHECK(spec.noise_tokens == 7);
  CHECK(spec.seed == 3);
  CHECK(spec.modes.size() == 4);
  CHECK(synthetic_spec_for(RunConfig{}, "bimodal").noise_tokens == 50);
  CHECK_THROWS_AS(synthetic_spec_for(c, "trimodal"), InvalidArgument);
}

TEST_CASE("missing paths are reported") {
  RunConfig c;
  CHECK_THROWS_AS(run_train(c), InvalidArgument);
  c.checkpoint_path = "/nonexistent/x.json";
  c.vocab_path = "/nonexistent/v.tsv";
  CHECK_THROWS_AS(run_evaluate(c), IoError);
}
