// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geomdn/config.hpp"
#include "geomdn/data_io.hpp"
#include "geomdn/dialect_models.hpp"
#include "geomdn/features.hpp"
#include "geomdn/geo_eval.hpp"
#include "geomdn/model.hpp"

namespace geomdn {

/// Receives diagnostics and progress lines (no trailing newline).
using LogSink = std::function<void(const std::string&)>;

struct TrainedModel {
  Model model;
  Vocabulary vocab;
  TrainResult result;
};

/// Builds the vocabulary from `train`, vectorizes, initializes and trains the
/// model described by `config`. No files are touched.
TrainedModel train_on_records(const RunConfig& config, std::span<const UserRecord> train,
                              std::span<const UserRecord> dev, const LogSink& log = {});

/// Training log file body: a header line, then epoch, train loss and dev metric.
std::string format_training_log(const TrainResult& result, DevMetric metric);

/// Reads config.train_path/dev_path, trains, then writes config.vocab_path,
/// config.checkpoint_path and (if set) config.log_path.
TrainedModel run_train(const RunConfig& config, const LogSink& log = {});

/// Predictions for every record under `rule`; geolocation models only.
std::vector<GeoPoint> predict_records(const Model& model, const Vocabulary& vocab,
                                      std::span<const UserRecord> records, SelectionRule rule);
EvalReport evaluate_records(const Model& model, const Vocabulary& vocab,
                            std::span<const UserRecord> records, SelectionRule rule);

/// Users' in-vocabulary token counts, for perplexity.
std::vector<DialectUser> dialect_users(const Vocabulary& vocab,
                                       std::span<const UserRecord> records);

struct EvaluateSummary {
  bool geolocation = true;
  EvalReport report;          // geolocation models
  double perplexity = 0.0;    // dialect models
  std::size_t vocab_size = 0;
  std::size_t users = 0;
  std::string errors_path;    // empty when no TSV was written
};

/// Refuses a checkpoint whose vocabulary hash differs from the vocabulary file.
void check_vocab(const Model& model, const Vocabulary& vocab);

/// Loads config.checkpoint_path and config.vocab_path, scores
/// config.test_path. Geolocation models also write the per-user error TSV to
/// config.errors_path (default: checkpoint path + ".errors.tsv").
EvaluateSummary run_evaluate(const RunConfig& config, const LogSink& log = {});
/// The three labeled lines plus the TSV path, or the perplexity line.
std::string format_evaluate_summary(const EvaluateSummary& summary);

struct PredictInput {
  std::string id;
  std::string text;
};

/// One input per line: "id TAB text", or bare text (id = line number).
std::vector<PredictInput> read_predict_inputs(std::istream& in);

/// TSV with a "# rule=..." header. One row per (user, component rank) for
/// mixture models, one row per user for regression; users without any
/// in-vocabulary token get a single "no-features" row. top_k is clamped to K.
void write_predictions(std::ostream& out, const Model& model, const Vocabulary& vocab,
                       std::span<const PredictInput> inputs, SelectionRule rule,
                       std::size_t top_k);

struct DialectRegionReport {
  std::string region;
  std::size_t in_region = 0;
  bool skipped = false;
  std::vector<RankedTerm> ranking;
  RecallResult recall;
};

struct DialectOptions {
  std::string regions_path;
  std::size_t samples = 10000;
  std::size_t k = 10;
  double radius_km = kDefaultRegionRadiusKm;
};

/// Scores every vocabulary term in every region from samples drawn out of an
/// explicit point pool.
std::vector<DialectRegionReport> dialect_report(const Model& model, const Vocabulary& vocab,
                                                std::span<const DialectRegion> regions,
                                                std::span<const GeoPoint> pool,
                                                const DialectOptions& options,
                                                std::uint64_t seed, const LogSink& log = {});

/// Samples from config.train_path's locations, writes one "<region>.tsv"
/// ranking per region and "recall.tsv" into config.output_path.
std::vector<DialectRegionReport> run_dialect(const RunConfig& config,
                                             const DialectOptions& options,
                                             const LogSink& log = {});

struct HeatmapOptions {
  std::string word;   // dialect models
  std::string text;   // geolocation models
  BoundingBox bbox{24.0, 50.0, -125.0, -66.0};
  std::size_t resolution = 100;
};

DensityGrid heatmap_grid(const Model& model, const Vocabulary& vocab,
                         const HeatmapOptions& options);
/// CSV with header "lat,lon,log_value" and resolution^2 rows.
void write_heatmap(std::ostream& out, const DensityGrid& grid);
/// Writes the grid to config.output_path.
DensityGrid run_heatmap(const RunConfig& config, const HeatmapOptions& options);

/// The named preset ("bimodal" or "dialect") seeded with config.seed, with
/// every synthetic key set explicitly in `config` applied on top.
SyntheticSpec synthetic_spec_for(const RunConfig& config, const std::string& preset);

/// Writes train.tsv, dev.tsv, test.tsv, test_ambiguous.tsv and regions.tsv
/// into `out_dir` (created if missing).
SyntheticCorpus write_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace geomdn
