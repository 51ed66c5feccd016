// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "geomdn/features.hpp"
#include "geomdn/model.hpp"

namespace geomdn {

using GaussianLayerState = SharedComponents;

struct DialectModelOptions {
  std::size_t num_components = 100;
  std::size_t hidden = 100;
  double dropout = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  std::uint64_t seed = 1;
  ConstraintTransform transform = ConstraintTransform::kSoftplusSoftsign;
  GaussianActivation activation = GaussianActivation::kDensity;
  double sigma_init_lo = 1.0;
  double sigma_init_hi = 5.0;
};

/// Location -> Gaussian layer (K) -> tanh hidden -> softmax over the
/// vocabulary. Layer means come from K-means over the training points.
Model init_dialect_model(const DialectModelOptions& options, std::size_t vocab_size,
                         std::span<const GeoPoint> train_points);

/// Per-component activations for one location.
std::vector<double> gaussian_layer_forward(const GaussianLayerState& layer, GeoPoint x,
                                           ConstraintTransform transform,
                                           GaussianActivation activation =
                                               GaussianActivation::kDensity);

/// N x K activations for a batch of locations.
Matrix gaussian_layer_forward(const GaussianLayerState& layer,
                              std::span<const GeoPoint> points,
                              ConstraintTransform transform, GaussianActivation activation);

/// Pre-softmax scores (N x V), eval mode.
Matrix dialect_logits(const Model& model, std::span<const GeoPoint> points);
/// Word distribution P(. | x).
std::vector<double> dialect_forward(const Model& model, GeoPoint x);

/// Mean cross-entropy of softmax(logits) against l1-normalized target rows.
/// All-zero target rows are skipped; negative entries throw ContractError.
/// The gradient is with respect to the logits.
LossResult dialect_loss(const Matrix& logits, const Matrix& targets);

/// Log word distributions for a batch of locations (N x V).
using LogProbFn = std::function<Matrix(std::span<const GeoPoint>)>;
LogProbFn model_log_prob_fn(const Model& model);

struct DialectUser {
  GeoPoint location;
  FeatureVector counts;  // raw in-vocabulary token counts
};

/// exp of the token-weighted mean negative log probability. Returns +inf if a
/// required probability is zero.
double perplexity(const LogProbFn& log_probs, std::span<const DialectUser> users);
double perplexity(const Model& model, std::span<const DialectUser> users);

struct DialectRegion {
  std::string name;
  std::vector<GeoPoint> points;
  std::vector<std::string> terms;
};

/// One region per line: name TAB "lat,lon;lat,lon" TAB "term,term".
std::vector<DialectRegion> read_regions(std::istream& in);
std::vector<DialectRegion> read_regions_file(const std::string& path);
void write_regions(std::ostream& out, std::span<const DialectRegion> regions);

inline constexpr double kDefaultRegionRadiusKm = 161.0;

/// True iff p lies within radius_km (haversine) of any of the region's points.
bool region_membership(GeoPoint p, const DialectRegion& region,
                       double radius_km = kDefaultRegionRadiusKm);

/// Draws P points from `pool`: without replacement when P <= |pool|,
/// otherwise with replacement.
std::vector<GeoPoint> sample_points(std::span<const GeoPoint> pool, std::size_t count,
                                    std::uint64_t seed);

struct RegionScores {
  std::string region;
  std::size_t in_region = 0;   // N; zero means the scores are undefined
  std::vector<double> scores;  // one per vocabulary entry
};

/// score(w|r) = mean log P(w|p) over sampled points inside r minus the mean
/// over all sampled points, for every word and region in one pass.
std::vector<RegionScores> score_regions(const LogProbFn& log_probs,
                                        std::span<const DialectRegion> regions,
                                        std::span<const GeoPoint> samples,
                                        double radius_km = kDefaultRegionRadiusKm);

/// Single-word score. Throws DomainError when no sample falls inside r.
double dialect_score(const LogProbFn& log_probs, std::size_t word,
                     const DialectRegion& region, std::span<const GeoPoint> samples,
                     double radius_km = kDefaultRegionRadiusKm);

struct RankedTerm {
  std::string term;
  double score = 0.0;
};

/// Descending score, ties by term.
std::vector<RankedTerm> dialect_rank(std::span<const double> scores,
                                     std::span<const std::string> terms);

struct RecallResult {
  bool defined = false;  // false when no gold term is in the vocabulary
  double recall = 0.0;
  std::size_t hits = 0;
  std::size_t gold_in_vocab = 0;
  std::vector<std::string> out_of_vocab;
};

RecallResult recall_at_k(std::span<const RankedTerm> ranked,
                         std::span<const std::string> gold, std::size_t k);

struct DialectDataset {
  std::span<const GeoPoint> points;
  std::span<const FeatureVector> targets;  // l1-normalized
};

/// Binds a dialect model to its data. Dev metric is the mean cross-entropy.
class DialectObjective : public Objective {
 public:
  DialectObjective(Model& model, DialectDataset train, DialectDataset dev);

  std::vector<ParamRef> parameters() override;
  std::size_t train_size() const override { return train_.points.size(); }
  double loss(std::span<const std::size_t> batch, Rng& rng, Gradients* grads) override;
  double dev_metric(DevMetric metric) override;

 private:
  Model& model_;
  DialectDataset train_;
  DialectDataset dev_;
};

}  // namespace geomdn
