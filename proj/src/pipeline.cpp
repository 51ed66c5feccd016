// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "geomdn/error.hpp"
#include "geomdn/geolocation.hpp"

namespace geomdn {

namespace {

void emit(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

std::vector<std::vector<std::string>> tokenize_all(std::span<const UserRecord> records) {
  std::vector<std::vector<std::string>> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(tokenize(r.text));
  return out;
}

std::vector<FeatureVector> vectorize_all(const std::vector<std::vector<std::string>>& docs,
                                         const Vocabulary& vocab, WeightingScheme scheme) {
  std::vector<FeatureVector> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(vectorize(d, vocab, scheme));
  return out;
}

std::vector<GeoPoint> locations_of(std::span<const UserRecord> records) {
  std::vector<GeoPoint> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.location);
  return out;
}

CorpusReadResult read_reported(const std::string& path, const char* what, const LogSink& log) {
  if (path.empty()) throw InvalidArgument(std::string("no ") + what + " corpus path given");
  auto result = read_corpus(path);
  for (const auto& d : result.diagnostics) emit(log, path + ": " + d);
  if (result.malformed > 0) {
    emit(log, path + ": skipped " + std::to_string(result.malformed) + " malformed row(s)");
  }
  return result;
}

void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidArgument(std::string("no ") + what + " path given");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path);
}

std::pair<Model, Vocabulary> load_checked(const RunConfig& config) {
  require_path(config.checkpoint_path, "checkpoint");
  require_path(config.vocab_path, "vocabulary");
  Model model = load_model(config.checkpoint_path);
  Vocabulary vocab = Vocabulary::load_file(config.vocab_path);
  check_vocab(model, vocab);
  return {std::move(model), std::move(vocab)};
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

TrainedModel train_on_records(const RunConfig& config, std::span<const UserRecord> train,
                              std::span<const UserRecord> dev, const LogSink& log) {
  for (const auto& w : config.validate()) emit(log, "warning: " + w);
  if (train.empty()) throw PipelineError("training corpus is empty");
  if (dev.empty()) throw PipelineError("development corpus is empty");

  const auto train_docs = tokenize_all(train);
  const auto dev_docs = tokenize_all(dev);
  TrainedModel out;
  out.vocab = Vocabulary::build(train_docs, config.min_df, default_stopwords());
  emit(log, "vocabulary: " + std::to_string(out.vocab.size()) + " terms from " +
                std::to_string(train.size()) + " users");

  const auto train_points = locations_of(train);
  const auto dev_points = locations_of(dev);

  TrainOptions options;
  options.adam = config.adam;
  options.early_stop.patience = config.patience;
  options.early_stop.metric = config.monitor;
  options.batch_size = config.batch_size;
  options.max_epochs = config.max_epochs;
  options.seed = config.seed;
  const auto on_epoch = [&](const EpochRecord& r) { emit(log, format_epoch_record(r)); };

  if (config.model == ModelKind::kDialect) {
    DialectModelOptions opts;
    opts.num_components = config.num_components;
    opts.hidden = config.hidden.front();
    opts.dropout = config.dropout;
    opts.l1 = config.l1;
    opts.l2 = config.l2;
    opts.seed = config.seed;
    opts.transform = config.transform;
    opts.activation = config.activation;
    out.model = init_dialect_model(opts, out.vocab.size(), train_points);
    const auto train_targets = vectorize_all(train_docs, out.vocab, WeightingScheme::kL1BinaryIdf);
    const auto dev_targets = vectorize_all(dev_docs, out.vocab, WeightingScheme::kL1BinaryIdf);
    DialectObjective objective(out.model, {train_points, train_targets},
                               {dev_points, dev_targets});
    out.result = train_loop(objective, options, on_epoch);
  } else {
    GeoModelOptions opts;
    opts.kind = config.model;
    opts.hidden = config.hidden;
    opts.head.num_components = config.num_components;
    opts.head.rule = config.rule;
    opts.head.transform = config.transform;
    opts.dropout = config.dropout;
    opts.l1 = config.l1;
    opts.l2 = config.l2;
    opts.seed = config.seed;
    opts.output_init = config.output_init;
    out.model = init_geo_model(opts, out.vocab.size(), train_points);
    const auto train_x = vectorize_all(train_docs, out.vocab, WeightingScheme::kL2Count);
    const auto dev_x = vectorize_all(dev_docs, out.vocab, WeightingScheme::kL2Count);
    GeoObjective objective(out.model, {train_x, train_points}, {dev_x, dev_points},
                           out.vocab.size());
    out.result = train_loop(objective, options, on_epoch);
  }
  out.model.vocab_hash = out.vocab.hash();
  emit(log, "best epoch " + std::to_string(out.result.best_epoch) + ", " +
                to_string(config.monitor) + " " +
                fmt("%.6g", out.result.initial_dev_metric) + " -> " +
                fmt("%.6g", out.result.best_dev_metric));
  return out;
}

std::string format_training_log(const TrainResult& result, DevMetric metric) {
  std::ostringstream os;
  os << "epoch\ttrain_loss\t" << to_string(metric) << "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "0\t\t%.17g\n", result.initial_dev_metric);
  os << buf;
  for (const auto& r : result.log) {
    std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\n", r.epoch, r.train_loss, r.dev_metric);
    os << buf;
  }
  os << "# best_epoch=" << result.best_epoch
     << " stopped_early=" << (result.stopped_early ? "true" : "false") << "\n";
  return os.str();
}

TrainedModel run_train(const RunConfig& config, const LogSink& log) {
  require_path(config.checkpoint_path, "checkpoint");
  require_path(config.vocab_path, "vocabulary");
  const auto train = read_reported(config.train_path, "training", log);
  const auto dev = read_reported(config.dev_path, "development", log);
  auto trained = train_on_records(config, train.records, dev.records, log);
  trained.vocab.save_file(config.vocab_path);
  save_model(trained.model, config.checkpoint_path);
  if (!config.log_path.empty()) {
    auto out = open_out(config.log_path);
    out << format_training_log(trained.result, config.monitor);
    close_out(out, config.log_path);
  }
  return trained;
}

std::vector<GeoPoint> predict_records(const Model& model, const Vocabulary& vocab,
                                      std::span<const UserRecord> records, SelectionRule rule) {
  if (!model.is_geolocation()) throw InvalidArgument("not a geolocation model");
  constexpr std::size_t kChunk = 512;
  const auto docs = tokenize_all(records);
  const auto x = vectorize_all(docs, vocab, WeightingScheme::kL2Count);
  std::vector<GeoPoint> out;
  out.reserve(records.size());
  for (std::size_t begin = 0; begin < x.size(); begin += kChunk) {
    const std::size_t end = std::min(x.size(), begin + kChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    for (const auto& p : predict_locations(model, densify(x, idx, vocab.size()), rule)) {
      out.push_back(p);
    }
  }
  return out;
}

EvalReport evaluate_records(const Model& model, const Vocabulary& vocab,
                            std::span<const UserRecord> records, SelectionRule rule) {
  const auto predictions = predict_records(model, vocab, records, rule);
  return evaluate(predictions, locations_of(records));
}

std::vector<DialectUser> dialect_users(const Vocabulary& vocab,
                                       std::span<const UserRecord> records) {
  std::vector<DialectUser> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.location, term_counts(tokenize(r.text), vocab)});
  return out;
}

void check_vocab(const Model& model, const Vocabulary& vocab) {
  const std::string actual = vocab.hash();
  if (model.vocab_hash != actual) {
    throw PipelineError("vocabulary mismatch: checkpoint was trained with vocabulary " +
                        model.vocab_hash + " but the vocabulary file hashes to " + actual);
  }
  const std::size_t width = model.kind == ModelKind::kDialect
                                ? model.network.layers().back().bias.size()
                                : model.network.layers().front().weights.rows();
  if (width != vocab.size()) {
    throw PipelineError("vocabulary has " + std::to_string(vocab.size()) +
                        " terms but the model expects " + std::to_string(width));
  }
}

EvaluateSummary run_evaluate(const RunConfig& config, const LogSink& log) {
  auto [model, vocab] = load_checked(config);
  const auto test = read_reported(config.test_path, "test", log);
  if (test.records.empty()) throw PipelineError("test corpus is empty");
  EvaluateSummary s;
  s.vocab_size = vocab.size();
  s.users = test.records.size();
  if (model.kind == ModelKind::kDialect) {
    s.geolocation = false;
    s.perplexity = perplexity(model, dialect_users(vocab, test.records));
    return s;
  }
  const SelectionRule rule = config.was_set("rule") ? config.rule : model.head.rule;
  const auto predictions = predict_records(model, vocab, test.records, rule);
  const auto truths = locations_of(test.records);
  s.report = evaluate(predictions, truths);
  s.errors_path =
      config.errors_path.empty() ? config.checkpoint_path + ".errors.tsv" : config.errors_path;
  std::vector<UserError> rows;
  rows.reserve(s.users);
  for (std::size_t i = 0; i < s.users; ++i) {
    rows.push_back({test.records[i].id, truths[i], predictions[i], s.report.errors_km[i]});
  }
  auto out = open_out(s.errors_path);
  out << "# rule=" << to_string(rule) << " distance=haversine_km radius=6371\n";
  write_error_tsv(out, rows);
  close_out(out, s.errors_path);
  return s;
}

std::string format_evaluate_summary(const EvaluateSummary& s) {
  std::ostringstream os;
  if (!s.geolocation) {
    os << "Perplexity: " << fmt("%.4f", s.perplexity) << " (vocabulary " << s.vocab_size
       << ", " << s.users << " users)\n";
    return os.str();
  }
  os << "Acc@161: " << fmt("%.2f", s.report.acc_at_161) << "\n";
  os << "Mean: " << fmt("%.1f", s.report.mean_km) << "\n";
  os << "Median: " << fmt("%.1f", s.report.median_km) << "\n";
  os << "Errors: " << s.errors_path << "\n";
  return os.str();
}

std::vector<PredictInput> read_predict_inputs(std::istream& in) {
  std::vector<PredictInput> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      out.push_back({std::to_string(line_no), line});
    } else {
      out.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
  }
  return out;
}

void write_predictions(std::ostream& out, const Model& model, const Vocabulary& vocab,
                       std::span<const PredictInput> inputs, SelectionRule rule,
                       std::size_t top_k) {
  if (!model.is_geolocation()) throw InvalidArgument("predict needs a geolocation model");
  const std::size_t k = model.has_mixture_output()
                            ? std::clamp<std::size_t>(top_k, 1, model.head.num_components)
                            : 0;
  out << "# rule=" << to_string(rule) << " model=" << to_string(model.kind)
      << " top_k=" << k << "\n";
  out << "user_id\tpred_lat\tpred_lon\trank\tpi\tmu1\tmu2\tsigma1\tsigma2\trho\n";
  char buf[512];
  for (const auto& input : inputs) {
    const FeatureVector x = vectorize(tokenize(input.text), vocab, WeightingScheme::kL2Count);
    if (x.empty()) {
      out << input.id << "\tno-features\n";
      continue;
    }
    const std::vector<FeatureVector> one{x};
    const Matrix dense = densify(one, vocab.size());
    const GeoPoint p = predict_locations(model, dense, rule).front();
    if (!model.has_mixture_output()) {
      std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t0\t\t\t\t\t\t\n", p.lat, p.lon);
      out << input.id << buf;
      continue;
    }
    const MixtureDensity mix = predict_mixtures(model, dense).front();
    std::vector<std::size_t> order(mix.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return mix.weights[a] > mix.weights[b];
    });
    for (std::size_t r = 0; r < k; ++r) {
      const auto& g = mix.components[order[r]];
      std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t%zu\t%.6g\t%.6f\t%.6f\t%.6g\t%.6g\t%.6g\n",
                    p.lat, p.lon, r + 1, mix.weights[order[r]], g.mu1, g.mu2, g.sigma1,
                    g.sigma2, g.rho);
      out << input.id << buf;
    }
  }
}

std::vector<DialectRegionReport> dialect_report(const Model& model, const Vocabulary& vocab,
                                                std::span<const DialectRegion> regions,
                                                std::span<const GeoPoint> pool,
                                                const DialectOptions& options,
                                                std::uint64_t seed, const LogSink& log) {
  if (model.kind != ModelKind::kDialect) throw InvalidArgument("dialect needs a dialect model");
  if (pool.empty()) throw PipelineError("no training locations to sample from");
  if (options.samples < 1) throw InvalidArgument("P must be >= 1");
  if (options.samples > pool.size()) {
    emit(log, "P=" + std::to_string(options.samples) + " exceeds the " +
                  std::to_string(pool.size()) + " training points; sampling with replacement");
  }
  const auto samples = sample_points(pool, options.samples, seed);
  const auto scores =
      score_regions(model_log_prob_fn(model), regions, samples, options.radius_km);
  std::vector<DialectRegionReport> out;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    DialectRegionReport rep;
    rep.region = regions[r].name;
    rep.in_region = scores[r].in_region;
    if (rep.in_region == 0) {
      rep.skipped = true;
      emit(log, "region " + rep.region + ": no sampled point inside; skipped");
    } else {
      rep.ranking = dialect_rank(scores[r].scores, vocab.terms());
      rep.recall = recall_at_k(rep.ranking, regions[r].terms, options.k);
      if (!rep.recall.out_of_vocab.empty()) {
        std::string oov;
        for (const auto& t : rep.recall.out_of_vocab) oov += (oov.empty() ? "" : ",") + t;
        emit(log, "region " + rep.region + ": gold terms not in vocabulary: " + oov);
      }
    }
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<DialectRegionReport> run_dialect(const RunConfig& config,
                                             const DialectOptions& options,
                                             const LogSink& log) {
  auto [model, vocab] = load_checked(config);
  require_path(options.regions_path, "regions");
  require_path(config.output_path, "output directory");
  const auto regions = read_regions_file(options.regions_path);
  const auto train = read_reported(config.train_path, "training", log);
  const auto reports = dialect_report(model, vocab, regions, locations_of(train.records),
                                      options, config.seed, log);

  namespace fs = std::filesystem;
  const fs::path dir(config.output_path);
  fs::create_directories(dir);
  char buf[128];
  for (const auto& rep : reports) {
    if (rep.skipped) continue;
    const std::string path = (dir / (rep.region + ".tsv")).string();
    auto out = open_out(path);
    out << "rank\tterm\tscore\n";
    for (std::size_t i = 0; i < rep.ranking.size(); ++i) {
      std::snprintf(buf, sizeof buf, "\t%.17g\n", rep.ranking[i].score);
      out << i + 1 << "\t" << rep.ranking[i].term << buf;
    }
    close_out(out, path);
  }
  const std::string path = (dir / "recall.tsv").string();
  auto out = open_out(path);
  out << "region\tin_region\tk\trecall\thits\tgold_in_vocab\n";
  for (const auto& rep : reports) {
    out << rep.region << "\t" << rep.in_region << "\t" << options.k << "\t";
    if (rep.skipped || !rep.recall.defined) {
      out << "NA\t\t" << rep.recall.gold_in_vocab << "\n";
    } else {
      out << fmt("%.4f", rep.recall.recall) << "\t" << rep.recall.hits << "\t"
          << rep.recall.gold_in_vocab << "\n";
    }
  }
  close_out(out, path);
  return reports;
}

DensityGrid heatmap_grid(const Model& model, const Vocabulary& vocab,
                         const HeatmapOptions& options) {
  if (!options.bbox.valid()) throw InvalidArgument("invalid bounding box");
  if (options.resolution < 2) throw InvalidArgument("resolution must be >= 2");
  if (model.kind == ModelKind::kDialect) {
    if (options.word.empty()) throw InvalidArgument("a dialect heatmap needs a word");
    const auto index = vocab.find(options.word);
    if (!index) {
      std::string near;
      for (const auto& t : nearest_terms(vocab, options.word, 5)) {
        near += (near.empty() ? "" : ", ") + t;
      }
      throw InvalidArgument("'" + options.word + "' is not in the vocabulary; nearest: " + near);
    }
    const auto log_probs = model_log_prob_fn(model);
    DensityGrid grid = make_grid(options.bbox, options.resolution, [](GeoPoint) { return 0.0; });
    std::vector<GeoPoint> centers;
    centers.reserve(grid.values.size());
    for (std::size_t i = 0; i < options.resolution; ++i) {
      for (std::size_t j = 0; j < options.resolution; ++j) {
        centers.push_back(grid.cell_center(i, j));
      }
    }
    const Matrix lp = log_probs(centers);
    for (std::size_t c = 0; c < centers.size(); ++c) grid.values[c] = lp(c, *index);
    return grid;
  }
  if (!model.has_mixture_output()) {
    throw InvalidArgument("regression models have no predictive density");
  }
  const std::string& text = options.text.empty() ? options.word : options.text;
  const FeatureVector x = vectorize(tokenize(text), vocab, WeightingScheme::kL2Count);
  if (x.empty()) {
    const auto tokens = tokenize(text);
    std::string near;
    if (!tokens.empty()) {
      for (const auto& t : nearest_terms(vocab, tokens.front(), 5)) {
        near += (near.empty() ? "" : ", ") + t;
      }
    }
    throw InvalidArgument("no input token is in the vocabulary" +
                          (near.empty() ? std::string() : "; nearest: " + near));
  }
  const std::vector<FeatureVector> one{x};
  const auto mix = predict_mixtures(model, densify(one, vocab.size())).front();
  return predictive_density_grid(mix, options.bbox, options.resolution);
}

void write_heatmap(std::ostream& out, const DensityGrid& grid) {
  out << "lat,lon,log_value\n";
  char buf[128];
  for (std::size_t i = 0; i < grid.resolution; ++i) {
    for (std::size_t j = 0; j < grid.resolution; ++j) {
      const GeoPoint c = grid.cell_center(i, j);
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.10g\n", c.lat, c.lon, grid.at(i, j));
      out << buf;
    }
  }
}

DensityGrid run_heatmap(const RunConfig& config, const HeatmapOptions& options) {
  auto [model, vocab] = load_checked(config);
  require_path(config.output_path, "output");
  DensityGrid grid = heatmap_grid(model, vocab, options);
  auto out = open_out(config.output_path);
  write_heatmap(out, grid);
  close_out(out, config.output_path);
  return grid;
}

SyntheticSpec synthetic_spec_for(const RunConfig& config, const std::string& preset) {
  SyntheticSpec spec;
  if (preset == "bimodal") {
    spec = bimodal_synthetic_spec(config.seed);
  } else if (preset == "dialect") {
    spec = dialect_synthetic_spec(config.seed);
  } else {
    throw InvalidArgument("unknown synthetic preset '" + preset + "' (bimodal, dialect)");
  }
  const auto& s = config.synthetic;
  if (config.was_set("modes")) spec.modes = s.modes;
  if (config.was_set("mode_stddev")) spec.mode_stddev = s.mode_stddev;
  if (config.was_set("users_per_mode")) spec.users_per_mode = s.users_per_mode;
  if (config.was_set("tokens_per_user")) spec.tokens_per_user = s.tokens_per_user;
  if (config.was_set("exclusive_per_mode")) spec.exclusive_per_mode = s.exclusive_per_mode;
  if (config.was_set("ambiguous_tokens")) spec.ambiguous_tokens = s.ambiguous_tokens;
  if (config.was_set("noise_tokens")) spec.noise_tokens = s.noise_tokens;
  if (config.was_set("ambiguous_fraction")) spec.ambiguous_fraction = s.ambiguous_fraction;
  if (config.was_set("exclusive_share")) spec.exclusive_share = s.exclusive_share;
  if (config.was_set("ambiguous_share")) spec.ambiguous_share = s.ambiguous_share;
  spec.validate();
  return spec;
}

SyntheticCorpus write_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  SyntheticCorpus corpus = generate_synthetic(spec);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_corpus((dir / "train.tsv").string(), records_of(corpus.train));
  write_corpus((dir / "dev.tsv").string(), records_of(corpus.dev));
  write_corpus((dir / "test.tsv").string(), records_of(corpus.test));
  write_corpus((dir / "test_ambiguous.tsv").string(), ambiguous_records_of(corpus.test));
  const std::string regions = (dir / "regions.tsv").string();
  auto out = open_out(regions);
  write_regions(out, corpus.regions);
  close_out(out, regions);
  return corpus;
}

}  // namespace geomdn
