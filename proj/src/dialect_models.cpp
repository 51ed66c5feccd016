// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/dialect_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "geomdn/error.hpp"
#include "geomdn/geo_eval.hpp"
#include "geomdn/geolocation.hpp"

namespace geomdn {

namespace {

constexpr std::size_t kEvalChunk = 512;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Model init_dialect_model(const DialectModelOptions& options, std::size_t vocab_size,
                         std::span<const GeoPoint> train_points) {
  if (options.num_components < 1) throw InvalidArgument("K must be >= 1");
  if (vocab_size < 1) throw InvalidArgument("dialect model needs a non-empty vocabulary");
  NetworkSpec spec;
  spec.layer_sizes = {options.num_components, options.hidden, vocab_size};
  spec.dropout_rate = options.dropout;
  spec.l1 = options.l1;
  spec.l2 = options.l2;
  spec.seed = options.seed;

  Model model;
  model.kind = ModelKind::kDialect;
  model.head.num_components = options.num_components;
  model.head.transform = options.transform;
  model.activation = options.activation;
  model.network = Network::initialize(spec);
  model.components = init_shared(train_points, options.num_components, options.seed,
                                 options.sigma_init_lo, options.sigma_init_hi,
                                 options.transform);
  return model;
}

std::vector<double> gaussian_layer_forward(const GaussianLayerState& layer, GeoPoint x,
                                           ConstraintTransform transform,
                                           GaussianActivation activation) {
  std::vector<double> out(layer.size());
  for (std::size_t k = 0; k < layer.size(); ++k) {
    const double lp = log_pdf(layer.component(k, transform), x);
    out[k] = activation == GaussianActivation::kDensity ? std::exp(lp) : lp;
  }
  return out;
}

Matrix gaussian_layer_forward(const GaussianLayerState& layer,
                              std::span<const GeoPoint> points,
                              ConstraintTransform transform, GaussianActivation activation) {
  Matrix out(points.size(), layer.size());
  const auto comps = layer.components(transform);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const double lp = log_pdf(comps[k], points[i]);
      out(i, k) = activation == GaussianActivation::kDensity ? std::exp(lp) : lp;
    }
  }
  return out;
}

Matrix dialect_logits(const Model& model, std::span<const GeoPoint> points) {
  if (model.kind != ModelKind::kDialect) throw ContractError("not a dialect model");
  const Matrix act = gaussian_layer_forward(model.components, points,
                                            model.head.transform, model.activation);
  return forward(model.network, act, false, nullptr).output;
}

std::vector<double> dialect_forward(const Model& model, GeoPoint x) {
  const Matrix logits = dialect_logits(model, std::span<const GeoPoint>(&x, 1));
  return softmax(logits.row(0));
}

LossResult dialect_loss(const Matrix& logits, const Matrix& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw ContractError("dialect loss: logits and targets differ in shape");
  }
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    double sum = 0.0;
    for (double t : targets.row(i)) {
      if (t < 0.0) throw ContractError("dialect target rows must be non-negative");
      sum += t;
    }
    if (sum == 0.0) continue;
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ContractError("dialect target rows must be l1-normalized");
    }
    active.push_back(i);
  }
  LossResult result{0.0, Matrix(logits.rows(), logits.cols())};
  if (active.empty()) return result;
  const double inv_n = 1.0 / static_cast<double>(active.size());
  for (std::size_t i : active) {
    const auto logp = log_softmax(logits.row(i));
    const auto t = targets.row(i);
    auto g = result.grad.row(i);
    double ce = 0.0;
    for (std::size_t v = 0; v < logp.size(); ++v) {
      if (t[v] != 0.0) ce -= t[v] * logp[v];
      g[v] = (std::exp(logp[v]) - t[v]) * inv_n;
    }
    result.loss += ce * inv_n;
  }
  return result;
}

LogProbFn model_log_prob_fn(const Model& model) {
  return [&model](std::span<const GeoPoint> points) {
    Matrix logits = dialect_logits(model, points);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      const auto lp = log_softmax(logits.row(i));
      std::copy(lp.begin(), lp.end(), logits.row(i).begin());
    }
    return logits;
  };
}

double perplexity(const LogProbFn& log_probs, std::span<const DialectUser> users) {
  if (users.empty()) throw InvalidArgument("perplexity needs at least one user");
  double total_log = 0.0;
  double total_tokens = 0.0;
  for (std::size_t begin = 0; begin < users.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(users.size(), begin + kEvalChunk);
    std::vector<GeoPoint> points;
    for (std::size_t u = begin; u < end; ++u) points.push_back(users[u].location);
    const Matrix lp = log_probs(points);
    for (std::size_t u = begin; u < end; ++u) {
      for (const auto& [v, count] : users[u].counts.entries) {
        const double l = lp(u - begin, v);
        if (l == -std::numeric_limits<double>::infinity()) {
          return std::numeric_limits<double>::infinity();
        }
        total_log += count * l;
        total_tokens += count;
      }
    }
  }
  if (total_tokens == 0.0) {
    throw InvalidArgument("perplexity: evaluation users have no in-vocabulary tokens");
  }
  return std::exp(-total_log / total_tokens);
}

double perplexity(const Model& model, std::span<const DialectUser> users) {
  return perplexity(model_log_prob_fn(model), users);
}

std::vector<DialectRegion> read_regions(std::istream& in) {
  std::vector<DialectRegion> regions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw FormatError("region file line " + std::to_string(line_no) +
                        ": expected name, points and terms separated by tabs");
    }
    DialectRegion r;
    r.name = trim(fields[0]);
    for (const auto& p : split(fields[1], ';')) {
      if (trim(p).empty()) continue;
      const auto ll = split(p, ',');
      try {
        if (ll.size() != 2) throw std::invalid_argument("point");
        r.points.push_back({std::stod(ll[0]), std::stod(ll[1])});
      } catch (const std::logic_error&) {
        throw FormatError("region file line " + std::to_string(line_no) +
                          ": malformed point '" + p + "'");
      }
      if (!is_valid(r.points.back())) {
        throw FormatError("region file line " + std::to_string(line_no) +
                          ": point out of range '" + p + "'");
      }
    }
    for (const auto& t : split(fields[2], ',')) {
      if (!trim(t).empty()) r.terms.push_back(trim(t));
    }
    if (r.name.empty() || r.points.empty() || r.terms.empty()) {
      throw FormatError("region file line " + std::to_string(line_no) +
                        ": region needs a name, points and terms");
    }
    regions.push_back(std::move(r));
  }
  return regions;
}

std::vector<DialectRegion> read_regions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open region file " + path);
  return read_regions(in);
}

void write_regions(std::ostream& out, std::span<const DialectRegion> regions) {
  out.precision(17);
  for (const auto& r : regions) {
    out << r.name << '\t';
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      out << (i ? ";" : "") << r.points[i].lat << ',' << r.points[i].lon;
    }
    out << '\t';
    for (std::size_t i = 0; i < r.terms.size(); ++i) out << (i ? "," : "") << r.terms[i];
    out << '\n';
  }
}

bool region_membership(GeoPoint p, const DialectRegion& region, double radius_km) {
  if (region.points.empty()) throw ContractError("region '" + region.name + "' has no points");
  if (!(radius_km > 0.0)) throw InvalidArgument("region radius must be positive");
  return std::any_of(region.points.begin(), region.points.end(),
                     [&](GeoPoint c) { return haversine_km(p, c) <= radius_km; });
}

std::vector<GeoPoint> sample_points(std::span<const GeoPoint> pool, std::size_t count,
                                    std::uint64_t seed) {
  if (pool.empty()) throw InvalidArgument("cannot sample from an empty point set");
  Rng rng(seed);
  std::vector<GeoPoint> out;
  out.reserve(count);
  if (count > pool.size()) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(pool[rng.below(pool.size())]);
    return out;
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    out.push_back(pool[idx[i]]);
  }
  return out;
}

std::vector<RegionScores> score_regions(const LogProbFn& log_probs,
                                        std::span<const DialectRegion> regions,
                                        std::span<const GeoPoint> samples, double radius_km) {
  if (samples.empty()) throw InvalidArgument("dialect scoring needs sampled points");
  std::vector<std::vector<double>> region_sums(regions.size());
  std::vector<RegionScores> out(regions.size());
  std::vector<double> global;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
    const Matrix lp = log_probs(samples.subspan(begin, end - begin));
    if (global.empty()) {
      global.assign(lp.cols(), 0.0);
      for (auto& s : region_sums) s.assign(lp.cols(), 0.0);
    }
    for (std::size_t i = 0; i < lp.rows(); ++i) {
      const auto row = lp.row(i);
      for (std::size_t v = 0; v < row.size(); ++v) global[v] += row[v];
      for (std::size_t r = 0; r < regions.size(); ++r) {
        if (!region_membership(samples[begin + i], regions[r], radius_km)) continue;
        ++out[r].in_region;
        for (std::size_t v = 0; v < row.size(); ++v) region_sums[r][v] += row[v];
      }
    }
  }
  const double p = static_cast<double>(samples.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    out[r].region = regions[r].name;
    if (out[r].in_region == 0) continue;
    const double n = static_cast<double>(out[r].in_region);
    out[r].scores.resize(global.size());
    for (std::size_t v = 0; v < global.size(); ++v) {
      out[r].scores[v] = region_sums[r][v] / n - global[v] / p;
    }
  }
  return out;
}

double dialect_score(const LogProbFn& log_probs, std::size_t word,
                     const DialectRegion& region, std::span<const GeoPoint> samples,
                     double radius_km) {
  const auto scores =
      score_regions(log_probs, std::span<const DialectRegion>(&region, 1), samples, radius_km);
  if (scores[0].in_region == 0) {
    throw DomainError("no sampled point falls inside region '" + region.name + "'");
  }
  if (word >= scores[0].scores.size()) throw InvalidArgument("word index out of range");
  return scores[0].scores[word];
}

std::vector<RankedTerm> dialect_rank(std::span<const double> scores,
                                     std::span<const std::string> terms) {
  if (scores.size() != terms.size()) throw ContractError("score and term counts differ");
  std::vector<RankedTerm> ranked;
  ranked.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) ranked.push_back({terms[i], scores[i]});
  std::sort(ranked.begin(), ranked.end(), [](const RankedTerm& a, const RankedTerm& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
  return ranked;
}

RecallResult recall_at_k(std::span<const RankedTerm> ranked,
                         std::span<const std::string> gold, std::size_t k) {
  if (k < 1) throw InvalidArgument("recall@k needs k >= 1");
  std::unordered_set<std::string> vocab;
  for (const auto& r : ranked) vocab.insert(r.term);
  std::unordered_set<std::string> top;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) top.insert(ranked[i].term);

  RecallResult result;
  std::unordered_set<std::string> seen;
  for (const auto& g : gold) {
    if (!seen.insert(g).second) continue;
    if (!vocab.contains(g)) {
      result.out_of_vocab.push_back(g);
      continue;
    }
    ++result.gold_in_vocab;
    if (top.contains(g)) ++result.hits;
  }
  result.defined = result.gold_in_vocab > 0;
  if (result.defined) {
    result.recall =
        static_cast<double>(result.hits) / static_cast<double>(result.gold_in_vocab);
  }
  return result;
}

DialectObjective::DialectObjective(Model& model, DialectDataset train, DialectDataset dev)
    : model_(model), train_(train), dev_(dev) {
  if (model.kind != ModelKind::kDialect) throw ContractError("not a dialect model");
  if (train.points.size() != train.targets.size() ||
      dev.points.size() != dev.targets.size()) {
    throw ContractError("point and target counts differ");
  }
}

std::vector<ParamRef> DialectObjective::parameters() {
  auto params = model_.components.parameters("gaussian");
  for (auto& p : model_.network.parameters()) params.push_back(std::move(p));
  return params;
}

double DialectObjective::loss(std::span<const std::size_t> batch, Rng& rng,
                              Gradients* grads) {
  const std::size_t K = model_.components.size();
  const std::size_t V = model_.network.spec().output_size();
  const auto comps = model_.components.components(model_.head.transform);
  const bool density = model_.activation == GaussianActivation::kDensity;

  Matrix act(batch.size(), K);
  std::vector<GaussianGrad> dlog(batch.size() * K);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const GeoPoint x = train_.points[batch[r]];
    for (std::size_t k = 0; k < K; ++k) {
      const double lp = log_pdf(comps[k], x, dlog[r * K + k]);
      act(r, k) = density ? std::exp(lp) : lp;
    }
  }
  const Matrix targets = densify(train_.targets, batch, V);
  const auto cache = forward(model_.network, act, true, &rng);
  const auto head = dialect_loss(cache.output, targets);
  const double loss = head.loss + regularization_penalty(model_.network);
  if (grads == nullptr) return loss;

  const auto net_grads = backward(model_.network, cache, head.grad);
  SharedGradients g{std::vector<double>(2 * K, 0.0), std::vector<double>(2 * K, 0.0),
                    std::vector<double>(K, 0.0)};
  const auto t = model_.head.transform;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    for (std::size_t k = 0; k < K; ++k) {
      const double upstream = net_grads.input(r, k) * (density ? act(r, k) : 1.0);
      if (upstream == 0.0) continue;
      const auto& d = dlog[r * K + k];
      g.mu[2 * k] += upstream * d.mu1;
      g.mu[2 * k + 1] += upstream * d.mu2;
      g.raw_sigma[2 * k] +=
          upstream * d.sigma1 * sigma_from_raw_grad(model_.components.raw_sigma[2 * k], t);
      g.raw_sigma[2 * k + 1] += upstream * d.sigma2 *
                                sigma_from_raw_grad(model_.components.raw_sigma[2 * k + 1], t);
      g.raw_rho[k] += upstream * d.rho * rho_from_raw_grad(model_.components.raw_rho[k], t);
    }
  }
  grads->clear();
  grads->push_back(std::move(g.mu));
  grads->push_back(std::move(g.raw_sigma));
  grads->push_back(std::move(g.raw_rho));
  append_gradients(*grads, net_grads);
  return loss;
}

double DialectObjective::dev_metric(DevMetric metric) {
  if (metric != DevMetric::kDevLoss) {
    throw InvalidArgument("dialect models only support the dev_nll metric");
  }
  const std::size_t n = dev_.points.size();
  if (n == 0) throw InvalidArgument("development set is empty");
  const std::size_t V = model_.network.spec().output_size();
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
    const std::size_t end = std::min(n, begin + kEvalChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Matrix targets = densify(dev_.targets, idx, V);
    std::size_t active = 0;
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      for (double v : targets.row(i)) {
        if (v != 0.0) {
          ++active;
          break;
        }
      }
    }
    if (active == 0) continue;
    const Matrix logits = dialect_logits(model_, dev_.points.subspan(begin, end - begin));
    total += dialect_loss(logits, targets).loss * static_cast<double>(active);
    counted += active;
  }
  if (counted == 0) throw InvalidArgument("development set has no non-empty targets");
  return total / static_cast<double>(counted);
}

}  // namespace geomdn
