// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "geomdn/error.hpp"
#include "geomdn/random.hpp"

namespace geomdn {

using nlohmann::json;

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::logic_error&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace

CorpusReadResult read_corpus(std::istream& in) {
  CorpusReadResult result;
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rows;
    auto reject = [&](const std::string& why) {
      ++result.malformed;
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    const auto t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
    if (t3 == std::string::npos) {
      reject("expected 4 tab-separated fields");
      continue;
    }
    UserRecord r;
    r.id = line.substr(0, t1);
    double lat = 0.0, lon = 0.0;
    if (r.id.empty()) {
      reject("empty user id");
      continue;
    }
    if (!parse_double(line.substr(t1 + 1, t2 - t1 - 1), lat) ||
        !parse_double(line.substr(t2 + 1, t3 - t2 - 1), lon)) {
      reject("unparseable coordinates");
      continue;
    }
    r.location = {lat, lon};
    if (!is_valid(r.location)) {
      reject("coordinates out of range");
      continue;
    }
    r.text = line.substr(t3 + 1);
    result.records.push_back(std::move(r));
  }
  if (rows == 0) result.diagnostics.push_back("warning: corpus is empty");
  if (rows > 0 && result.malformed * 10 > rows) {
    std::ostringstream os;
    os << result.malformed << " of " << rows << " corpus rows are malformed (over 10%)";
    if (!result.diagnostics.empty()) os << "; first: " << result.diagnostics.front();
    throw FormatError(os.str());
  }
  return result;
}

CorpusReadResult read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const UserRecord> records) {
  char buf[96];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t", r.location.lat, r.location.lon);
    out << r.id << buf << r.text << '\n';
  }
}

void write_corpus(const std::string& path, std::span<const UserRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file " + path);
  write_corpus(out, records);
  if (!out) throw IoError("failed writing corpus file " + path);
}

void SyntheticSpec::validate() const {
  if (modes.size() < 2) throw InvalidArgument("synthetic corpus needs at least 2 modes");
  if (users_per_mode.size() != modes.size()) {
    throw InvalidArgument("users_per_mode needs one count per mode");
  }
  for (const auto& m : modes) {
    if (!is_valid(m)) throw InvalidArgument("synthetic mode center out of range");
  }
  if (!(mode_stddev > 0.0)) throw InvalidArgument("mode stddev must be positive");
  if (tokens_per_user == 0) throw InvalidArgument("tokens_per_user must be >= 1");
  if (!(ambiguous_fraction >= 0.0 && ambiguous_fraction <= 1.0)) {
    throw InvalidArgument("ambiguous_fraction must lie in [0, 1]");
  }
  if (ambiguous_fraction > 0.0 && ambiguous_tokens == 0) {
    throw InvalidArgument("ambiguous-only users need at least one ambiguous token");
  }
  if (!(exclusive_share >= 0.0 && ambiguous_share >= 0.0 &&
        exclusive_share + ambiguous_share <= 1.0)) {
    throw InvalidArgument("token shares must be non-negative and sum to at most 1");
  }
  if (noise_tokens == 0 && exclusive_share + ambiguous_share < 1.0) {
    throw InvalidArgument("noise share is positive but there are no noise tokens");
  }
  if (exclusive_per_mode == 0 && exclusive_share > 0.0) {
    throw InvalidArgument("exclusive share is positive but there are no exclusive tokens");
  }
  if (ambiguous_tokens == 0 && ambiguous_share > 0.0) {
    throw InvalidArgument("ambiguous share is positive but there are no ambiguous tokens");
  }
}

std::string synthetic_exclusive_token(std::size_t mode, std::size_t j) {
  return "m" + std::to_string(mode) + "w" + std::to_string(j);
}
std::string synthetic_ambiguous_token(std::size_t j) { return "amb" + std::to_string(j); }
std::string synthetic_noise_token(std::size_t j) { return "nz" + std::to_string(j); }

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<SyntheticUser> users;
  std::size_t serial = 0;
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    const std::size_t count = spec.users_per_mode[m];
    const auto ambiguous =
        static_cast<std::size_t>(std::llround(spec.ambiguous_fraction * count));
    for (std::size_t u = 0; u < count; ++u) {
      SyntheticUser su;
      su.mode = m;
      su.ambiguous_only = u < ambiguous;
      double lat = spec.modes[m].lat + spec.mode_stddev * rng.normal();
      double lon = spec.modes[m].lon + spec.mode_stddev * rng.normal();
      lat = std::clamp(lat, -90.0, 90.0);
      if (lon > 180.0) lon -= 360.0;
      if (lon < -180.0) lon += 360.0;
      su.record.location = {lat, lon};
      char id[32];
      std::snprintf(id, sizeof id, "u%06zu", serial++);
      su.record.id = id;

      std::string text;
      for (std::size_t t = 0; t < spec.tokens_per_user; ++t) {
        const double r = rng.uniform();
        std::string token;
        if (!su.ambiguous_only && r < spec.exclusive_share) {
          token = synthetic_exclusive_token(m, rng.below(spec.exclusive_per_mode));
        } else if (r < spec.exclusive_share + spec.ambiguous_share &&
                   spec.ambiguous_tokens > 0) {
          token = synthetic_ambiguous_token(rng.below(spec.ambiguous_tokens));
        } else {
          token = synthetic_noise_token(rng.below(spec.noise_tokens));
        }
        if (!text.empty()) text += ' ';
        text += token;
      }
      su.record.text = std::move(text);
      users.push_back(std::move(su));
    }
  }
  rng.shuffle(std::span<SyntheticUser>(users));

  SyntheticCorpus corpus;
  const std::size_t n = users.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_dev = n / 10;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? corpus.train : (i < n_train + n_dev ? corpus.dev : corpus.test);
    dst.push_back(std::move(users[i]));
  }
  for (std::size_t m = 0; m < spec.modes.size(); ++m) {
    DialectRegion region;
    region.name = "region" + std::to_string(m);
    region.points = {spec.modes[m]};
    for (std::size_t j = 0; j < spec.exclusive_per_mode; ++j) {
      region.terms.push_back(synthetic_exclusive_token(m, j));
    }
    if (!region.terms.empty()) corpus.regions.push_back(std::move(region));
  }
  return corpus;
}

SyntheticSpec bimodal_synthetic_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.modes = {{30.0, -95.0}, {50.0, -95.0}};
  s.users_per_mode = {1300, 700};
  s.mode_stddev = 1.0;
  s.tokens_per_user = 20;
  s.exclusive_per_mode = 10;
  s.ambiguous_tokens = 5;
  s.noise_tokens = 50;
  s.ambiguous_fraction = 0.5;
  s.exclusive_share = 0.3;
  s.ambiguous_share = 0.2;
  s.seed = seed;
  return s;
}

SyntheticSpec dialect_synthetic_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.modes = {{47.6, -122.3}, {41.9, -87.6}, {40.7, -74.0}, {29.9, -90.1}};
  s.users_per_mode = {250, 250, 250, 250};
  s.mode_stddev = 1.0;
  s.tokens_per_user = 20;
  s.exclusive_per_mode = 5;
  s.ambiguous_tokens = 0;
  s.noise_tokens = 50;
  s.ambiguous_fraction = 0.0;
  s.exclusive_share = 0.3;
  s.ambiguous_share = 0.0;
  s.seed = seed;
  return s;
}

std::vector<UserRecord> records_of(std::span<const SyntheticUser> users) {
  std::vector<UserRecord> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back(u.record);
  return out;
}

std::vector<UserRecord> ambiguous_records_of(std::span<const SyntheticUser> users) {
  std::vector<UserRecord> out;
  for (const auto& u : users) {
    if (u.ambiguous_only) out.push_back(u.record);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointFormat = "geomdn-checkpoint";

json to_json(const Matrix& m) { return json(std::vector<double>(m.values().begin(), m.values().end())); }

std::vector<double> doubles(const json& j, const char* what, std::size_t expected) {
  if (!j.is_array()) throw FormatError(std::string("checkpoint field ") + what + " is not an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) {
      throw FormatError(std::string("checkpoint field ") + what + " has a non-numeric entry");
    }
    out.push_back(v.get<double>());
  }
  if (out.size() != expected) {
    std::ostringstream os;
    os << "checkpoint field " << what << " has " << out.size() << " values, expected "
       << expected;
    throw FormatError(os.str());
  }
  return out;
}

}  // namespace

std::string serialize_model(const Model& model) {
  const auto& spec = model.network.spec();
  json layers = json::array();
  for (const auto& l : model.network.layers()) {
    layers.push_back({{"weights", to_json(l.weights)}, {"bias", l.bias}});
  }
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["model"] = to_string(model.kind);
  j["slice_layout"] = kSliceLayoutTag;
  j["head"] = {{"K", model.head.num_components},
               {"rule", to_string(model.head.rule)},
               {"transform", to_string(model.head.transform)}};
  j["gaussian_activation"] = to_string(model.activation);
  j["network"] = {{"layer_sizes", spec.layer_sizes},
                  {"hidden_activation", "tanh"},
                  {"dropout", spec.dropout_rate},
                  {"l1", spec.l1},
                  {"l2", spec.l2},
                  {"seed", spec.seed},
                  {"layers", layers}};
  j["components"] = {{"mu", model.components.mu},
                     {"raw_sigma", model.components.raw_sigma},
                     {"raw_rho", model.components.raw_rho}};
  j["vocab_hash"] = model.vocab_hash;
  return j.dump(1) + "\n";
}

Model parse_model(std::string_view text, std::optional<std::size_t> expected_components) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kCheckpointFormat) {
      throw FormatError("not a geomdn checkpoint (format tag missing or wrong)");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                        " (this build reads version " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    if (j.at("slice_layout").get<std::string>() != kSliceLayoutTag) {
      throw FormatError("checkpoint slice layout '" +
                        j.at("slice_layout").get<std::string>() + "' is not '" +
                        kSliceLayoutTag + "'");
    }

    Model model;
    model.kind = parse_model_kind(j.at("model").get<std::string>());
    const auto& head = j.at("head");
    model.head.num_components = head.at("K").get<std::size_t>();
    model.head.rule = parse_selection_rule(head.at("rule").get<std::string>());
    model.head.transform = parse_constraint_transform(head.at("transform").get<std::string>());
    model.activation =
        parse_gaussian_activation(j.at("gaussian_activation").get<std::string>());
    model.vocab_hash = j.at("vocab_hash").get<std::string>();

    if (expected_components && model.kind != ModelKind::kRegression &&
        *expected_components != model.head.num_components) {
      std::ostringstream os;
      os << "checkpoint has K=" << model.head.num_components << " but K="
         << *expected_components << " was requested";
      throw FormatError(os.str());
    }

    const auto& net = j.at("network");
    NetworkSpec spec;
    spec.layer_sizes = net.at("layer_sizes").get<std::vector<std::size_t>>();
    spec.dropout_rate = net.at("dropout").get<double>();
    spec.l1 = net.at("l1").get<double>();
    spec.l2 = net.at("l2").get<double>();
    spec.seed = net.at("seed").get<std::uint64_t>();
    spec.validate();
    const auto& jl = net.at("layers");
    if (!jl.is_array() || jl.size() + 1 != spec.layer_sizes.size()) {
      throw FormatError("checkpoint layer count does not match layer_sizes");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < jl.size(); ++l) {
      const std::size_t in = spec.layer_sizes[l];
      const std::size_t out = spec.layer_sizes[l + 1];
      DenseLayer layer{Matrix(in, out), doubles(jl[l].at("bias"), "bias", out)};
      const auto w = doubles(jl[l].at("weights"), "weights", in * out);
      std::copy(w.begin(), w.end(), layer.weights.values().begin());
      layers.push_back(std::move(layer));
    }
    model.network = Network::from_layers(spec, std::move(layers));

    const std::size_t K = model.head.num_components;
    const std::size_t out = spec.output_size();
    const bool shared = model.kind == ModelKind::kMdnShared || model.kind == ModelKind::kDialect;
    const std::size_t ck = shared ? K : 0;
    const auto& c = j.at("components");
    model.components.mu = doubles(c.at("mu"), "components.mu", 2 * ck);
    model.components.raw_sigma = doubles(c.at("raw_sigma"), "components.raw_sigma", 2 * ck);
    model.components.raw_rho = doubles(c.at("raw_rho"), "components.raw_rho", ck);

    const bool shape_ok =
        (model.kind == ModelKind::kRegression && out == 2) ||
        (model.kind == ModelKind::kMdn && out == 6 * K) ||
        (model.kind == ModelKind::kMdnShared && out == K) ||
        (model.kind == ModelKind::kDialect && spec.input_size() == K);
    if (K == 0 || !shape_ok) {
      throw FormatError("checkpoint network shape is inconsistent with its model kind and K");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is missing or mistypes a field: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint has an invalid value: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint is inconsistent: ") + e.what());
  }
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << serialize_model(model);
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Model load_model(const std::string& path, std::optional<std::size_t> expected_components) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_model(buf.str(), expected_components);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace geomdn
