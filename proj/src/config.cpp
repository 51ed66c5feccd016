// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "geomdn/error.hpp"

namespace geomdn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw InvalidArgument("config key '" + key + "': cannot parse '" + value + "' as " +
                        expected);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
  if (used != v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    bad_value(key, v, "a non-negative integer");
  }
  try {
    return std::stoull(v);
  } catch (const std::logic_error&) {
    bad_value(key, v, "a non-negative integer");
  }
}

std::vector<std::size_t> to_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& part : split(v, ',')) {
    if (part.empty()) continue;
    out.push_back(static_cast<std::size_t>(to_uint(key, part)));
  }
  if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
  return out;
}

std::vector<GeoPoint> to_point_list(const std::string& key, const std::string& v) {
  std::vector<GeoPoint> out;
  for (const auto& part : split(v, ';')) {
    if (part.empty()) continue;
    const auto ll = split(part, ',');
    if (ll.size() != 2) bad_value(key, v, "'lat,lon;lat,lon...'");
    out.push_back({to_double(key, ll[0]), to_double(key, ll[1])});
  }
  if (out.empty()) bad_value(key, v, "'lat,lon;lat,lon...'");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Profile {
  const char* name;
  std::vector<std::pair<const char*, const char*>> values;
};

// Hyper-parameters tuned per dataset; "regul" sets both elastic-net shares.
const std::vector<Profile>& profiles() {
  static const std::vector<Profile> table = {
      {"geotext-regression",
       {{"model", "regression"}, {"regul", "0"}, {"dropout", "0"}, {"hidden", "100,50"}}},
      {"geotext-mdn",
       {{"model", "mdn"}, {"regul", "0"}, {"dropout", "0.5"}, {"hidden", "100"}, {"K", "100"}}},
      {"geotext-mdn-shared",
       {{"model", "mdn_shared"}, {"regul", "0"}, {"dropout", "0"}, {"hidden", "100"},
        {"K", "300"}}},
      {"twitterus-regression",
       {{"model", "regression"}, {"regul", "1e-5"}, {"dropout", "0"}, {"hidden", "100,50"}}},
      {"twitterus-mdn",
       {{"model", "mdn"}, {"regul", "1e-5"}, {"dropout", "0"}, {"hidden", "300"}, {"K", "100"}}},
      {"twitterus-mdn-shared",
       {{"model", "mdn_shared"}, {"regul", "0"}, {"dropout", "0"}, {"hidden", "900"},
        {"K", "900"}}},
      // Desk-scale presets for the synthetic corpora.
      {"synthetic-regression",
       {{"model", "regression"}, {"regul", "0"}, {"dropout", "0"}, {"hidden", "100,50"},
        {"min_df", "1"}, {"max_epochs", "200"}}},
      {"synthetic-mdn",
       {{"model", "mdn"}, {"regul", "0"}, {"dropout", "0.5"}, {"hidden", "100"}, {"K", "10"},
        {"min_df", "1"}, {"max_epochs", "200"}}},
      {"synthetic-mdn-shared",
       {{"model", "mdn_shared"}, {"regul", "0"}, {"dropout", "0"}, {"hidden", "100"},
        {"K", "30"}, {"min_df", "1"}, {"max_epochs", "200"}}},
      {"synthetic-dialect",
       {{"model", "dialect"}, {"regul", "0"}, {"dropout", "0"}, {"hidden", "50"}, {"K", "8"},
        {"min_df", "1"}, {"max_epochs", "200"}, {"lr", "0.01"}}},
  };
  return table;
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::keys() {
  static const std::vector<ConfigKey> table = {
      {"model", "model", "regression | mdn | mdn_shared | dialect"},
      {"K", "model", "number of Gaussian components"},
      {"hidden", "model", "comma-separated hidden layer sizes"},
      {"dropout", "model", "dropout rate on hidden activations"},
      {"regul", "model", "elastic-net coefficient (sets l1 and l2)"},
      {"l1", "model", "l1 coefficient"},
      {"l2", "model", "l2 coefficient"},
      {"transform", "model", "softplus_softsign | exp_tanh"},
      {"rule", "model", "strongest_pi | max_mixture_prob"},
      {"activation", "model", "dialect Gaussian layer output: density | log_density"},
      {"seed", "model", "random seed"},
      {"output_init", "model", "geolocation output biases: zero | labels"},
      {"lr", "train", "Adam learning rate"},
      {"beta1", "train", "Adam beta1"},
      {"beta2", "train", "Adam beta2"},
      {"epsilon", "train", "Adam epsilon"},
      {"batch_size", "train", "mini-batch size"},
      {"max_epochs", "train", "epoch budget"},
      {"patience", "train", "early-stopping patience in epochs"},
      {"monitor", "train", "dev_nll | dev_median_km"},
      {"min_df", "train", "minimum document frequency"},
      {"train", "paths", "training corpus TSV"},
      {"dev", "paths", "development corpus TSV"},
      {"test", "paths", "test corpus TSV"},
      {"vocab", "paths", "vocabulary file"},
      {"checkpoint", "paths", "model checkpoint (JSON)"},
      {"log", "paths", "training log"},
      {"errors", "paths", "per-user error TSV"},
      {"output", "paths", "command output file or directory"},
      {"modes", "synthetic", "mode centers 'lat,lon;lat,lon'"},
      {"mode_stddev", "synthetic", "mode standard deviation in degrees"},
      {"users_per_mode", "synthetic", "comma-separated user counts"},
      {"tokens_per_user", "synthetic", "tokens per user"},
      {"exclusive_per_mode", "synthetic", "exclusive tokens per mode"},
      {"ambiguous_tokens", "synthetic", "tokens shared by all modes"},
      {"noise_tokens", "synthetic", "location-independent tokens"},
      {"ambiguous_fraction", "synthetic", "fraction of ambiguous-only users"},
      {"exclusive_share", "synthetic", "token share drawn from exclusive tokens"},
      {"ambiguous_share", "synthetic", "token share drawn from ambiguous tokens"},
  };
  return table;
}

const std::vector<std::string>& RunConfig::profile_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& p : profiles()) out.emplace_back(p.name);
    return out;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "model") {
    model = parse_model_kind(v);
  } else if (key == "K") {
    num_components = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "hidden") {
    hidden = to_size_list(key, v);
  } else if (key == "dropout") {
    dropout = to_double(key, v);
  } else if (key == "regul") {
    l1 = l2 = to_double(key, v);
    explicit_keys_.insert("l1");
    explicit_keys_.insert("l2");
  } else if (key == "l1") {
    l1 = to_double(key, v);
  } else if (key == "l2") {
    l2 = to_double(key, v);
  } else if (key == "transform") {
    transform = parse_constraint_transform(v);
  } else if (key == "rule") {
    rule = parse_selection_rule(v);
  } else if (key == "activation") {
    activation = parse_gaussian_activation(v);
  } else if (key == "seed") {
    seed = to_uint(key, v);
    synthetic.seed = seed;
  } else if (key == "output_init") {
    output_init = parse_output_init(v);
  } else if (key == "lr") {
    adam.learning_rate = to_double(key, v);
  } else if (key == "beta1") {
    adam.beta1 = to_double(key, v);
  } else if (key == "beta2") {
    adam.beta2 = to_double(key, v);
  } else if (key == "epsilon") {
    adam.epsilon = to_double(key, v);
  } else if (key == "batch_size") {
    batch_size = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "max_epochs") {
    max_epochs = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "patience") {
    patience = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "monitor") {
    monitor = parse_dev_metric(v);
  } else if (key == "min_df") {
    min_df = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "train") {
    train_path = v;
  } else if (key == "dev") {
    dev_path = v;
  } else if (key == "test") {
    test_path = v;
  } else if (key == "vocab") {
    vocab_path = v;
  } else if (key == "checkpoint") {
    checkpoint_path = v;
  } else if (key == "log") {
    log_path = v;
  } else if (key == "errors") {
    errors_path = v;
  } else if (key == "output") {
    output_path = v;
  } else if (key == "modes") {
    synthetic.modes = to_point_list(key, v);
  } else if (key == "mode_stddev") {
    synthetic.mode_stddev = to_double(key, v);
  } else if (key == "users_per_mode") {
    synthetic.users_per_mode = to_size_list(key, v);
  } else if (key == "tokens_per_user") {
    synthetic.tokens_per_user = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "exclusive_per_mode") {
    synthetic.exclusive_per_mode = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "ambiguous_tokens") {
    synthetic.ambiguous_tokens = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "noise_tokens") {
    synthetic.noise_tokens = static_cast<std::size_t>(to_uint(key, v));
  } else if (key == "ambiguous_fraction") {
    synthetic.ambiguous_fraction = to_double(key, v);
  } else if (key == "exclusive_share") {
    synthetic.exclusive_share = to_double(key, v);
  } else if (key == "ambiguous_share") {
    synthetic.ambiguous_share = to_double(key, v);
  } else {
    throw InvalidArgument("unknown config key '" + key + "'");
  }
  explicit_keys_.insert(key);
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "model") return to_string(model);
  if (key == "K") return std::to_string(num_components);
  if (key == "hidden") return join(hidden);
  if (key == "dropout") return fmt(dropout);
  if (key == "regul") return l1 == l2 ? fmt(l1) : fmt(l1) + "," + fmt(l2);
  if (key == "l1") return fmt(l1);
  if (key == "l2") return fmt(l2);
  if (key == "transform") return to_string(transform);
  if (key == "rule") return to_string(rule);
  if (key == "activation") return to_string(activation);
  if (key == "seed") return std::to_string(seed);
  if (key == "output_init") return to_string(output_init);
  if (key == "lr") return fmt(adam.learning_rate);
  if (key == "beta1") return fmt(adam.beta1);
  if (key == "beta2") return fmt(adam.beta2);
  if (key == "epsilon") return fmt(adam.epsilon);
  if (key == "batch_size") return std::to_string(batch_size);
  if (key == "max_epochs") return std::to_string(max_epochs);
  if (key == "patience") return std::to_string(patience);
  if (key == "monitor") return to_string(monitor);
  if (key == "min_df") return std::to_string(min_df);
  if (key == "train") return train_path;
  if (key == "dev") return dev_path;
  if (key == "test") return test_path;
  if (key == "vocab") return vocab_path;
  if (key == "checkpoint") return checkpoint_path;
  if (key == "log") return log_path;
  if (key == "errors") return errors_path;
  if (key == "output") return output_path;
  if (key == "modes") {
    std::string out;
    for (std::size_t i = 0; i < synthetic.modes.size(); ++i) {
      out += (i ? ";" : "") + fmt(synthetic.modes[i].lat) + "," + fmt(synthetic.modes[i].lon);
    }
    return out;
  }
  if (key == "mode_stddev") return fmt(synthetic.mode_stddev);
  if (key == "users_per_mode") return join(synthetic.users_per_mode);
  if (key == "tokens_per_user") return std::to_string(synthetic.tokens_per_user);
  if (key == "exclusive_per_mode") return std::to_string(synthetic.exclusive_per_mode);
  if (key == "ambiguous_tokens") return std::to_string(synthetic.ambiguous_tokens);
  if (key == "noise_tokens") return std::to_string(synthetic.noise_tokens);
  if (key == "ambiguous_fraction") return fmt(synthetic.ambiguous_fraction);
  if (key == "exclusive_share") return fmt(synthetic.exclusive_share);
  if (key == "ambiguous_share") return fmt(synthetic.ambiguous_share);
  throw InvalidArgument("unknown config key '" + key + "'");
}

void RunConfig::apply_profile(const std::string& name) {
  for (const auto& p : profiles()) {
    if (name != p.name) continue;
    for (const auto& [k, v] : p.values) set(k, v);
    return;
  }
  std::string known;
  for (const auto& n : profile_names()) known += (known.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown profile '" + name + "' (known: " + known + ")");
}

void RunConfig::load(std::istream& in) {
  std::map<std::string, std::string> section_of;
  for (const auto& k : keys()) section_of[k.name] = k.section;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = " (config line " + std::to_string(line_no) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidArgument("malformed section header" + where);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key = value" + where);
    const std::string key = trim(line.substr(0, eq));
    const auto it = section_of.find(key);
    if (it == section_of.end()) throw InvalidArgument("unknown config key '" + key + "'" + where);
    if (!section.empty() && it->second != section) {
      throw InvalidArgument("key '" + key + "' belongs to section [" + it->second +
                            "], not [" + section + "]" + where);
    }
    try {
      set(key, line.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(e.what() + where);
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  load(in);
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> warnings;
  if (model != ModelKind::kRegression && num_components < 1) {
    throw InvalidArgument("K must be >= 1");
  }
  if (model == ModelKind::kRegression && was_set("K")) {
    warnings.push_back("K is ignored for the regression model");
  }
  if (model == ModelKind::kDialect && hidden.size() != 1) {
    warnings.push_back("the dialect model has one hidden layer; using hidden=" +
                       std::to_string(hidden.front()));
  }
  if (model == ModelKind::kDialect && monitor != DevMetric::kDevLoss) {
    throw InvalidArgument("the dialect model can only monitor dev_nll");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
  if (l1 < 0.0 || l2 < 0.0) throw InvalidArgument("l1 and l2 must be non-negative");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
  if (min_df < 1) throw InvalidArgument("min_df must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) throw InvalidArgument("hidden layer sizes must be >= 1");
  }
  adam.validate();
  return warnings;
}

}  // namespace geomdn
