// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "geomdn/data_io.hpp"
#include "geomdn/geolocation.hpp"
#include "geomdn/mdn_models.hpp"
#include "geomdn/model.hpp"
#include "geomdn/nn_core.hpp"

namespace geomdn {

struct ConfigKey {
  const char* name;
  const char* section;
  const char* help;
};

/// Everything a command needs. Values come from, in increasing precedence: the
/// built-in defaults, a named profile, a config file, then individual keys
/// (command-line flags).
struct RunConfig {
  ModelKind model = ModelKind::kMdn;
  std::size_t num_components = 100;
  std::vector<std::size_t> hidden = {100};
  double dropout = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  ConstraintTransform transform = ConstraintTransform::kSoftplusSoftsign;
  SelectionRule rule = SelectionRule::kStrongestPi;
  GaussianActivation activation = GaussianActivation::kDensity;
  std::uint64_t seed = 1;
  OutputInit output_init = OutputInit::kLabels;

  AdamConfig adam;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  DevMetric monitor = DevMetric::kDevLoss;
  std::size_t min_df = 10;

  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string vocab_path;
  std::string checkpoint_path;
  std::string log_path;
  std::string errors_path;
  std::string output_path;

  SyntheticSpec synthetic = bimodal_synthetic_spec(1);

  static const std::vector<ConfigKey>& keys();
  static const std::vector<std::string>& profile_names();

  /// Parses and stores one key. Throws InvalidArgument on an unknown key or a
  /// malformed value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Table-1 style presets ("geotext-mdn", "twitterus-mdn-shared", ...) and
  /// desk-scale "synthetic-*" presets.
  void apply_profile(const std::string& name);

  /// Flat key = value lines grouped under [section] headers; '#' comments.
  void load(std::istream& in);
  void load_file(const std::string& path);

  /// Throws InvalidArgument on inconsistent settings; returns warnings.
  std::vector<std::string> validate() const;

  bool was_set(const std::string& key) const { return explicit_keys_.contains(key); }

 private:
  std::set<std::string> explicit_keys_;
};

}  // namespace geomdn
