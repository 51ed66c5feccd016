// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geomdn/dialect_models.hpp"
#include "geomdn/model.hpp"
#include "geomdn/types.hpp"

namespace geomdn {

/// One user: the concatenation of their messages and a home location.
struct UserRecord {
  std::string id;
  GeoPoint location;
  std::string text;

  bool operator==(const UserRecord&) const = default;
};

struct CorpusReadResult {
  std::vector<UserRecord> records;
  std::size_t malformed = 0;
  std::vector<std::string> diagnostics;  // one per skipped row, plus warnings
};

/// TSV rows: id, lat, lon, text. Malformed rows are skipped and reported;
/// more than 10% malformed throws FormatError.
CorpusReadResult read_corpus(std::istream& in);
CorpusReadResult read_corpus(const std::string& path);

/// Coordinates are written with 17 significant digits so reading back is exact.
void write_corpus(std::ostream& out, std::span<const UserRecord> records);
void write_corpus(const std::string& path, std::span<const UserRecord> records);

/// Plan for a corpus with known geography. Regular users draw tokens from
/// their mode's exclusive list (exclusive_share), the shared ambiguous list
/// (ambiguous_share) or the noise list (the rest). Ambiguous-only users give
/// their exclusive share to the ambiguous list.
struct SyntheticSpec {
  std::vector<GeoPoint> modes;
  double mode_stddev = 1.0;                 // degrees, isotropic
  std::vector<std::size_t> users_per_mode;
  std::size_t tokens_per_user = 20;
  std::size_t exclusive_per_mode = 10;
  std::size_t ambiguous_tokens = 5;         // each used by every mode
  std::size_t noise_tokens = 50;
  double ambiguous_fraction = 0.0;          // share of each mode's users
  double exclusive_share = 0.3;
  double ambiguous_share = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticUser {
  UserRecord record;
  std::size_t mode = 0;
  bool ambiguous_only = false;
};

struct SyntheticCorpus {
  std::vector<SyntheticUser> train;  // 80%
  std::vector<SyntheticUser> dev;    // 10%
  std::vector<SyntheticUser> test;   // 10%
  // One region per mode: its center and its exclusive tokens.
  std::vector<DialectRegion> regions;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

std::string synthetic_exclusive_token(std::size_t mode, std::size_t j);
std::string synthetic_ambiguous_token(std::size_t j);
std::string synthetic_noise_token(std::size_t j);

/// Two modes 20 degrees of latitude apart with a 65/35 population split;
/// half of each mode's users only use ambiguous tokens.
SyntheticSpec bimodal_synthetic_spec(std::uint64_t seed);
/// Four separated regions with five exclusive words each and 50 noise words.
SyntheticSpec dialect_synthetic_spec(std::uint64_t seed);

std::vector<UserRecord> records_of(std::span<const SyntheticUser> users);
std::vector<UserRecord> ambiguous_records_of(std::span<const SyntheticUser> users);

inline constexpr int kCheckpointVersion = 1;

std::string serialize_model(const Model& model);
/// Throws FormatError on malformed, truncated or inconsistent input. When
/// expected_components is set, a checkpoint with a different K is refused.
Model parse_model(std::string_view text,
                  std::optional<std::size_t> expected_components = std::nullopt);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path,
                 std::optional<std::size_t> expected_components = std::nullopt);

}  // namespace geomdn
