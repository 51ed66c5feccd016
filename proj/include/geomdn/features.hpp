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
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace geomdn {

/// Lowercases, splits on whitespace, trims punctuation (keeping '#') and drops
/// @-mentions.
std::vector<std::string> tokenize(std::string_view text);

/// The shipped English stopword list.
const std::vector<std::string>& default_stopwords();
/// FNV-1a over the newline-joined list, as 16 hex digits.
std::string stopword_hash(std::span<const std::string> stopwords);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Keeps terms with df >= min_df that are not stopwords. Index order is
  /// descending df, then lexicographic. Throws PipelineError if nothing
  /// survives.
  static Vocabulary build(std::span<const std::vector<std::string>> documents,
                          std::size_t min_df, std::span<const std::string> stopwords);

  static Vocabulary load(std::istream& in);
  static Vocabulary load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  std::optional<std::size_t> find(std::string_view term) const;
  const std::string& term(std::size_t index) const { return terms_.at(index); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t df(std::size_t index) const { return df_.at(index); }
  std::size_t document_count() const { return document_count_; }
  std::size_t min_df() const { return min_df_; }
  const std::string& stopword_hash() const { return stopword_hash_; }

  /// Hash of the serialized vocabulary; checkpoints record it.
  std::string hash() const;

 private:
  void rebuild_index();

  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t document_count_ = 0;
  std::size_t min_df_ = 1;
  std::string stopword_hash_;
};

/// Sparse vector: (index, weight) pairs sorted by index, no duplicates.
struct FeatureVector {
  std::vector<std::pair<std::size_t, double>> entries;

  bool empty() const { return entries.empty(); }
};

enum class WeightingScheme {
  kL2Count,        // raw counts, l2-normalized (geolocation inputs)
  kL1BinaryIdf,    // 1{tf>0} * log(|U|/df), l1-normalized (dialect targets)
};

/// Out-of-vocabulary tokens are ignored; an all-OOV input gives an empty vector.
FeatureVector vectorize(std::span<const std::string> tokens, const Vocabulary& vocab,
                        WeightingScheme scheme);

/// Raw in-vocabulary counts, sorted by index.
FeatureVector term_counts(std::span<const std::string> tokens, const Vocabulary& vocab);

/// Closest vocabulary terms by Levenshtein distance (ties lexicographic).
std::vector<std::string> nearest_terms(const Vocabulary& vocab, std::string_view word,
                                       std::size_t count);

}  // namespace geomdn
