// Copyright 2026 The geomdn Authors
// SPDX-License-Identifier: Apache-2.0

#include "geomdn/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "geomdn/error.hpp"

namespace geomdn {

namespace {

// Bytes >= 0x80 belong to UTF-8 sequences and count as word characters.
bool is_word_char(unsigned char c) {
  return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;

    std::string_view raw = text.substr(start, i - start);
    std::size_t b = 0;
    std::size_t e = raw.size();
    auto keep = [](unsigned char c) { return is_word_char(c) || c == '#'; };
    while (b < e && !keep(static_cast<unsigned char>(raw[b])) && raw[b] != '@') ++b;
    while (e > b && !keep(static_cast<unsigned char>(raw[e - 1]))) --e;
    if (b == e || raw[b] == '@') continue;

    std::string token(raw.substr(b, e - b));
    for (char& c : token) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string stopword_hash(std::span<const std::string> stopwords) {
  std::string joined;
  for (const auto& w : stopwords) {
    joined += w;
    joined += '\n';
  }
  return to_hex(fnv1a64(joined));
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> documents,
                             std::size_t min_df, std::span<const std::string> stopwords) {
  if (min_df < 1) throw InvalidArgument("min_df must be >= 1");
  std::unordered_set<std::string> stop(stopwords.begin(), stopwords.end());
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      if (seen.insert(t).second) ++df[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= min_df && !stop.contains(term)) kept.emplace_back(term, count);
  }
  if (kept.empty()) {
    throw PipelineError("vocabulary is empty after stopword and min_df filtering");
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // ties stay lexicographic (map order)
  });

  Vocabulary v;
  v.document_count_ = documents.size();
  v.min_df_ = min_df;
  v.stopword_hash_ = geomdn::stopword_hash(stopwords);
  for (auto& [term, count] : kept) {
    v.terms_.push_back(term);
    v.df_.push_back(count);
  }
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

std::optional<std::size_t> Vocabulary::find(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(std::ostream& out) const {
  out << "# docs=" << document_count_ << "\tmin_df=" << min_df_
      << "\tstopwords=" << stopword_hash_ << '\n';
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    out << i << '\t' << terms_[i] << '\t' << df_[i] << '\n';
  }
}

void Vocabulary::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path);
  save(out);
  if (!out) throw IoError("failed writing vocabulary file " + path);
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("vocabulary file is empty");
  Vocabulary v;
  {
    unsigned long long docs = 0, min_df = 0;
    char hash[64] = {0};
    if (std::sscanf(line.c_str(), "# docs=%llu\tmin_df=%llu\tstopwords=%63s", &docs,
                    &min_df, hash) != 3) {
      throw FormatError("vocabulary header is malformed: " + line);
    }
    v.document_count_ = docs;
    v.min_df_ = min_df;
    v.stopword_hash_ = hash;
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string index, term, df;
    if (!std::getline(row, index, '\t') || !std::getline(row, term, '\t') ||
        !std::getline(row, df)) {
      throw FormatError("vocabulary row " + std::to_string(line_no) + " is malformed");
    }
    try {
      if (std::stoull(index) != v.terms_.size()) {
        throw FormatError("vocabulary indices are not dense at line " +
                          std::to_string(line_no));
      }
      v.df_.push_back(std::stoull(df));
    } catch (const std::logic_error&) {
      throw FormatError("vocabulary row " + std::to_string(line_no) + " is malformed");
    }
    v.terms_.push_back(term);
  }
  if (v.terms_.empty()) throw FormatError("vocabulary file has no terms");
  v.rebuild_index();
  return v;
}

Vocabulary Vocabulary::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file " + path);
  return load(in);
}

std::string Vocabulary::hash() const {
  std::ostringstream os;
  save(os);
  return to_hex(fnv1a64(os.str()));
}

FeatureVector term_counts(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::map<std::size_t, double> counts;
  for (const auto& t : tokens) {
    if (const auto idx = vocab.find(t)) counts[*idx] += 1.0;
  }
  FeatureVector fv;
  fv.entries.assign(counts.begin(), counts.end());
  return fv;
}

FeatureVector vectorize(std::span<const std::string> tokens, const Vocabulary& vocab,
                        WeightingScheme scheme) {
  if (vocab.empty()) throw ContractError("vectorize needs a non-empty vocabulary");
  FeatureVector fv = term_counts(tokens, vocab);
  if (scheme == WeightingScheme::kL2Count) {
    double sq = 0.0;
    for (const auto& [i, w] : fv.entries) sq += w * w;
    if (sq == 0.0) return {};
    const double norm = std::sqrt(sq);
    for (auto& [i, w] : fv.entries) w /= norm;
    return fv;
  }
  const double docs = static_cast<double>(vocab.document_count());
  FeatureVector out;
  double total = 0.0;
  for (const auto& [i, count] : fv.entries) {
    const double idf = std::log(docs / static_cast<double>(vocab.df(i)));
    if (idf > 0.0) {
      out.entries.emplace_back(i, idf);
      total += idf;
    }
  }
  if (total == 0.0) return {};
  for (auto& [i, w] : out.entries) w /= total;
  return out;
}

namespace {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> nearest_terms(const Vocabulary& vocab, std::string_view word,
                                       std::size_t count) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  scored.reserve(vocab.size());
  for (const auto& t : vocab.terms()) scored.emplace_back(levenshtein(word, t), t);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(count, scored.size()); ++i) {
    out.push_back(scored[i].second);
  }
  return out;
}

}  // namespace geomdn
