// Copyright 2026 The ngramkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NGRAMKIT_KEYWORD_HPP_
#define NGRAMKIT_KEYWORD_HPP_

// Keyword frequency adjustment by duplicating or removing whole sentences.
// Only sentences that contain exactly one of the spec's keywords are ever
// duplicated or removed, so the adjustments of different keywords never
// interact.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ngramkit/corpus.hpp"
#include "ngramkit/error.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

inline constexpr std::size_t kDefaultMaxDupPerSentence = 20;

struct KeywordTarget {
  std::vector<std::string> tokens;
  std::uint64_t target_count;
};

struct KeywordSpec {
  std::vector<KeywordTarget> entries;

  void validate() const {
    std::set<std::vector<std::string>> seen;
    for (const auto& e : entries) {
      if (e.tokens.empty()) throw DataError("empty keyword");
      if (e.target_count == 0) throw DataError("keyword target must be positive");
      if (!seen.insert(e.tokens).second) {
        throw DataError("duplicate keyword '" + join_key(e.tokens) + "'");
      }
    }
  }
};

// Lines "keyword<TAB>target_count". Keywords are whitespace-tokenized, or
// segmented with `lexicon` when one is given.
inline KeywordSpec read_keyword_spec(std::istream& in,
                                     const Lexicon* lexicon = nullptr) {
  KeywordSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ParseError(lineno, "expected 'keyword<TAB>target_count'");
    }
    std::uint64_t target = 0;
    try {
      std::size_t used = 0;
      target = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad target count");
    }
    const auto word = line.substr(0, tab);
    KeywordTarget kt{lexicon ? segment_fmm(word, *lexicon).tokens
                             : split_sentence(word).tokens,
                     target};
    spec.entries.push_back(std::move(kt));
  }
  spec.validate();
  return spec;
}

// Occurrences of `keyword` as a contiguous token run (overlaps counted).
inline std::uint64_t count_occurrences(std::span<const std::string> sentence,
                                       std::span<const std::string> keyword) {
  if (keyword.empty() || keyword.size() > sentence.size()) return 0;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i + keyword.size() <= sentence.size(); ++i) {
    if (std::equal(keyword.begin(), keyword.end(), sentence.begin() + i)) ++n;
  }
  return n;
}

inline std::uint64_t count_occurrences(std::span<const Sentence> corpus,
                                       std::span<const std::string> keyword) {
  std::uint64_t n = 0;
  for (const auto& s : corpus) n += count_occurrences(s.tokens, keyword);
  return n;
}

enum class KeywordStatus {
  kOk,
  // Below target with no sentence that holds this keyword alone.
  kUnsatisfiable,
  // Below target after every eligible sentence hit max_dup_per_sentence.
  kCapped,
};

inline const char* to_string(KeywordStatus s) {
  switch (s) {
    case KeywordStatus::kOk: return "ok";
    case KeywordStatus::kUnsatisfiable: return "unsatisfiable";
    case KeywordStatus::kCapped: return "capped";
  }
  return "?";
}

struct KeywordReportEntry {
  std::string keyword;
  std::uint64_t target = 0;
  std::uint64_t before = 0;
  std::uint64_t after = 0;
  std::size_t duplicated = 0;  // copies appended
  std::size_t removed = 0;     // sentences removed
  std::size_t sentences_touched = 0;
  KeywordStatus status = KeywordStatus::kOk;
};

struct KeywordReport {
  std::vector<KeywordReportEntry> entries;
};

inline nlohmann::json to_json(const KeywordReport& r) {
  auto arr = nlohmann::json::array();
  for (const auto& e : r.entries) {
    arr.push_back({{"keyword", e.keyword},
                   {"target", e.target},
                   {"before", e.before},
                   {"after", e.after},
                   {"duplicated", e.duplicated},
                   {"removed", e.removed},
                   {"sentences_touched", e.sentences_touched},
                   {"status", to_string(e.status)}});
  }
  return {{"keywords", arr}};
}

struct AugmentResult {
  std::vector<Sentence> corpus;
  KeywordReport report;
};

// Keywords below target get copies of their single-keyword sentences
// appended round-robin until the target is reached, at most
// `max_dup_per_sentence` copies per sentence. Keywords above target lose
// single-keyword sentences, shortest first, as long as the count stays at
// or above target.
inline AugmentResult augment_keywords(std::span<const Sentence> corpus,
                                      const KeywordSpec& spec,
                                      std::size_t max_dup_per_sentence =
                                          kDefaultMaxDupPerSentence) {
  spec.validate();
  const std::size_t nk = spec.entries.size();
  // occ[s][k]: occurrences of keyword k in sentence s.
  std::vector<std::vector<std::uint64_t>> occ(corpus.size(),
                                              std::vector<std::uint64_t>(nk));
  std::vector<std::size_t> distinct(corpus.size(), 0);
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (std::size_t k = 0; k < nk; ++k) {
      occ[s][k] = count_occurrences(corpus[s].tokens, spec.entries[k].tokens);
      distinct[s] += occ[s][k] > 0;
    }
  }

  std::vector<bool> removed(corpus.size(), false);
  std::vector<std::size_t> appended;  // indices into corpus, in order
  AugmentResult result;
  for (std::size_t k = 0; k < nk; ++k) {
    const auto& kt = spec.entries[k];
    KeywordReportEntry entry;
    entry.keyword = join_key(kt.tokens);
    entry.target = kt.target_count;
    std::vector<std::size_t> eligible;
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      entry.before += occ[s][k];
      if (occ[s][k] > 0 && distinct[s] == 1) eligible.push_back(s);
    }
    std::uint64_t count = entry.before;
    if (count < kt.target_count) {
      if (eligible.empty()) {
        entry.status = KeywordStatus::kUnsatisfiable;
      } else {
        std::size_t rounds = 0;
        while (count < kt.target_count && rounds < max_dup_per_sentence) {
          for (auto s : eligible) {
            if (count >= kt.target_count) break;
            appended.push_back(s);
            count += occ[s][k];
            ++entry.duplicated;
            if (rounds == 0) ++entry.sentences_touched;
          }
          ++rounds;
        }
        if (count < kt.target_count) entry.status = KeywordStatus::kCapped;
      }
    } else if (count > kt.target_count) {
      std::stable_sort(eligible.begin(), eligible.end(),
                       [&](std::size_t a, std::size_t b) {
                         return corpus[a].tokens.size() <
                                corpus[b].tokens.size();
                       });
      for (auto s : eligible) {
        if (count - occ[s][k] < kt.target_count) continue;
        removed[s] = true;
        count -= occ[s][k];
        ++entry.removed;
        ++entry.sentences_touched;
        if (count == kt.target_count) break;
      }
    }
    entry.after = count;
    result.report.entries.push_back(std::move(entry));
  }

  result.corpus.reserve(corpus.size() + appended.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (!removed[s]) result.corpus.push_back(corpus[s]);
  }
  for (auto s : appended) result.corpus.push_back(corpus[s]);
  return result;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_KEYWORD_HPP_
