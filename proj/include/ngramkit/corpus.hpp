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

#ifndef NGRAMKIT_CORPUS_HPP_
#define NGRAMKIT_CORPUS_HPP_

// Lexicon loading, coverage filtering and forward-maximum-matching
// segmentation.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ngramkit/error.hpp"
#include "ngramkit/tokens.hpp"
#include "ngramkit/utf8.hpp"

namespace ngramkit {

enum class LexiconFormat { kWordOnly, kWordPronunciation };

// Closed vocabulary. Immutable once built.
class Lexicon {
 public:
  // Throws DataError if `words` is empty or an entry is empty, contains
  // whitespace or is not valid UTF-8. Duplicates are collapsed and counted.
  static Lexicon from_words(std::vector<std::string> words) {
    if (words.empty()) throw DataError("empty lexicon");
    Lexicon lex;
    for (auto& w : words) {
      auto cps = utf8::decode(w);
      if (!cps) throw DataError("lexicon entry is not valid UTF-8");
      if (cps->empty()) throw DataError("empty lexicon entry");
      for (const auto& cp : *cps) {
        if (utf8::is_space(cp.value)) {
          throw DataError("lexicon entry contains whitespace: '" + w + "'");
        }
        lex.chars_.insert(cp.value);
      }
      lex.max_word_len_ = std::max(lex.max_word_len_, cps->size());
      if (!lex.words_.insert(std::move(w)).second) ++lex.duplicates_;
    }
    return lex;
  }

  bool contains(std::string_view word) const {
    return words_.find(word) != words_.end();
  }
  // True if some entry contains `c`.
  bool covers(char32_t c) const { return chars_.count(c) > 0; }

  std::size_t size() const { return words_.size(); }
  std::size_t max_word_len() const { return max_word_len_; }
  std::size_t duplicate_count() const { return duplicates_; }

  std::vector<std::string> sorted_words() const {
    std::vector<std::string> out(words_.begin(), words_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  Lexicon() = default;

  std::unordered_set<std::string, StringHash, std::equal_to<>> words_;
  std::unordered_set<char32_t> chars_;
  std::size_t max_word_len_ = 0;
  std::size_t duplicates_ = 0;
};

// One entry per line. In word+pronunciation mode only the first
// whitespace-delimited field is used. Blank lines are skipped.
inline Lexicon load_lexicon(std::istream& in, LexiconFormat format) {
  std::vector<std::string> words;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = utf8::split_whitespace(line);
    if (!fields) throw ParseError(lineno, "invalid UTF-8 in lexicon");
    if (fields->empty()) continue;
    if (format == LexiconFormat::kWordOnly && fields->size() > 1) {
      throw ParseError(lineno, "lexicon entry contains whitespace");
    }
    words.emplace_back((*fields)[0]);
  }
  return Lexicon::from_words(std::move(words));
}

inline Lexicon load_lexicon(const std::filesystem::path& path,
                            LexiconFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  return load_lexicon(in, format);
}

struct FilterDecision {
  bool keep = true;
  // First uncovered character, or "<invalid-utf8>" for undecodable input.
  std::string reason;
};

// Drops a sentence iff it contains a non-whitespace character that appears
// in no lexicon entry.
inline FilterDecision filter_sentence(std::string_view raw,
                                      const Lexicon& lexicon) {
  auto cps = utf8::decode(raw);
  if (!cps) return {false, "<invalid-utf8>"};
  for (const auto& cp : *cps) {
    if (utf8::is_space(cp.value)) continue;
    if (!lexicon.covers(cp.value)) {
      return {false, std::string(raw.substr(cp.offset, cp.length))};
    }
  }
  return {true, {}};
}

// A piece of the input consumed by the segmenter. `oov` pieces are exactly
// one character that starts no lexicon entry.
struct Segment {
  std::string_view text;
  bool oov;
};

// Forward maximum matching. Whitespace separates segments and is never
// emitted. Throws DataError on invalid UTF-8.
inline std::vector<Segment> segment_fmm_pieces(std::string_view raw,
                                               const Lexicon& lexicon) {
  auto cps = utf8::decode(raw);
  if (!cps) throw DataError("sentence is not valid UTF-8");
  std::vector<Segment> out;
  const std::size_t n = cps->size();
  auto end_offset = [&](std::size_t i) {
    return i < n ? (*cps)[i].offset : raw.size();
  };
  std::size_t i = 0;
  while (i < n) {
    if (utf8::is_space((*cps)[i].value)) {
      ++i;
      continue;
    }
    // Candidate lengths stop at the next whitespace.
    std::size_t run = 0;
    while (i + run < n && run < lexicon.max_word_len() &&
           !utf8::is_space((*cps)[i + run].value)) {
      ++run;
    }
    std::size_t matched = 0;
    for (std::size_t len = run; len >= 1; --len) {
      auto piece = raw.substr((*cps)[i].offset,
                              end_offset(i + len) - (*cps)[i].offset);
      if (lexicon.contains(piece)) {
        matched = len;
        break;
      }
    }
    if (matched == 0) {
      out.push_back({raw.substr((*cps)[i].offset, (*cps)[i].length), true});
      ++i;
    } else {
      out.push_back({raw.substr((*cps)[i].offset,
                                end_offset(i + matched) - (*cps)[i].offset),
                     false});
      i += matched;
    }
  }
  return out;
}

inline Sentence segment_fmm(std::string_view raw, const Lexicon& lexicon) {
  Sentence s;
  for (const auto& piece : segment_fmm_pieces(raw, lexicon)) {
    s.tokens.emplace_back(piece.oov ? kUnk : piece.text);
  }
  return s;
}

// Whitespace tokenization for corpora that are already segmented.
inline Sentence split_sentence(std::string_view line) {
  auto fields = utf8::split_whitespace(line);
  if (!fields) throw DataError("sentence is not valid UTF-8");
  Sentence s;
  s.tokens.reserve(fields->size());
  for (auto f : *fields) s.tokens.emplace_back(f);
  return s;
}

// Reads a pre-segmented corpus, one sentence per line.
inline std::vector<Sentence> read_segmented(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = utf8::split_whitespace(line);
    if (!fields) throw ParseError(lineno, "invalid UTF-8 in corpus");
    Sentence s;
    for (auto f : *fields) {
      if (f == kBos || f == kEos) {
        throw ParseError(lineno, "corpus contains sentence boundary marker");
      }
      s.tokens.emplace_back(f);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Sentence> read_segmented(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_segmented(in);
}

inline void write_sentence(std::ostream& out, const Sentence& s) {
  out << join_key(s.tokens) << '\n';
}

}  // namespace ngramkit

#endif  // NGRAMKIT_CORPUS_HPP_
