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

#ifndef NGRAMKIT_TOKENS_HPP_
#define NGRAMKIT_TOKENS_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ngramkit {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

// A segmented sentence. Never contains <s> or </s>.
struct Sentence {
  std::vector<std::string> tokens;

  bool operator==(const Sentence&) const = default;
};

// Transparent hashing so maps keyed by std::string accept string_view lookups.
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const {
    return std::hash<std::string_view>{}(s);
  }
};

// N-grams are keyed by their tokens joined with a single space. Tokens never
// contain whitespace, so the encoding is unambiguous and its bytewise order is
// the order used by every sorted output of the toolkit.
template <typename Range>
std::string join_key(const Range& tokens) {
  std::string key;
  bool first = true;
  for (const auto& t : tokens) {
    if (!first) key += ' ';
    key.append(std::string_view(t));
    first = false;
  }
  return key;
}

inline std::vector<std::string_view> split_key(std::string_view key) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto sp = key.find(' ', start);
    if (sp == std::string_view::npos) {
      out.push_back(key.substr(start));
      return out;
    }
    out.push_back(key.substr(start, sp - start));
    start = sp + 1;
  }
}

// Key without its last token ("a b c" -> "a b"); empty for unigrams.
inline std::string_view key_context(std::string_view key) {
  auto sp = key.rfind(' ');
  return sp == std::string_view::npos ? std::string_view{} : key.substr(0, sp);
}

// Key without its first token ("a b c" -> "b c"); empty for unigrams.
inline std::string_view key_suffix(std::string_view key) {
  auto sp = key.find(' ');
  return sp == std::string_view::npos ? std::string_view{} : key.substr(sp + 1);
}

inline std::string_view key_last(std::string_view key) {
  auto sp = key.rfind(' ');
  return sp == std::string_view::npos ? key : key.substr(sp + 1);
}

inline int key_order(std::string_view key) {
  int n = 1;
  for (char c : key) n += (c == ' ');
  return n;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_TOKENS_HPP_
