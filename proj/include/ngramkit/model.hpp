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

#ifndef NGRAMKIT_MODEL_HPP_
#define NGRAMKIT_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ngramkit/error.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

// ARPA's stand-in for log10(0), used for the <s> unigram.
inline constexpr double kLog10Zero = -99.0;

struct NGramEntry {
  double log10_prob = 0.0;
  // Present iff the entry is the context of at least one higher-order entry.
  std::optional<double> log10_backoff;

  bool operator==(const NGramEntry&) const = default;
};

// Backoff n-gram model: per order, n-gram key -> (log10 P, log10 backoff).
class BackoffModel {
 public:
  using Level = std::unordered_map<std::string, NGramEntry, StringHash,
                                   std::equal_to<>>;

  BackoffModel() = default;
  explicit BackoffModel(int order) : levels_(order) {
    if (order < 1) throw ConfigError("model order must be positive");
  }

  int order() const { return static_cast<int>(levels_.size()); }

  Level& level(int m) { return levels_.at(m - 1); }
  const Level& level(int m) const { return levels_.at(m - 1); }

  const NGramEntry* find(int m, std::string_view key) const {
    if (m < 1 || m > order()) return nullptr;
    const auto& lv = levels_[m - 1];
    auto it = lv.find(key);
    return it == lv.end() ? nullptr : &it->second;
  }
  const NGramEntry* find(std::string_view key) const {
    return find(key_order(key), key);
  }

  void set(std::string key, NGramEntry entry) {
    const int m = key_order(key);
    if (m > order()) throw ConfigError("n-gram longer than model order");
    levels_[m - 1].insert_or_assign(std::move(key), entry);
  }

  bool erase(std::string_view key) {
    const int m = key_order(key);
    if (m > order()) return false;
    auto& lv = levels_[m - 1];
    auto it = lv.find(key);
    if (it == lv.end()) return false;
    lv.erase(it);
    return true;
  }

  bool contains_word(std::string_view word) const {
    return !levels_.empty() && levels_[0].find(word) != levels_[0].end();
  }

  std::size_t size(int m) const { return level(m).size(); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& lv : levels_) n += lv.size();
    return n;
  }

  std::vector<std::string> sorted_keys(int m) const {
    std::vector<std::string> keys;
    keys.reserve(level(m).size());
    for (const auto& [k, e] : level(m)) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  // Every unigram, including <s>.
  std::vector<std::string> vocabulary() const { return sorted_keys(1); }

  // Words that can be predicted: every unigram except <s>.
  std::vector<std::string> predicted_vocabulary() const {
    auto v = vocabulary();
    std::erase(v, std::string(kBos));
    return v;
  }

  // Backoff recursion over a key whose tokens are all in the vocabulary and
  // whose length does not exceed the order. The last token is the predicted
  // word; returns -inf only if that word is not a unigram.
  double score_key(std::string_view key) const {
    double backoff = 0.0;
    std::string_view rest = key;
    while (true) {
      const int m = key_order(rest);
      if (const auto* e = find(m, rest)) return backoff + e->log10_prob;
      if (m == 1) return -std::numeric_limits<double>::infinity();
      if (const auto* ctx = find(m - 1, key_context(rest))) {
        backoff += ctx->log10_backoff.value_or(0.0);
      }
      rest = key_suffix(rest);
    }
  }

  // log10 P(word | context). Unknown tokens are read as <unk>; the context
  // is truncated to the last order-1 tokens.
  template <typename Range>
  double log10_prob(const Range& context, std::string_view word) const {
    std::vector<std::string_view> ctx;
    for (const auto& t : context) ctx.emplace_back(t);
    return log10_prob_view(ctx, word);
  }

  double log10_prob_view(std::span<const std::string_view> context,
                         std::string_view word) const {
    const std::size_t keep =
        std::min<std::size_t>(context.size(), order() - 1);
    std::string key;
    for (std::size_t i = context.size() - keep; i < context.size(); ++i) {
      key.append(map_token(context[i]));
      key += ' ';
    }
    key.append(map_token(word));
    return score_key(key);
  }

  std::string_view map_token(std::string_view t) const {
    return contains_word(t) ? t : kUnk;
  }

  bool operator==(const BackoffModel&) const = default;

 private:
  std::vector<Level> levels_;
};

// Recomputes the backoff weights of every order-m entry so that each context
// distribution sums to one:
//   alpha(h) = (1 - sum_{w in S(h)} P(w|h)) / (1 - sum_{w in S(h)} P(w|h'))
// where S(h) is the set of explicit continuations of h and h' drops the
// oldest word. Entries heading nothing lose their backoff. Lower levels must
// already be final.
inline void recompute_backoffs_at(BackoffModel& model, int m) {
  if (m < 1 || m >= model.order()) return;
  struct Sums {
    double explicit_mass = 0.0;
    double lower_mass = 0.0;
    std::size_t children = 0;
  };
  std::unordered_map<std::string_view, Sums> sums;
  for (const auto& [key, e] : model.level(m + 1)) {
    auto& s = sums[key_context(key)];
    s.explicit_mass += std::pow(10.0, e.log10_prob);
    s.lower_mass += std::pow(10.0, model.score_key(key_suffix(key)));
    ++s.children;
  }
  const std::size_t vocab = model.predicted_vocabulary().size();
  std::vector<std::pair<std::string, double>> updates;
  for (const auto& [ctx, s] : sums) {
    if (!model.find(m, ctx)) {
      throw DataError("n-gram context '" + std::string(ctx) +
                      "' has no entry of its own");
    }
    if (s.children >= vocab) {
      updates.emplace_back(std::string(ctx), 0.0);
      continue;
    }
    const double num = 1.0 - s.explicit_mass;
    const double den = 1.0 - s.lower_mass;
    if (den < 1e-12) {
      throw DataError("backoff denominator below 1e-12 for context '" +
                      std::string(ctx) + "'");
    }
    if (num <= 0.0) {
      throw DataError("no probability mass left to back off for context '" +
                      std::string(ctx) + "'");
    }
    updates.emplace_back(std::string(ctx), std::log10(num / den));
  }
  for (auto& [key, e] : model.level(m)) e.log10_backoff.reset();
  for (const auto& [ctx, bo] : updates) {
    model.level(m).find(ctx)->second.log10_backoff = bo;
  }
}

inline void recompute_backoffs(BackoffModel& model) {
  for (int m = 1; m < model.order(); ++m) recompute_backoffs_at(model, m);
}

// Structural problems: missing contexts, non-finite values, missing <unk>.
inline std::vector<std::string> validate_model(const BackoffModel& model) {
  std::vector<std::string> problems;
  if (!model.contains_word(kUnk)) problems.emplace_back("no <unk> unigram");
  for (int m = 1; m <= model.order(); ++m) {
    for (const auto& [key, e] : model.level(m)) {
      if (!std::isfinite(e.log10_prob) || e.log10_prob > 0.0) {
        problems.push_back("bad probability for '" + key + "'");
      }
      if (e.log10_backoff && !std::isfinite(*e.log10_backoff)) {
        problems.push_back("bad backoff for '" + key + "'");
      }
      if (m >= 2) {
        const auto* ctx = model.find(m - 1, key_context(key));
        if (ctx == nullptr || !ctx->log10_backoff) {
          problems.push_back("context of '" + key + "' lacks a backoff entry");
        }
      }
    }
  }
  return problems;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_MODEL_HPP_
