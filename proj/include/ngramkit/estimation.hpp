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

#ifndef NGRAMKIT_ESTIMATION_HPP_
#define NGRAMKIT_ESTIMATION_HPP_

// Interpolated absolute discounting:
//
//   P(w|h) = (C(hw) - D_m) / C(h) + D_m * N(h) / C(h) * P(w|h')
//
// with N(h) the number of explicit continuations of h and h' the context
// without its oldest word. The unigram level interpolates with the uniform
// distribution over the vocabulary. Backoff weights are then solved so every
// context distribution sums to one over the explicit entries that survived
// thresholding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ngramkit/counting.hpp"
#include "ngramkit/error.hpp"
#include "ngramkit/model.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

struct SmoothingConfig {
  // Empty: automatic per-order discount. One value: used for every order.
  // Otherwise one value per order. Explicit values must lie in (0, 1).
  std::vector<double> discounts;
};

// D = n1 / (n1 + 2 n2), clamped to [0.1, 0.9]. With no singletons or
// doubletons at all the lower clamp is used.
inline double auto_discount(std::uint64_t n1, std::uint64_t n2) {
  if (n1 + n2 == 0) return 0.1;
  const double d = static_cast<double>(n1) / (static_cast<double>(n1) + 2.0 * n2);
  return std::clamp(d, 0.1, 0.9);
}

inline std::vector<double> resolve_discounts(const NGramCountTable& table,
                                             const SmoothingConfig& cfg) {
  const auto n = static_cast<std::size_t>(table.order);
  std::vector<double> d;
  if (cfg.discounts.empty()) {
    for (std::size_t m = 0; m < n; ++m) {
      const auto& coc = m < table.count_of_counts.size()
                            ? table.count_of_counts[m]
                            : std::array<std::uint64_t, 4>{};
      d.push_back(auto_discount(coc[0], coc[1]));
    }
    return d;
  }
  if (cfg.discounts.size() == 1) {
    d.assign(n, cfg.discounts[0]);
  } else if (cfg.discounts.size() == n) {
    d = cfg.discounts;
  } else {
    throw ConfigError("expected 1 or " + std::to_string(n) +
                      " discounts, got " +
                      std::to_string(cfg.discounts.size()));
  }
  for (double x : d) {
    if (!(x > 0.0 && x < 1.0)) {
      throw ConfigError("discount must lie in (0, 1), got " +
                        std::to_string(x));
    }
  }
  return d;
}

// Unsmoothed C(gram) / C(context).
inline double mle_prob(const NGramCountTable& table,
                       std::span<const std::string> gram) {
  if (gram.empty() || gram.size() > static_cast<std::size_t>(table.order)) {
    throw ConfigError("n-gram length outside table order");
  }
  const auto key = join_key(gram);
  const auto context = key_context(key);
  const auto denom = table.context_count(context);
  if (denom == 0) {
    throw DataError("zero-count context '" + std::string(context) + "'");
  }
  const auto num = table.find(static_cast<int>(gram.size()), key).value_or(0);
  return static_cast<double>(num) / static_cast<double>(denom);
}

// `extra_vocabulary` (typically the lexicon) is added to the vocabulary so
// that models trained on different corpora share one word set.
inline BackoffModel estimate_model(
    const NGramCountTable& table, const SmoothingConfig& cfg,
    std::span<const std::string> extra_vocabulary = {}) {
  if (table.empty()) throw DataError("cannot estimate from an empty table");
  const auto discounts = resolve_discounts(table, cfg);
  const int n = table.order;

  auto entries_at = [&](int m) {
    std::vector<const CountEntry*> out;
    for (const auto& e : table.grams[m - 1]) out.push_back(&e);
    for (const auto& e : table.dropped_contexts[m - 1]) out.push_back(&e);
    return out;
  };

  std::set<std::string, std::less<>> vocab{std::string(kEos),
                                           std::string(kUnk)};
  for (int m = 1; m <= n; ++m) {
    for (const auto* e : entries_at(m)) {
      for (auto t : split_key(e->key)) {
        if (t != kBos) vocab.emplace(t);
      }
    }
  }
  for (const auto& w : extra_vocabulary) {
    if (w != kBos) vocab.insert(w);
  }
  if (vocab.size() < 2) throw DataError("degenerate vocabulary");

  BackoffModel model(n);

  // Unigrams.
  {
    std::unordered_map<std::string_view, std::uint64_t> counts;
    double total = 0.0;
    for (const auto* e : entries_at(1)) {
      counts[e->key] = e->count;
      total += static_cast<double>(e->count);
    }
    const double d = discounts[0];
    const double uniform = 1.0 / static_cast<double>(vocab.size());
    const double lambda =
        total > 0 ? d * static_cast<double>(counts.size()) / total : 1.0;
    for (const auto& w : vocab) {
      double p = lambda * uniform;
      if (auto it = counts.find(w); it != counts.end()) {
        p += std::max(static_cast<double>(it->second) - d, 0.0) / total;
      }
      model.set(w, {std::log10(p), std::nullopt});
    }
    model.set(std::string(kBos), {kLog10Zero, std::nullopt});
  }

  for (int m = 2; m <= n; ++m) {
    const auto entries = entries_at(m);
    struct ContextStats {
      std::uint64_t children = 0;
      std::uint64_t child_total = 0;
    };
    std::unordered_map<std::string_view, ContextStats> stats;
    for (const auto* e : entries) {
      auto& s = stats[key_context(e->key)];
      ++s.children;
      s.child_total += e->count;
    }
    const double d = discounts[m - 1];
    std::vector<std::pair<std::string, double>> probs;
    probs.reserve(entries.size());
    for (const auto* e : entries) {
      const auto ctx = key_context(e->key);
      const auto& s = stats[ctx];
      // Tables read back from thresholded count files may lack exact context
      // counts; never let C(h) fall below the mass of its continuations.
      const double ch = static_cast<double>(
          std::max(table.context_count(ctx), s.child_total));
      const double lower = std::pow(10.0, model.score_key(key_suffix(e->key)));
      const double p = (static_cast<double>(e->count) - d) / ch +
                       d * static_cast<double>(s.children) / ch * lower;
      probs.emplace_back(e->key, std::log10(p));
    }
    for (auto& [key, lp] : probs) model.set(std::move(key), {lp, std::nullopt});
    recompute_backoffs_at(model, m - 1);
  }
  return model;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_ESTIMATION_HPP_
