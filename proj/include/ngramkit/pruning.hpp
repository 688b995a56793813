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

#ifndef NGRAMKIT_PRUNING_HPP_
#define NGRAMKIT_PRUNING_HPP_

// Relative-entropy pruning. Removing the explicit entry (h, w) sends w to the
// backoff distribution of h and rescales the backoff weight of h from
// alpha to alpha'. The resulting change in the model, weighted by the
// marginal probability of h, is
//
//   delta = P(h) * [ P(w|h) * log10(P(w|h) / P'(w|h))
//                  + B(h) * log10(alpha / alpha') ]
//
// where P'(w|h) = alpha' * P(w|h') and B(h) is the mass h originally gave to
// backed-off words. This is the exact KL divergence between the conditional
// distributions at h before and after the removal. Entries with delta below
// the threshold are removed in a single pass, all deltas taken against the
// input model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ngramkit/error.hpp"
#include "ngramkit/model.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

namespace detail {

struct ContextMass {
  double explicit_mass = 0.0;  // sum over explicit w of P(w|h)
  double lower_mass = 0.0;     // sum over explicit w of P(w|h')
  std::size_t children = 0;
};

// Marginal probability of a context under the model, chaining the model's
// own conditionals. A leading <s> has probability one.
class ContextMarginals {
 public:
  explicit ContextMarginals(const BackoffModel& model) : model_(model) {}

  double operator()(std::string_view context) {
    if (context.empty()) return 1.0;
    if (auto it = cache_.find(context); it != cache_.end()) return it->second;
    double p;
    const auto prefix = key_context(context);
    if (prefix.empty()) {
      p = context == kBos ? 1.0 : std::pow(10.0, model_.score_key(context));
    } else {
      p = (*this)(prefix) * std::pow(10.0, model_.score_key(backoff_key(context)));
    }
    cache_.emplace(std::string(context), p);
    return p;
  }

 private:
  // score_key needs a key no longer than the model order.
  std::string_view backoff_key(std::string_view key) const {
    while (key_order(key) > model_.order()) key = key_suffix(key);
    return key;
  }

  const BackoffModel& model_;
  std::unordered_map<std::string, double, StringHash, std::equal_to<>> cache_;
};

}  // namespace detail

struct PruneDelta {
  std::string key;
  double delta;
};

// Relative-entropy increase of removing each entry of order >= 2 on its own,
// sorted by key within each order, orders ascending.
inline std::vector<PruneDelta> relative_entropy_deltas(
    const BackoffModel& model) {
  std::vector<PruneDelta> out;
  detail::ContextMarginals marginal(model);
  for (int m = 2; m <= model.order(); ++m) {
    std::unordered_map<std::string_view, detail::ContextMass> mass;
    for (const auto& [key, e] : model.level(m)) {
      auto& s = mass[key_context(key)];
      s.explicit_mass += std::pow(10.0, e.log10_prob);
      s.lower_mass += std::pow(10.0, model.score_key(key_suffix(key)));
      ++s.children;
    }
    for (const auto& key : model.sorted_keys(m)) {
      const auto ctx = key_context(key);
      const auto& s = mass[ctx];
      const double p = std::pow(10.0, model.find(m, key)->log10_prob);
      const double q = std::pow(10.0, model.score_key(key_suffix(key)));
      const double num = std::max(1.0 - s.explicit_mass, 0.0);
      const double den = std::max(1.0 - s.lower_mass, 0.0);
      const double alpha_new = (num + p) / (den + q);
      double d = p * (std::log10(p) - std::log10(alpha_new * q));
      if (num > 1e-15 && den > 0.0) {
        d += num * (std::log10(num / den) - std::log10(alpha_new));
      }
      d *= marginal(ctx);
      out.push_back({key, std::max(d, 0.0)});
    }
  }
  return out;
}

struct PruneStats {
  std::size_t considered = 0;
  std::size_t removed = 0;
};

// Removes every entry of order >= 2 whose delta is below `theta` and which is
// not the context of a retained higher-order entry; orders are visited from
// the highest down so a context can go once its last child has gone.
// Unigrams are never removed. Backoff weights are recomputed afterwards.
inline BackoffModel prune(const BackoffModel& model, double theta,
                          PruneStats* stats = nullptr) {
  if (!(theta >= 0.0)) {
    throw ConfigError("prune threshold must be nonnegative");
  }
  std::unordered_map<std::string, double, StringHash, std::equal_to<>> delta;
  for (auto& d : relative_entropy_deltas(model)) {
    delta.emplace(std::move(d.key), d.delta);
  }
  BackoffModel out = model;
  PruneStats local;
  for (int m = model.order(); m >= 2; --m) {
    std::unordered_set<std::string_view> heads;
    if (m < model.order()) {
      for (const auto& [key, e] : out.level(m + 1)) heads.insert(key_context(key));
    }
    std::vector<std::string> doomed;
    for (const auto& [key, e] : out.level(m)) {
      if (heads.count(key)) continue;
      ++local.considered;
      if (delta.find(key)->second < theta) doomed.push_back(key);
    }
    for (const auto& key : doomed) out.erase(key);
    local.removed += doomed.size();
  }
  recompute_backoffs(out);
  if (stats) *stats = local;
  return out;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_PRUNING_HPP_
