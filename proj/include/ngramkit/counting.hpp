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

#ifndef NGRAMKIT_COUNTING_HPP_
#define NGRAMKIT_COUNTING_HPP_

// N-gram counting under a memory budget, with sorted on-disk runs and a k-way
// merge when the in-memory working set outgrows the budget.

#include <stdlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ngramkit/error.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

inline constexpr int kMaxOrder = 5;
inline constexpr std::uint64_t kMinMemoryBudget = std::uint64_t{16} << 20;

struct CountEntry {
  std::string key;
  std::uint64_t count;

  bool operator==(const CountEntry&) const = default;
};

// Per-order counts over boundary-marked sentences. Every sentence
// w1..wN contributes the predicted positions w1..wN,</s>; <s> is context only.
// Entries of each order are sorted bytewise by key.
struct NGramCountTable {
  int order = 0;
  std::vector<std::vector<CountEntry>> grams;
  // Raw counts of m-grams removed by thresholding that are still needed as
  // the context of a retained higher-order entry.
  std::vector<std::vector<CountEntry>> dropped_contexts;
  std::uint64_t total_sentences = 0;
  std::uint64_t total_tokens = 0;
  // Count-of-counts n1..n4 per order, taken before any thresholding.
  std::vector<std::array<std::uint64_t, 4>> count_of_counts;

  const std::vector<CountEntry>& at(int m) const { return grams.at(m - 1); }

  std::optional<std::uint64_t> find(int m, std::string_view key) const {
    if (m < 1 || m > order) return std::nullopt;
    for (const auto* list : {&grams[m - 1], &dropped_contexts[m - 1]}) {
      auto it = std::lower_bound(
          list->begin(), list->end(), key,
          [](const CountEntry& e, std::string_view k) { return e.key < k; });
      if (it != list->end() && it->key == key) return it->count;
    }
    return std::nullopt;
  }

  // C(h) as the denominator of P(w|h): the empty context counts every
  // predicted position and the bare <s> context counts sentences.
  std::uint64_t context_count(std::string_view context) const {
    if (context.empty()) return total_tokens;
    if (context == kBos) return total_sentences;
    return find(key_order(context), context).value_or(0);
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& g : grams) n += g.size();
    return n;
  }
  bool empty() const { return size() == 0; }

  bool operator==(const NGramCountTable&) const = default;
};

namespace detail {

inline std::array<std::uint64_t, 4> count_of_counts(
    const std::vector<CountEntry>& entries) {
  std::array<std::uint64_t, 4> n{};
  for (const auto& e : entries) {
    if (e.count >= 1 && e.count <= 4) ++n[e.count - 1];
  }
  return n;
}

// Scratch directory removed (with its contents) on destruction.
class TempDir {
 public:
  explicit TempDir(const std::filesystem::path& parent) {
    std::string tmpl = (parent / "ngramkit-count-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw IoError("cannot create temporary directory in " + parent.string());
    }
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_run(const std::filesystem::path& file,
                      const std::vector<CountEntry>& entries,
                      const std::filesystem::path& dir) {
  std::ofstream out(file, std::ios::binary);
  for (const auto& e : entries) out << e.key << '\t' << e.count << '\n';
  out.flush();
  if (!out) throw IoError("failed writing spill file in " + dir.string());
}

class RunReader {
 public:
  explicit RunReader(const std::filesystem::path& file)
      : in_(file, std::ios::binary) {
    if (!in_) throw IoError("cannot reopen spill file " + file.string());
    advance();
  }

  bool done() const { return done_; }
  const CountEntry& current() const { return current_; }

  void advance() {
    std::string line;
    if (!std::getline(in_, line)) {
      done_ = true;
      return;
    }
    auto tab = line.rfind('\t');
    current_.key = line.substr(0, tab);
    current_.count = std::stoull(line.substr(tab + 1));
  }

 private:
  std::ifstream in_;
  CountEntry current_;
  bool done_ = false;
};

// k-way merge of sorted runs, summing equal keys.
inline std::vector<CountEntry> merge_runs(
    const std::vector<std::filesystem::path>& files) {
  std::vector<std::unique_ptr<RunReader>> readers;
  for (const auto& f : files) readers.push_back(std::make_unique<RunReader>(f));
  auto greater = [&](std::size_t a, std::size_t b) {
    const auto& ka = readers[a]->current().key;
    const auto& kb = readers[b]->current().key;
    return ka != kb ? ka > kb : a > b;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)>
      heap(greater);
  for (std::size_t i = 0; i < readers.size(); ++i) {
    if (!readers[i]->done()) heap.push(i);
  }
  std::vector<CountEntry> out;
  while (!heap.empty()) {
    auto i = heap.top();
    heap.pop();
    const auto& e = readers[i]->current();
    if (!out.empty() && out.back().key == e.key) {
      out.back().count += e.count;
    } else {
      out.push_back(e);
    }
    readers[i]->advance();
    if (!readers[i]->done()) heap.push(i);
  }
  return out;
}

}  // namespace detail

struct CountOptions {
  std::uint64_t memory_budget = std::uint64_t{1} << 30;
  // In-memory counts allowed before spilling a sorted run; 0 means half of
  // memory_budget. Must not exceed memory_budget.
  std::uint64_t working_set_limit = 0;
  // Where spill runs go; empty means the system temporary directory.
  std::filesystem::path temp_dir;
};

// Streaming counter. Results are exact and identical for every budget.
class NGramCounter {
 public:
  NGramCounter(int order, CountOptions options)
      : order_(order), options_(std::move(options)), live_(order) {
    if (order < 1 || order > kMaxOrder) {
      throw ConfigError("order must be in [1, " + std::to_string(kMaxOrder) +
                        "], got " + std::to_string(order));
    }
    if (options_.memory_budget < kMinMemoryBudget) {
      throw ConfigError("memory budget " +
                        std::to_string(options_.memory_budget) +
                        " bytes is below the 16 MiB floor");
    }
    if (options_.working_set_limit == 0) {
      options_.working_set_limit = options_.memory_budget / 2;
    }
    if (options_.working_set_limit > options_.memory_budget) {
      throw ConfigError("working set limit exceeds memory budget");
    }
    if (options_.temp_dir.empty()) {
      options_.temp_dir = std::filesystem::temp_directory_path();
    }
  }

  void add(std::span<const std::string> tokens) {
    if (tokens.empty()) return;
    ++sentences_;
    const std::size_t n = tokens.size();
    auto at = [&](std::size_t i) -> std::string_view {
      // Padded view: 0 is <s>, n + 1 is </s>.
      if (i == 0) return kBos;
      if (i == n + 1) return kEos;
      return tokens[i - 1];
    };
    std::string key;
    for (std::size_t p = 1; p <= n + 1; ++p) {
      ++tokens_;
      const std::size_t max_m = std::min<std::size_t>(order_, p + 1);
      key.assign(at(p));
      for (std::size_t m = 1; m <= max_m; ++m) {
        if (m > 1) key.insert(0, std::string(at(p - m + 1)) + ' ');
        auto [it, inserted] = live_[m - 1].try_emplace(key, 0);
        ++it->second;
        if (inserted) live_bytes_ += kNodeBytes + key.size();
      }
    }
    if (live_bytes_ > options_.working_set_limit) spill();
  }

  void add(const Sentence& s) { add(std::span<const std::string>(s.tokens)); }

  std::size_t spill_count() const { return spills_; }

  NGramCountTable finish() {
    NGramCountTable table;
    table.order = order_;
    table.total_sentences = sentences_;
    table.total_tokens = tokens_;
    table.grams.resize(order_);
    table.dropped_contexts.resize(order_);
    if (spills_ > 0) {
      spill();
      for (int m = 1; m <= order_; ++m) {
        table.grams[m - 1] = detail::merge_runs(runs_[m - 1]);
      }
      scratch_.reset();
      runs_.clear();
    } else {
      for (int m = 1; m <= order_; ++m) {
        table.grams[m - 1] = drain_sorted(live_[m - 1]);
      }
    }
    for (const auto& g : table.grams) {
      table.count_of_counts.push_back(detail::count_of_counts(g));
    }
    live_bytes_ = 0;
    return table;
  }

 private:
  // Approximate per-entry footprint of an unordered_map<string, uint64_t>
  // node plus its bucket slot.
  static constexpr std::uint64_t kNodeBytes = 96;

  using LiveMap = std::unordered_map<std::string, std::uint64_t>;

  static std::vector<CountEntry> drain_sorted(LiveMap& live) {
    std::vector<CountEntry> out;
    out.reserve(live.size());
    for (auto& [k, c] : live) out.push_back({k, c});
    live = LiveMap();
    std::sort(out.begin(), out.end(),
              [](const CountEntry& a, const CountEntry& b) {
                return a.key < b.key;
              });
    return out;
  }

  void spill() {
    if (!scratch_) {
      scratch_ = std::make_unique<detail::TempDir>(options_.temp_dir);
      runs_.resize(order_);
    }
    for (int m = 1; m <= order_; ++m) {
      auto entries = drain_sorted(live_[m - 1]);
      auto file = scratch_->path() / ("run-" + std::to_string(m) + "-" +
                                      std::to_string(spills_) + ".txt");
      detail::write_run(file, entries, scratch_->path());
      runs_[m - 1].push_back(file);
    }
    live_bytes_ = 0;
    ++spills_;
  }

  int order_;
  CountOptions options_;
  std::vector<LiveMap> live_;
  std::uint64_t live_bytes_ = 0;
  std::uint64_t sentences_ = 0;
  std::uint64_t tokens_ = 0;
  std::size_t spills_ = 0;
  std::unique_ptr<detail::TempDir> scratch_;
  std::vector<std::vector<std::filesystem::path>> runs_;
};

template <typename SentenceRange>
NGramCountTable count_ngrams(const SentenceRange& sentences, int order,
                             const CountOptions& options = {}) {
  NGramCounter counter(order, options);
  for (const auto& s : sentences) counter.add(s);
  return counter.finish();
}

// min_count[m-1] is the smallest count an m-gram needs to be retained.
struct ThresholdConfig {
  std::vector<std::uint64_t> min_count;

  // Keep every unigram; require count >= 4 (i.e. > 3) above that.
  static ThresholdConfig default_for(int order) {
    ThresholdConfig cfg;
    cfg.min_count.assign(order, 4);
    cfg.min_count[0] = 1;
    return cfg;
  }
};

inline NGramCountTable apply_thresholds(const NGramCountTable& table,
                                        const ThresholdConfig& cfg) {
  if (cfg.min_count.size() < static_cast<std::size_t>(table.order)) {
    throw ConfigError("threshold config covers " +
                      std::to_string(cfg.min_count.size()) +
                      " orders but the table has " +
                      std::to_string(table.order));
  }
  for (auto c : cfg.min_count) {
    if (c == 0) throw ConfigError("min_count must be positive");
  }
  NGramCountTable out;
  out.order = table.order;
  out.total_sentences = table.total_sentences;
  out.total_tokens = table.total_tokens;
  out.count_of_counts = table.count_of_counts;
  out.grams.resize(table.order);
  out.dropped_contexts.resize(table.order);
  std::unordered_set<std::string, StringHash, std::equal_to<>> needed;
  for (int m = table.order; m >= 1; --m) {
    std::unordered_set<std::string, StringHash, std::equal_to<>> next_needed;
    auto require_context = [&](const std::string& key) {
      auto ctx = key_context(key);
      if (!ctx.empty() && ctx != kBos) next_needed.emplace(ctx);
    };
    for (const auto& e : table.at(m)) {
      if (e.count >= cfg.min_count[m - 1]) {
        out.grams[m - 1].push_back(e);
        require_context(e.key);
      } else if (needed.count(e.key)) {
        out.dropped_contexts[m - 1].push_back(e);
        require_context(e.key);
      }
    }
    // Contexts restored from a previous call stay restored.
    for (const auto& e : table.dropped_contexts[m - 1]) {
      if (needed.count(e.key)) {
        out.dropped_contexts[m - 1].push_back(e);
        require_context(e.key);
      }
    }
    std::sort(out.dropped_contexts[m - 1].begin(),
              out.dropped_contexts[m - 1].end(),
              [](const CountEntry& a, const CountEntry& b) {
                return a.key < b.key;
              });
    needed = std::move(next_needed);
  }
  return out;
}

// Count file: one "token_1 ... token_m<TAB>count" line per entry, orders
// ascending, keys sorted bytewise within an order.
inline void write_counts(const NGramCountTable& table, std::ostream& out) {
  for (const auto& order : table.grams) {
    for (const auto& e : order) out << e.key << '\t' << e.count << '\n';
  }
  if (!out) throw IoError("failed writing counts");
}

// Inverse of write_counts. Sentence and token totals are recovered from the
// </s> unigram and the unigram sum, which is exact for unthresholded tables.
inline NGramCountTable read_counts(std::istream& in) {
  NGramCountTable table;
  table.grams.resize(kMaxOrder);
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(lineno, "expected 'ngram<TAB>count'");
    }
    std::string key = line.substr(0, tab);
    std::uint64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad count");
    }
    if (count == 0) throw ParseError(lineno, "count must be positive");
    const int m = key_order(key);
    if (m > kMaxOrder) throw ParseError(lineno, "n-gram order above 5");
    if (!seen.insert(key).second) throw ParseError(lineno, "duplicate n-gram");
    table.order = std::max(table.order, m);
    table.grams[m - 1].push_back({std::move(key), count});
  }
  table.grams.resize(table.order);
  table.dropped_contexts.resize(table.order);
  for (auto& g : table.grams) {
    std::sort(g.begin(), g.end(), [](const CountEntry& a, const CountEntry& b) {
      return a.key < b.key;
    });
    table.count_of_counts.push_back(detail::count_of_counts(g));
  }
  if (table.order > 0) {
    for (const auto& e : table.grams[0]) table.total_tokens += e.count;
    table.total_sentences = table.find(1, kEos).value_or(0);
  }
  return table;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_COUNTING_HPP_
