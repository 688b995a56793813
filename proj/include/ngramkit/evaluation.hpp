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

#ifndef NGRAMKIT_EVALUATION_HPP_
#define NGRAMKIT_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ngramkit/error.hpp"
#include "ngramkit/model.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

// log10 P(word | context) under the standard backoff recursion.
template <typename Range>
double query(const BackoffModel& model, const Range& context,
             std::string_view word) {
  return model.log10_prob(context, word);
}

struct PerplexityReport {
  std::uint64_t tokens = 0;  // predicted positions, </s> included
  std::uint64_t oov_tokens = 0;
  double log10_prob_sum = 0.0;
  double perplexity = 0.0;
};

inline nlohmann::json to_json(const PerplexityReport& r) {
  return {{"tokens", r.tokens},
          {"oov_tokens", r.oov_tokens},
          {"log10_prob_sum", r.log10_prob_sum},
          {"perplexity", r.perplexity}};
}

// Visits every predicted position of `sentence` (words then </s>) with its
// truncated context; `fn(context, word)` gets string_views.
template <typename Fn>
void for_each_position(std::span<const std::string> sentence, int order,
                       Fn&& fn) {
  std::vector<std::string_view> padded;
  padded.reserve(sentence.size() + 2);
  padded.push_back(kBos);
  for (const auto& t : sentence) padded.push_back(t);
  padded.push_back(kEos);
  const std::size_t ctx_len = static_cast<std::size_t>(std::max(order - 1, 0));
  for (std::size_t p = 1; p < padded.size(); ++p) {
    const std::size_t begin = p > ctx_len ? p - ctx_len : 0;
    fn(std::span<const std::string_view>(padded.data() + begin, p - begin),
       padded[p]);
  }
}

namespace detail {

struct PartialScore {
  std::uint64_t tokens = 0;
  std::uint64_t oov = 0;
  long double log10_sum = 0.0L;
};

inline PartialScore score_sentences(const BackoffModel& model,
                                    std::span<const Sentence> sentences) {
  PartialScore out;
  const bool has_unk = model.contains_word(kUnk);
  for (const auto& s : sentences) {
    if (s.tokens.empty()) continue;
    for_each_position(s.tokens, model.order(),
                      [&](std::span<const std::string_view> ctx,
                          std::string_view w) {
                        if (w == kUnk || !model.contains_word(w)) {
                          if (!has_unk) {
                            throw DataError(
                                "model has no <unk> entry to score '" +
                                std::string(w) + "'");
                          }
                          ++out.oov;
                        }
                        out.log10_sum += model.log10_prob_view(ctx, w);
                        ++out.tokens;
                      });
  }
  return out;
}

}  // namespace detail

// Sentences are scored in fixed-size chunks whose partial sums are reduced in
// chunk order, so the result does not depend on `threads`.
inline PerplexityReport perplexity(const BackoffModel& model,
                                   std::span<const Sentence> corpus,
                                   unsigned threads = 1) {
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (corpus.size() + kChunk - 1) / kChunk;
  std::vector<detail::PartialScore> partial(chunks);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t c = first; c < chunks; c += stride) {
      const std::size_t lo = c * kChunk;
      const std::size_t hi = std::min(corpus.size(), lo + kChunk);
      partial[c] = detail::score_sentences(model, corpus.subspan(lo, hi - lo));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, chunks ? chunks : 1));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  detail::PartialScore total;
  for (const auto& p : partial) {
    total.tokens += p.tokens;
    total.oov += p.oov;
    total.log10_sum += p.log10_sum;
  }
  if (total.tokens == 0) throw DataError("empty evaluation corpus");
  PerplexityReport r;
  r.tokens = total.tokens;
  r.oov_tokens = total.oov;
  r.log10_prob_sum = static_cast<double>(total.log10_sum);
  r.perplexity = static_cast<double>(
      std::pow(10.0L, -total.log10_sum / static_cast<long double>(total.tokens)));
  return r;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_EVALUATION_HPP_
