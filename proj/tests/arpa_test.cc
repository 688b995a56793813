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

#include "ngramkit/arpa.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"
#include "ngramkit/corpus.hpp"
#include "ngramkit/evaluation.hpp"
#include "oracles.hpp"

namespace ngramkit {
namespace {

const std::string kData = NGRAMKIT_TEST_DATA;

std::string Write(const BackoffModel& m) {
  std::ostringstream out;
  write_arpa(m, out);
  return out.str();
}

BackoffModel Read(const std::string& text) {
  std::istringstream in(text);
  return read_arpa(in);
}

// Largest absolute difference over probabilities and backoffs; infinity on
// any structural mismatch.
double MaxDiff(const BackoffModel& a, const BackoffModel& b) {
  if (a.order() != b.order()) return INFINITY;
  double d = 0;
  for (int o = 1; o <= a.order(); ++o) {
    if (a.size(o) != b.size(o)) return INFINITY;
    for (const auto& [k, e] : a.level(o)) {
      const auto* f = b.find(o, k);
      if (!f || e.log10_backoff.has_value() != f->log10_backoff.has_value()) {
        return INFINITY;
      }
      d = std::max(d, std::fabs(e.log10_prob - f->log10_prob));
      if (e.log10_backoff) {
        d = std::max(d, std::fabs(*e.log10_backoff - *f->log10_backoff));
      }
    }
  }
  return d;
}

TEST(ArpaTest, UnigramOnlyLayout) {
  BackoffModel m(1);
  m.set("a", {-0.5, std::nullopt});
  m.set("</s>", {-0.6, std::nullopt});
  m.set("<unk>", {-1.25, std::nullopt});
  const auto text = Write(m);
  EXPECT_EQ(text,
            "\n\\data\\\nngram 1=3\n\n\\1-grams:\n"
            "-0.6\t</s>\n-1.25\t<unk>\n-0.5\ta\n\n\\end\\\n");
  EXPECT_EQ(Read(text), m);
}

TEST(ArpaTest, RandomRoundTripAndDeterminism) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 25; ++i) {
    auto m = oracle::random_model(rng, 1 + i % 5, 10 + i * 3);
    const auto text = Write(m);
    EXPECT_EQ(text, Write(m));
    auto back = Read(text);
    EXPECT_LE(MaxDiff(m, back), 1e-6);
    EXPECT_EQ(Write(back), text);
  }
}

TEST(ArpaTest, HeaderCountMismatch) {
  const std::string text =
      "\\data\\\nngram 1=2\nngram 2=5\n\n\\1-grams:\n-1\ta\t0\n-1\tb\n\n"
      "\\2-grams:\n-1\ta a\n-1\ta b\n-1\ta c\n-1\ta d\n\n\\end\\\n";
  try {
    Read(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 15u);
  }
}

TEST(ArpaTest, StructuralErrors) {
  const std::string head = "\\data\\\nngram 1=1\n\n\\1-grams:\n";
  EXPECT_THROW(Read(head + "-1\ta\n"), ParseError);                 // no \end\ .
  EXPECT_THROW(Read(head + "-1\ta\n-1\ta\n\\end\\\n"), ParseError);  // duplicate
  EXPECT_THROW(Read(head + "x\ta\n\\end\\\n"), ParseError);         // bad number
  EXPECT_THROW(Read(head + "-1\ta b\n\\end\\\n"), ParseError);      // arity
  EXPECT_THROW(Read("\\data\\\nngram 2=1\n"), ParseError);          // skips order 1
  EXPECT_THROW(Read("\\data\\\nngram 1=1\nngram 2=0\n\n\\2-grams:\n\\end\\\n"),
               ParseError);
  EXPECT_THROW(Read("no data section\n"), ParseError);
  EXPECT_THROW(Read(head + "-1\ta\n\\end\\\n-2\tb\n"), ParseError);
  EXPECT_NO_THROW(Read("preamble text\n" + head + "-1\ta\n\n\\end\\\n\n"));
}

TEST(ArpaTest, MissingFileIsIoError) {
  EXPECT_THROW(read_arpa(std::filesystem::path("/nonexistent.arpa")), IoError);
}

TEST(ArpaTest, ExternalToolkitFixture) {
  auto m = read_arpa(std::filesystem::path(kData + "/kenlm/model.arpa"));
  EXPECT_EQ(m.order(), 3);
  EXPECT_EQ(m.size(1), 1442u);
  EXPECT_EQ(m.size(3), 11682u);
  std::ifstream ref_in(kData + "/kenlm/reference.json");
  const auto ref = nlohmann::json::parse(ref_in);
  const auto test = read_segmented(std::filesystem::path(kData + "/kenlm/test.txt"));
  const auto report = perplexity(m, test);
  EXPECT_EQ(report.tokens, ref["tokens"].get<std::uint64_t>());
  EXPECT_EQ(report.oov_tokens, ref["oovs"].get<std::uint64_t>());
  EXPECT_NEAR(report.perplexity, ref["perplexity_including_oovs"].get<double>(), 1e-3);
  EXPECT_NEAR(report.log10_prob_sum, ref["log10_prob_sum"].get<double>(), 1e-3);
}

}  // namespace
}  // namespace ngramkit
