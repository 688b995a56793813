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

// Acceptance suite. Prints one "criterion N: PASS|FAIL" line per criterion.

#include <fcntl.h>
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"
#include "ngramkit/ngramkit.hpp"
#include "oracles.hpp"

namespace ngramkit {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const std::string kData = NGRAMKIT_TEST_DATA;
const std::string kKjv = NGRAMKIT_KJV_DIR;
const std::string kCli = NGRAMKIT_CLI_PATH;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void Note(const std::string& what) { std::printf("    %s\n", what.c_str()); }

std::string Fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

// Largest normalization error over the empty context and `samples` random
// contexts drawn from the model's own entries. Exhaustive when samples is 0.
double NormalizationError(const BackoffModel& m, std::size_t samples,
                          std::uint64_t seed) {
  if (samples == 0) return oracle::max_normalization_error(m);
  const auto vocab = oracle::predicted_words(m);
  std::vector<std::string> contexts{""};
  std::mt19937_64 rng(seed);
  for (int o = 1; o < m.order(); ++o) {
    auto keys = m.sorted_keys(o);
    std::erase(keys, std::string(kEos));
    std::shuffle(keys.begin(), keys.end(), rng);
    keys.resize(std::min(keys.size(), samples));
    contexts.insert(contexts.end(), keys.begin(), keys.end());
  }
  double worst = 0;
  for (const auto& c : contexts) {
    std::vector<std::string_view> h;
    if (!c.empty()) h = split_key(c);
    long double sum = 0;
    for (const auto& w : vocab) sum += std::pow(10.0L, m.log10_prob_view(h, w));
    worst = std::max(worst, static_cast<double>(std::fabs(sum - 1.0L)));
  }
  return worst;
}

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
      if (e.log10_backoff) d = std::max(d, std::fabs(*e.log10_backoff - *f->log10_backoff));
    }
  }
  return d;
}

BackoffModel RoundTrip(const BackoffModel& m) {
  std::stringstream ss;
  write_arpa(m, ss);
  return read_arpa(ss);
}

TEST(Acceptance, Criterion1_CountingOracle) {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t spilled = 0, max_tokens = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t vocab = 2 + rng() % 499;
    const std::size_t sentences = 100 + rng() % 14000;
    auto corpus = oracle::random_corpus(rng, sentences, vocab, 12, 0.9);
    const auto tokens = oracle::token_count(corpus);
    ASSERT_LE(tokens, 100000u);
    max_tokens = std::max(max_tokens, tokens);
    const int order = 1 + i % 5;
    const auto want = oracle::as_grams(oracle::naive_counts(corpus, order), order);
    for (std::uint64_t budget : {kMinMemoryBudget, std::uint64_t{1} << 30}) {
      CountOptions opts;
      opts.memory_budget = budget;
      NGramCounter counter(order, opts);
      for (const auto& s : corpus) counter.add(s);
      spilled += counter.spill_count() > 0;
      const auto got = counter.finish();
      ASSERT_EQ(got.grams, want) << "corpus " << i << " budget " << budget;
    }
  }
  const double secs = Seconds(start);
  Note("50 corpora, up to " + std::to_string(max_tokens) + " tokens; " +
       std::to_string(spilled) + " counts spilled to disk; " + Fmt("%.1f s", secs));
  EXPECT_GT(spilled, 0u);
  EXPECT_LT(secs, 60.0);
}

TEST(Acceptance, Criterion2_Normalization) {
  std::mt19937_64 rng(1002);
  double worst = 0;
  int checked = 0;
  for (int i = 0; i < 8; ++i) {
    const int order = 2 + i % 3;
    auto corpus = oracle::random_corpus(rng, 300 + 100 * i, 40 + 20 * i);
    auto table = count_ngrams(corpus, order);
    if (i % 2) table = apply_thresholds(table, ThresholdConfig::default_for(order));
    const auto m = estimate_model(table, {});
    ASSERT_LE(oracle::predicted_words(m).size(), 200u);
    worst = std::max(worst, oracle::max_normalization_error(m));
    ++checked;
    for (double theta : {1e-6, 1e-4}) {
      worst = std::max(worst, oracle::max_normalization_error(prune(m, theta)));
      ++checked;
    }
  }
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto f = oracle::make_merge_fixture(2000 + seed, 2 + seed);
    const auto out =
        export_static(f.models, InterpolationWeights::uniform(f.models.size()));
    worst = std::max(worst, oracle::max_normalization_error(out));
    ++checked;
  }
  Note(std::to_string(checked) + " models, worst |sum - 1| = " + Fmt("%.3g", worst));
  EXPECT_LE(worst, 1e-6);
}

TEST(Acceptance, Criterion3_ArpaRoundTrip) {
  std::mt19937_64 rng(1003);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto m = oracle::random_model(rng, 1 + i % 5, 5 + rng() % 60);
    worst = std::max(worst, MaxDiff(m, RoundTrip(m)));
  }
  Note("100 random models, worst |delta log10| = " + Fmt("%.3g", worst));
  EXPECT_LE(worst, 1e-6);

  std::ifstream ref_in(kData + "/kenlm/reference.json");
  const auto ref = nlohmann::json::parse(ref_in);
  const auto m = read_arpa(fs::path(kData + "/kenlm/model.arpa"));
  const auto test = read_segmented(fs::path(kData + "/kenlm/test.txt"));
  const auto r = perplexity(m, test);
  const double want = ref["perplexity_including_oovs"].get<double>();
  Note("external toolkit fixture: ppl " + Fmt("%.10g", r.perplexity) + " vs " +
       Fmt("%.10g", want));
  EXPECT_NEAR(r.perplexity, want, 1e-3);
}

BackoffModel PruneFixture() {
  std::mt19937_64 rng(1004);
  auto corpus = oracle::random_corpus(rng, 60, 15, 8);
  return estimate_model(count_ngrams(corpus, 3), {});
}

TEST(Acceptance, Criterion4_Pruning) {
  std::mt19937_64 rng(1014);
  auto big = estimate_model(count_ngrams(oracle::random_corpus(rng, 3000, 150), 3), {});
  std::size_t prev = big.size();
  std::string sizes;
  for (int i = 0; i < 10; ++i) {
    const double theta = i == 0 ? 0.0 : std::pow(10.0, -8 + 0.75 * i);
    const auto p = prune(big, theta);
    EXPECT_LE(p.size(), prev) << theta;
    prev = p.size();
    sizes += std::to_string(p.size()) + " ";
  }
  Note("theta sweep entry counts: " + sizes);
  EXPECT_EQ(oracle::entry_set(prune(big, 0.0)), oracle::entry_set(big));

  const auto m = PruneFixture();
  ASSERT_LE(m.size(), 500u);
  std::map<std::string, double> loo;
  std::vector<double> values;
  for (int o = 2; o <= 3; ++o) {
    for (const auto& [k, e] : m.level(o)) {
      loo[k] = oracle::loo_delta(m, k);
      values.push_back(loo[k]);
    }
  }
  std::sort(values.begin(), values.end());
  int compared = 0;
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    std::size_t i = static_cast<std::size_t>(q * (values.size() - 1));
    while (i + 1 < values.size() && values[i + 1] - values[i] < 1e-12) ++i;
    ASSERT_LT(i + 1, values.size());
    const double theta = 0.5 * (values[i] + values[i + 1]);
    EXPECT_EQ(oracle::entry_set(prune(m, theta)), oracle::loo_retained(m, theta, loo))
        << "theta " << theta;
    ++compared;
  }
  Note(std::to_string(m.size()) + "-entry fixture, retained sets compared at " +
       std::to_string(compared) + " thresholds");
}

TEST(Acceptance, Criterion5_Merging) {
  double corner_err = 0;
  for (std::size_t k = 2; k <= 4; ++k) {
    auto f = oracle::make_merge_fixture(3000 + k, k);
    MixtureObjective obj(f.models, f.validation);
    for (std::size_t i = 0; i < k; ++i) {
      const double single = perplexity(f.models[i], f.validation).perplexity;
      corner_err = std::max(
          corner_err,
          std::fabs(obj.perplexity(InterpolationWeights::corner(k, i)) - single) / single);
    }
  }
  Note("corner vs single-model ppl, worst relative error " + Fmt("%.3g", corner_err));
  EXPECT_LE(corner_err, 1e-9);

  const std::size_t ks[] = {2, 3, 4, 2, 3};
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto f = oracle::make_merge_fixture(4000 + s, ks[s]);
    MixtureObjective obj(f.models, f.validation);
    const auto em = optimize_weights_em(obj);
    EXPECT_TRUE(em.converged);
    for (std::size_t i = 1; i < em.perplexity_history.size(); ++i) {
      EXPECT_LE(em.perplexity_history[i], em.perplexity_history[i - 1] * (1 + 1e-12));
    }
    const double em_ppl = obj.perplexity(em.weights);
    BOConfig cfg;
    cfg.budget = 50;
    cfg.seed = s;
    const auto start = Clock::now();
    const auto bo = optimize_weights_bo(obj, cfg);
    const double secs = Seconds(start);
    const double gap = bo.perplexity / em_ppl - 1;
    Note("fixture " + std::to_string(s) + " k=" + std::to_string(ks[s]) + ": EM ppl " +
         Fmt("%.6g", em_ppl) + " in " + std::to_string(em.iterations) +
         " iterations, BO ppl " + Fmt("%.6g", bo.perplexity) + " (gap " +
         Fmt("%.3f%%", 100 * gap) + ", " + Fmt("%.2f s", secs) + ")");
    EXPECT_EQ(bo.trace.size(), 50u);
    EXPECT_LE(gap, 0.02);
    EXPECT_LT(secs, 120.0);
  }
}

TEST(Acceptance, Criterion6_Perplexity) {
  std::vector<Sentence> toy{{{"a", "b"}}, {{"a"}}};
  const auto m = estimate_model(count_ngrams(toy, 2), {{0.75}});
  const double l1 = 0.75 * 3 / 5.0;
  const double pa = 1.25 / 5 + l1 / 4, pb = 0.25 / 5 + l1 / 4, peos = pa;
  const double product = (1.25 / 2 + 0.375 * pa) * (0.125 + 0.75 * pb) * (0.25 + 0.75 * peos) *
                         (1.25 / 2 + 0.375 * pa) * (0.125 + 0.75 * peos);
  const double want = std::pow(product, -1.0 / 5);
  const double got = perplexity(m, toy).perplexity;
  Note("toy ppl " + Fmt("%.15g", got) + " vs hand " + Fmt("%.15g", want));
  EXPECT_NEAR(got, want, 1e-9);

  std::mt19937_64 rng(1006);
  auto lm = estimate_model(count_ngrams(oracle::random_corpus(rng, 1000, 80), 3), {});
  auto eval = oracle::random_corpus(rng, 700, 90);
  auto tripled = eval;
  for (int i = 0; i < 2; ++i) tripled.insert(tripled.end(), eval.begin(), eval.end());
  const double once = perplexity(lm, eval).perplexity;
  const double thrice = perplexity(lm, tripled).perplexity;
  Note("duplication: relative change " + Fmt("%.3g", std::fabs(thrice - once) / once));
  EXPECT_NEAR(once, thrice, 1e-12 * once);

  for (std::size_t v : {10u, 100u, 1000u, 10000u}) {
    BackoffModel u(1);
    for (std::size_t i = 0; i + 2 < v; ++i) {
      u.set("w" + std::to_string(i), {std::log10(1.0 / v), std::nullopt});
    }
    u.set("</s>", {std::log10(1.0 / v), std::nullopt});
    u.set("<unk>", {std::log10(1.0 / v), std::nullopt});
    auto text = oracle::random_corpus(rng, 50, v - 2);
    EXPECT_EQ(perplexity(u, text).perplexity, static_cast<double>(v)) << v;
  }
}

TEST(Acceptance, Criterion7_Segmentation) {
  std::mt19937_64 rng(1007);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "北", "京", "大", "学", "é"};
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  int cases = 0, with_space = 0;
  for (int i = 0; i < 10000; ++i) {
    std::set<std::string> words;
    const std::size_t nwords = 1 + rng() % 12;
    while (words.size() < nwords) {
      std::string w;
      for (std::size_t l = 1 + rng() % 5; l > 0; --l) w += alphabet[pick(rng)];
      words.insert(w);
    }
    const auto lex = Lexicon::from_words({words.begin(), words.end()});
    std::string raw, squeezed;
    const bool spaces = i % 2;
    for (std::size_t l = rng() % 25; l > 0; --l) {
      if (spaces && rng() % 6 == 0) {
        raw += rng() % 2 ? " " : "　";
      } else {
        const auto& c = alphabet[pick(rng)];
        raw += c;
        squeezed += c;
      }
    }
    with_space += spaces;
    const auto got = segment_fmm_pieces(raw, lex);
    const auto want = oracle::brute_force_fmm(raw, words);
    ASSERT_EQ(got.size(), want.size()) << raw;
    std::string joined;
    for (std::size_t j = 0; j < got.size(); ++j) {
      ASSERT_EQ(got[j].text, want[j].text) << raw;
      ASSERT_EQ(got[j].oov, want[j].oov) << raw;
      joined += got[j].text;
    }
    ASSERT_EQ(joined, squeezed) << raw;
    if (!spaces) {
      ASSERT_EQ(joined, raw);
    }
    // <unk> tokens stand for exactly the pieces marked oov.
    const auto tokens = segment_fmm(raw, lex).tokens;
    for (std::size_t j = 0; j < got.size(); ++j) {
      ASSERT_EQ(tokens[j], got[j].oov ? std::string(kUnk) : std::string(got[j].text));
    }
    ++cases;
  }
  Note(std::to_string(cases) + " strings (" + std::to_string(with_space) +
       " with whitespace) match the brute-force oracle");
}

TEST(Acceptance, Criterion8_KeywordAugmentation) {
  const auto corpus = read_segmented(fs::path(kData + "/keywords/corpus.txt"));
  ASSERT_EQ(corpus.size(), 100u);
  std::ifstream spec_in(kData + "/keywords/spec.tsv");
  const auto spec = read_keyword_spec(spec_in);
  const auto r = augment_keywords(corpus, spec, kDefaultMaxDupPerSentence);
  const auto bad =
      oracle::keyword_violations(corpus, spec, r, kDefaultMaxDupPerSentence);
  for (const auto& b : bad) ADD_FAILURE() << b;
  std::string summary;
  for (const auto& e : r.report.entries) {
    summary += e.keyword + " " + std::to_string(e.before) + "->" +
               std::to_string(e.after) + " (" + to_string(e.status) + ") ";
  }
  Note(summary);
  EXPECT_TRUE(bad.empty());
}

struct ChildRun {
  int status;
  double seconds;
  long max_rss_kib;
};

ChildRun RunChild(const std::vector<std::string>& args, const std::string& log) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 2, log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  pid_t pid;
  const auto start = Clock::now();
  if (posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ) != 0) {
    posix_spawn_file_actions_destroy(&actions);
    return {-1, 0, 0};
  }
  posix_spawn_file_actions_destroy(&actions);
  int status = 0;
  struct rusage usage {};
  wait4(pid, &status, 0, &usage);
  return {status, Seconds(start), usage.ru_maxrss};
}

TEST(Acceptance, Criterion9_EndToEnd) {
  const fs::path dir = fs::temp_directory_path() /
                       ("ngramkit_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto arpa = (dir / "kjv.arpa").string();
  const auto run = RunChild({kCli, "train", "--lexicon", kKjv + "/lexicon.txt", "--input",
                             kKjv + "/corpus.txt", "--order", "3", "--min-count",
                             "1,4,4", "--output", arpa},
                            (dir / "train.log").string());
  ASSERT_TRUE(WIFEXITED(run.status) && WEXITSTATUS(run.status) == 0)
      << "train failed, log in " << dir;
  Note("train: " + Fmt("%.1f s", run.seconds) + ", peak RSS " +
       Fmt("%.1f MiB", run.max_rss_kib / 1024.0));
  EXPECT_LT(run.seconds, 300.0);
  EXPECT_LT(run.max_rss_kib, 1024L * 1024);

  const auto m = read_arpa(fs::path(arpa));
  EXPECT_TRUE(validate_model(m).empty());
  // The same pipeline in-process, so the written file can be checked against
  // the model it serializes.
  const auto lex = load_lexicon(fs::path(kKjv + "/lexicon.txt"), LexiconFormat::kWordOnly);
  std::vector<Sentence> corpus;
  std::ifstream raw(kKjv + "/corpus.txt");
  for (std::string line; std::getline(raw, line);) {
    if (filter_sentence(line, lex).keep) corpus.push_back(segment_fmm(line, lex));
  }
  const auto table = apply_thresholds(count_ngrams(corpus, 3), {{1, 4, 4}});
  const auto direct = estimate_model(table, {}, lex.sorted_words());
  Note(std::to_string(table.total_tokens) + " predicted tokens; model entries " +
       std::to_string(m.size(1)) + "/" + std::to_string(m.size(2)) + "/" +
       std::to_string(m.size(3)));
  const double norm = NormalizationError(m, 1000, 9);
  const double direct_norm = NormalizationError(direct, 1000, 9);
  const double rt = MaxDiff(direct, m);
  Note("normalization over 2001 sampled contexts: file " + Fmt("%.3g", norm) +
       ", in memory " + Fmt("%.3g", direct_norm) + "; file vs in-memory model: " +
       Fmt("%.3g", rt));
  EXPECT_LE(norm, 1e-6);
  EXPECT_LE(direct_norm, 1e-6);
  EXPECT_LE(rt, 1e-6);
  fs::remove_all(dir);
}

// Prints the per-criterion verdict lines.
class CriterionPrinter : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    static const std::regex re("Criterion(\\d+)_(.*)");
    std::smatch m;
    const std::string name = info.name();
    if (!std::regex_match(name, m, re)) return;
    const bool ok = info.result()->Passed();
    std::printf("criterion %s: %s  %s (%.1f s)\n", m[1].str().c_str(),
                ok ? "PASS" : "FAIL", m[2].str().c_str(),
                info.result()->elapsed_time() / 1000.0);
    std::fflush(stdout);
    verdicts_.emplace_back(m[1].str() + (ok ? " PASS" : " FAIL"));
  }
  void OnTestProgramEnd(const ::testing::UnitTest&) override {
    std::printf("\nacceptance summary:");
    for (const auto& v : verdicts_) std::printf(" [%s]", v.c_str());
    std::printf("\n");
  }

 private:
  std::vector<std::string> verdicts_;
};

}  // namespace
}  // namespace ngramkit

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::UnitTest::GetInstance()->listeners().Append(
      new ngramkit::CriterionPrinter);
  return RUN_ALL_TESTS();
}
