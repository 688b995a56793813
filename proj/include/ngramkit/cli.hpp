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

#ifndef NGRAMKIT_CLI_HPP_
#define NGRAMKIT_CLI_HPP_

// Subcommand driver behind the `ngramkit` executable. Exit codes: 0 success,
// 1 usage or configuration error, 2 data or I/O error.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ngramkit/arpa.hpp"
#include "ngramkit/corpus.hpp"
#include "ngramkit/counting.hpp"
#include "ngramkit/error.hpp"
#include "ngramkit/estimation.hpp"
#include "ngramkit/evaluation.hpp"
#include "ngramkit/keyword.hpp"
#include "ngramkit/merging.hpp"
#include "ngramkit/pruning.hpp"

namespace ngramkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// "16M", "1G", "1GiB", "512k", "1048576".
inline std::uint64_t parse_size(const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad size '" + text + "'");
  }
  std::string suffix = text.substr(used);
  for (auto& c : suffix) c = static_cast<char>(std::toupper(c));
  if (suffix.ends_with("IB")) suffix.resize(suffix.size() - 2);
  else if (suffix.size() > 1 && suffix.ends_with("B")) suffix.pop_back();
  double mult = 1;
  if (suffix.empty() || suffix == "B") mult = 1;
  else if (suffix == "K") mult = 1024.0;
  else if (suffix == "M") mult = 1024.0 * 1024;
  else if (suffix == "G") mult = 1024.0 * 1024 * 1024;
  else if (suffix == "T") mult = 1024.0 * 1024 * 1024 * 1024;
  else throw ConfigError("bad size suffix in '" + text + "'");
  if (value < 0) throw ConfigError("negative size '" + text + "'");
  return static_cast<std::uint64_t>(value * mult);
}

// Stage timing as JSON lines on stderr.
class StageLog {
 public:
  StageLog(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}

  class Stage {
   public:
    Stage(StageLog& log, std::string name)
        : log_(log), name_(std::move(name)),
          start_(std::chrono::steady_clock::now()) {}
    void done(nlohmann::json extra = nlohmann::json::object()) {
      const auto ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start_)
                          .count();
      extra["stage"] = name_;
      extra["elapsed_ms"] = ms;
      log_.emit(extra);
    }

   private:
    StageLog& log_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
  };

  Stage stage(std::string name) { return Stage(*this, std::move(name)); }

  void emit(const nlohmann::json& j) {
    if (!quiet_) err_ << j.dump() << '\n';
  }

 private:
  std::ostream& err_;
  bool quiet_;
};

struct Options {
  bool json = false;
  bool quiet = false;
  unsigned threads = 1;

  std::string lexicon;
  std::string lexicon_format = "word";
  std::vector<std::string> inputs;
  bool segmented = false;
  bool no_filter = false;
  std::string output;
  int order = 3;
  std::vector<std::uint64_t> min_count;
  std::string memory = "1G";
  std::string temp_dir;
  std::string discount = "auto";

  std::string model;
  std::vector<std::string> models;
  double theta = 0.0;

  std::vector<std::string> validation;
  std::string method = "bo";
  std::size_t budget = 50;
  std::size_t init_points = 0;
  std::uint64_t seed = 0;
  double tol = 1e-7;
  std::size_t max_iter = 1000;
  std::string trace;

  std::vector<double> weights;
  std::string weights_file;

  std::string keywords;
  std::size_t max_dup = kDefaultMaxDupPerSentence;
  std::string report;
};

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

inline LexiconFormat lexicon_format(const std::string& s) {
  if (s == "word") return LexiconFormat::kWordOnly;
  if (s == "word+pron") return LexiconFormat::kWordPronunciation;
  throw ConfigError("unknown lexicon format '" + s + "'");
}

inline std::optional<Lexicon> maybe_lexicon(const Options& o) {
  if (o.lexicon.empty()) return std::nullopt;
  return load_lexicon(std::filesystem::path(o.lexicon),
                      lexicon_format(o.lexicon_format));
}

// Reads sentences from `paths`; raw text is segmented when a lexicon is
// given, otherwise lines are whitespace-tokenized.
inline std::vector<Sentence> load_sentences(const std::vector<std::string>& paths,
                                            const Lexicon* lexicon) {
  std::vector<Sentence> out;
  for (const auto& p : paths) {
    auto in = open_in(p);
    if (lexicon) {
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(segment_fmm(line, *lexicon));
      }
    } else {
      for (auto& s : read_segmented(in)) out.push_back(std::move(s));
    }
  }
  return out;
}

inline SmoothingConfig smoothing(const std::string& text) {
  SmoothingConfig cfg;
  if (text == "auto") return cfg;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      cfg.discounts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad discount '" + item + "'");
    }
  }
  return cfg;
}

inline ThresholdConfig thresholds(const Options& o) {
  if (o.min_count.empty()) return ThresholdConfig::default_for(o.order);
  ThresholdConfig cfg{o.min_count};
  if (cfg.min_count.size() != static_cast<std::size_t>(o.order)) {
    throw ConfigError("--min-count needs one value per order");
  }
  return cfg;
}

inline CountOptions count_options(const Options& o) {
  CountOptions c;
  c.memory_budget = parse_size(o.memory);
  if (!o.temp_dir.empty()) c.temp_dir = o.temp_dir;
  return c;
}

inline nlohmann::json entry_counts(const BackoffModel& m) {
  auto j = nlohmann::json::object();
  for (int i = 1; i <= m.order(); ++i) j[std::to_string(i)] = m.size(i);
  return j;
}

inline std::vector<BackoffModel> load_models(const std::vector<std::string>& paths,
                                             StageLog& log) {
  auto st = log.stage("load-models");
  std::vector<BackoffModel> models;
  for (const auto& p : paths) models.push_back(read_arpa(std::filesystem::path(p)));
  st.done({{"models", paths.size()}});
  return models;
}

}  // namespace detail

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"ngramkit: n-gram language model toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file with option values");
    app.add_flag("--json", o_.json, "Print machine-readable JSON to stdout");
    app.add_flag("--quiet", o_.quiet, "Suppress JSON-lines stage log on stderr");
    app.add_option("--threads", o_.threads, "Worker thread cap")
        ->check(CLI::Range(1u, 1024u));

    auto* segment = app.add_subcommand("segment", "Filter and segment raw text");
    add_lexicon(segment, true);
    segment->add_option("--input", o_.inputs, "Raw text files")->required();
    segment->add_option("--output", o_.output, "Segmented output")->required();
    segment->add_flag("--no-filter", o_.no_filter,
                      "Keep sentences with uncovered characters");

    auto* count = app.add_subcommand("count", "Count n-grams");
    count->add_option("--input", o_.inputs, "Segmented text files")->required();
    add_count_options(count);
    count->add_option("--output", o_.output, "Count file")->required();

    auto* train = app.add_subcommand("train", "Train an ARPA model");
    add_lexicon(train, false);
    train->add_option("--input", o_.inputs, "Text files")->required();
    train->add_flag("--segmented", o_.segmented,
                    "Input is already whitespace-segmented");
    train->add_flag("--no-filter", o_.no_filter,
                    "Keep sentences with uncovered characters");
    add_count_options(train);
    train->add_option("--discount", o_.discount,
                      "'auto' or one value / one value per order in (0,1)");
    train->add_option("--output", o_.output, "ARPA output")->required();

    auto* prune_cmd = app.add_subcommand("prune", "Relative-entropy pruning");
    prune_cmd->add_option("--model", o_.model, "Input ARPA")->required();
    prune_cmd->add_option("--theta,--prune", o_.theta, "Pruning threshold")
        ->required()
        ->check(CLI::NonNegativeNumber);
    prune_cmd->add_option("--output", o_.output, "Pruned ARPA")->required();

    auto* ppl = app.add_subcommand("ppl", "Perplexity of a model on text");
    ppl->add_option("--model", o_.model, "ARPA model")->required();
    ppl->add_option("--input", o_.inputs, "Evaluation text")->required();
    add_lexicon(ppl, false);

    auto* mopt = app.add_subcommand("merge-optimize",
                                    "Optimize mixture weights on validation text");
    mopt->add_option("--model", o_.models, "ARPA models (k >= 2)")->required();
    mopt->add_option("--validation", o_.validation, "Validation text")->required();
    add_lexicon(mopt, false);
    mopt->add_option("--method", o_.method, "bo or em")
        ->check(CLI::IsMember({"bo", "em"}));
    mopt->add_option("--budget", o_.budget, "BO evaluation budget");
    mopt->add_option("--init-points", o_.init_points,
                     "BO initial design size (0: 2k+1)");
    mopt->add_option("--seed", o_.seed, "BO seed");
    mopt->add_option("--tol", o_.tol, "EM tolerance");
    mopt->add_option("--max-iter", o_.max_iter, "EM iteration cap");
    mopt->add_option("--trace", o_.trace, "BO trace output (JSON lines)");
    mopt->add_option("--output", o_.output, "Weights JSON output");

    auto* mexp = app.add_subcommand("merge-export", "Write a static mixture ARPA");
    mexp->add_option("--model", o_.models, "ARPA models")->required();
    auto* wopt = mexp->add_option("--weights", o_.weights, "Comma-separated weights")
                     ->delimiter(',');
    auto* wfile = mexp->add_option("--weights-file", o_.weights_file,
                                   "Weights JSON from merge-optimize");
    wopt->excludes(wfile);
    mexp->add_option("--output", o_.output, "ARPA output")->required();

    auto* kw = app.add_subcommand("keyword-augment",
                                  "Duplicate or remove keyword sentences");
    kw->add_option("--input", o_.inputs, "Segmented corpus")->required();
    kw->add_option("--keywords", o_.keywords, "keyword<TAB>target file")->required();
    add_lexicon(kw, false);
    kw->add_option("--max-dup", o_.max_dup, "Copies allowed per sentence");
    kw->add_option("--output", o_.output, "Augmented corpus")->required();
    kw->add_option("--report", o_.report, "Report JSON output");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitUsage;
    }

    StageLog log(err_, o_.quiet);
    try {
      if (*segment) return do_segment(log);
      if (*count) return do_count(log);
      if (*train) return do_train(log);
      if (*prune_cmd) return do_prune(log);
      if (*ppl) return do_ppl(log);
      if (*mopt) return do_merge_optimize(log);
      if (*mexp) return do_merge_export(log);
      if (*kw) return do_keyword(log);
    } catch (const ConfigError& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitData;
    }
    return kExitUsage;
  }

 private:
  void add_lexicon(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--lexicon", o_.lexicon, "Lexicon file");
    if (required) opt->required();
    cmd->add_option("--lexicon-format", o_.lexicon_format, "word or word+pron")
        ->check(CLI::IsMember({"word", "word+pron"}));
  }

  void add_count_options(CLI::App* cmd) {
    cmd->add_option("--order", o_.order, "N-gram order")->check(CLI::Range(1, kMaxOrder));
    cmd->add_option("--min-count", o_.min_count,
                    "Per-order minimum counts, e.g. 1,4,4")
        ->delimiter(',');
    cmd->add_option("--memory", o_.memory, "Counting memory budget (>= 16M)");
    cmd->add_option("--temp-dir", o_.temp_dir, "Directory for spill files");
  }

  void print(const nlohmann::json& j) { out_ << j.dump(2) << '\n'; }

  int do_segment(StageLog& log) {
    auto st = log.stage("segment");
    const auto lex = detail::maybe_lexicon(o_);
    auto out = detail::open_out(o_.output);
    std::uint64_t seen = 0, kept = 0, dropped = 0, oov = 0;
    for (const auto& path : o_.inputs) {
      auto in = detail::open_in(path);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++seen;
        if (!o_.no_filter && !filter_sentence(line, *lex).keep) {
          ++dropped;
          continue;
        }
        auto s = segment_fmm(line, *lex);
        for (const auto& t : s.tokens) oov += (t == kUnk);
        write_sentence(out, s);
        ++kept;
      }
    }
    if (!out) throw IoError("failed writing " + o_.output);
    nlohmann::json summary{{"sentences", seen}, {"kept", kept},
                           {"dropped", dropped}, {"oov_tokens", oov}};
    st.done(summary);
    if (o_.json) print(summary);
    return kExitOk;
  }

  int do_count(StageLog& log) {
    auto st = log.stage("count");
    NGramCounter counter(o_.order, detail::count_options(o_));
    for (const auto& path : o_.inputs) {
      auto in = detail::open_in(path);
      for (const auto& s : read_segmented(in)) counter.add(s);
    }
    const auto spills = counter.spill_count();
    auto table = counter.finish();
    if (!o_.min_count.empty()) table = apply_thresholds(table, detail::thresholds(o_));
    auto out = detail::open_out(o_.output);
    write_counts(table, out);
    nlohmann::json summary{{"sentences", table.total_sentences},
                           {"tokens", table.total_tokens},
                           {"entries", table.size()},
                           {"spills", spills}};
    st.done(summary);
    if (o_.json) print(summary);
    return kExitOk;
  }

  int do_train(StageLog& log) {
    const auto lex = detail::maybe_lexicon(o_);
    if (!lex && !o_.segmented) {
      throw ConfigError("train needs --lexicon unless --segmented is given");
    }
    const auto thresholds = detail::thresholds(o_);
    const auto smoothing = detail::smoothing(o_.discount);

    auto st_count = log.stage("count");
    NGramCounter counter(o_.order, detail::count_options(o_));
    std::uint64_t seen = 0, dropped = 0;
    for (const auto& path : o_.inputs) {
      auto in = detail::open_in(path);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++seen;
        if (o_.segmented) {
          auto s = split_sentence(line);
          for (const auto& t : s.tokens) {
            if (t == kBos || t == kEos) {
              throw ParseError(lineno, path + ": boundary marker in corpus");
            }
          }
          counter.add(s);
          continue;
        }
        if (!o_.no_filter && !filter_sentence(line, *lex).keep) {
          ++dropped;
          continue;
        }
        counter.add(segment_fmm(line, *lex));
      }
    }
    const auto spills = counter.spill_count();
    auto table = counter.finish();
    st_count.done({{"sentences", seen},
                   {"dropped", dropped},
                   {"tokens", table.total_tokens},
                   {"entries", table.size()},
                   {"spills", spills}});

    auto st_thr = log.stage("threshold");
    table = apply_thresholds(table, thresholds);
    st_thr.done({{"entries", table.size()}});

    auto st_est = log.stage("estimate");
    const auto discounts = resolve_discounts(table, smoothing);
    std::vector<std::string> vocab;
    if (lex) vocab = lex->sorted_words();
    const auto model = estimate_model(table, smoothing, vocab);
    st_est.done({{"discounts", discounts}});

    auto st_write = log.stage("write-arpa");
    const auto bytes = write_arpa(model, std::filesystem::path(o_.output));
    st_write.done({{"bytes", bytes}});

    if (o_.json) {
      print({{"sentences", seen},
             {"dropped", dropped},
             {"tokens", table.total_tokens},
             {"discounts", discounts},
             {"entries", detail::entry_counts(model)},
             {"bytes", bytes}});
    }
    return kExitOk;
  }

  int do_prune(StageLog& log) {
    const auto model = detail::load_models({o_.model}, log).front();
    auto st = log.stage("prune");
    PruneStats stats;
    const auto pruned = prune(model, o_.theta, &stats);
    const auto bytes = write_arpa(pruned, std::filesystem::path(o_.output));
    nlohmann::json summary{{"theta", o_.theta},
                           {"before", detail::entry_counts(model)},
                           {"after", detail::entry_counts(pruned)},
                           {"removed", stats.removed},
                           {"bytes", bytes}};
    st.done(summary);
    if (o_.json) print(summary);
    return kExitOk;
  }

  int do_ppl(StageLog& log) {
    const auto model = detail::load_models({o_.model}, log).front();
    const auto lex = detail::maybe_lexicon(o_);
    auto st = log.stage("ppl");
    const auto corpus = detail::load_sentences(o_.inputs, lex ? &*lex : nullptr);
    const auto report = perplexity(model, corpus, o_.threads);
    st.done(to_json(report));
    print(to_json(report));
    return kExitOk;
  }

  int do_merge_optimize(StageLog& log) {
    if (o_.models.size() < 2) throw ConfigError("merge-optimize needs >= 2 models");
    const auto models = detail::load_models(o_.models, log);
    const auto lex = detail::maybe_lexicon(o_);
    const auto validation =
        detail::load_sentences(o_.validation, lex ? &*lex : nullptr);
    auto st_obj = log.stage("score-validation");
    const MixtureObjective objective(models, validation, o_.threads);
    st_obj.done({{"positions", objective.positions()}});

    auto st_em = log.stage("em");
    const auto em = optimize_weights_em(objective, o_.tol, o_.max_iter);
    st_em.done({{"iterations", em.iterations},
                {"converged", em.converged},
                {"ppl", em.perplexity_history.back()}});
    if (!em.converged) {
      log.emit({{"warning", "EM did not converge"}, {"iterations", em.iterations}});
    }
    const double em_ppl = objective.perplexity(em.weights);

    nlohmann::json result{{"method", o_.method}};
    if (o_.method == "em") {
      result["weights"] = em.weights.values();
      result["ppl"] = em_ppl;
      result["iterations"] = em.iterations;
      result["converged"] = em.converged;
    } else {
      auto st_bo = log.stage("bo");
      BOConfig cfg;
      cfg.budget = o_.budget;
      cfg.init_points = o_.init_points;
      cfg.seed = o_.seed;
      const auto bo = optimize_weights_bo(objective, cfg);
      st_bo.done({{"evaluations", bo.trace.size()}, {"ppl", bo.perplexity}});
      result["weights"] = bo.weights.values();
      result["ppl"] = bo.perplexity;
      result["evaluations"] = bo.trace.size();
      result["em_reference"] = {{"weights", em.weights.values()}, {"ppl", em_ppl}};
      if (!o_.trace.empty()) {
        auto out = detail::open_out(o_.trace);
        write_trace(bo.trace, out);
      }
    }
    if (!o_.output.empty()) {
      auto out = detail::open_out(o_.output);
      out << result.dump(2) << '\n';
    }
    print(result);
    return kExitOk;
  }

  int do_merge_export(StageLog& log) {
    const auto models = detail::load_models(o_.models, log);
    std::vector<double> w = o_.weights;
    if (!o_.weights_file.empty()) {
      auto in = detail::open_in(o_.weights_file);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
        w = j.at("weights").get<std::vector<double>>();
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad weights file: ") + e.what());
      }
    }
    if (w.empty()) throw ConfigError("merge-export needs --weights or --weights-file");
    auto st = log.stage("merge-export");
    const auto merged = export_static(models, InterpolationWeights(w));
    const auto bytes = write_arpa(merged, std::filesystem::path(o_.output));
    nlohmann::json summary{{"entries", detail::entry_counts(merged)}, {"bytes", bytes}};
    st.done(summary);
    if (o_.json) print(summary);
    return kExitOk;
  }

  int do_keyword(StageLog& log) {
    const auto lex = detail::maybe_lexicon(o_);
    auto spec_in = detail::open_in(o_.keywords);
    const auto spec = read_keyword_spec(spec_in, lex ? &*lex : nullptr);
    const auto corpus = detail::load_sentences(o_.inputs, nullptr);
    auto st = log.stage("keyword-augment");
    const auto result = augment_keywords(corpus, spec, o_.max_dup);
    auto out = detail::open_out(o_.output);
    for (const auto& s : result.corpus) write_sentence(out, s);
    if (!out) throw IoError("failed writing " + o_.output);
    const auto report = to_json(result.report);
    if (!o_.report.empty()) {
      auto rep = detail::open_out(o_.report);
      rep << report.dump(2) << '\n';
    }
    st.done({{"sentences_in", corpus.size()}, {"sentences_out", result.corpus.size()}});
    if (o_.json) print(report);
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  Options o_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  return Runner(out, err).run(argc, argv);
}

}  // namespace ngramkit::cli

#endif  // NGRAMKIT_CLI_HPP_
