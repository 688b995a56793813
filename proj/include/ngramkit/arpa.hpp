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

#ifndef NGRAMKIT_ARPA_HPP_
#define NGRAMKIT_ARPA_HPP_

// ARPA text serialization.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ngramkit/error.hpp"
#include "ngramkit/model.hpp"
#include "ngramkit/tokens.hpp"
#include "ngramkit/utf8.hpp"

namespace ngramkit {

inline std::string format_log10(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.7g", x);
  return buf;
}

// Writes `model` with entries sorted bytewise within each order. Returns the
// number of bytes written.
inline std::size_t write_arpa(const BackoffModel& model, std::ostream& out) {
  std::size_t bytes = 0;
  auto emit = [&](const std::string& s) {
    out << s;
    bytes += s.size();
  };
  emit("\n\\data\\\n");
  for (int m = 1; m <= model.order(); ++m) {
    emit("ngram " + std::to_string(m) + "=" + std::to_string(model.size(m)) +
         "\n");
  }
  for (int m = 1; m <= model.order(); ++m) {
    emit("\n\\" + std::to_string(m) + "-grams:\n");
    std::string line;
    for (const auto& key : model.sorted_keys(m)) {
      const auto& e = *model.find(m, key);
      line = format_log10(e.log10_prob);
      line += '\t';
      line += key;
      if (e.log10_backoff) {
        line += '\t';
        line += format_log10(*e.log10_backoff);
      }
      line += '\n';
      emit(line);
    }
  }
  emit("\n\\end\\\n");
  out.flush();
  if (!out) throw IoError("failed writing ARPA output");
  return bytes;
}

inline std::size_t write_arpa(const BackoffModel& model,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return write_arpa(model, out);
}

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' ||
                        s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  return s;
}

}  // namespace detail

// Parses ARPA text. Lines before \data\ are ignored. Validates the header
// counts, rejects duplicate n-grams and requires \end\.
inline BackoffModel read_arpa(std::istream& in) {
  enum class State { kPreamble, kHeader, kBody, kDone };
  State state = State::kPreamble;
  std::map<int, std::size_t> declared;
  BackoffModel model;
  int section = 0;
  std::size_t section_entries = 0;
  std::string raw;
  std::size_t lineno = 0;

  auto close_section = [&](std::size_t at_line) {
    if (section == 0) return;
    if (section_entries != declared[section]) {
      throw ParseError(at_line, "header declares ngram " +
                                    std::to_string(section) + "=" +
                                    std::to_string(declared[section]) +
                                    " but section has " +
                                    std::to_string(section_entries) +
                                    " entries");
    }
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = detail::trim(raw);
    switch (state) {
      case State::kPreamble:
        if (line == "\\data\\") state = State::kHeader;
        break;
      case State::kHeader: {
        if (line.empty() && declared.empty()) break;
        if (line.starts_with("ngram ")) {
          auto eq = line.find('=');
          if (eq == std::string_view::npos) {
            throw ParseError(lineno, "malformed ngram count line");
          }
          auto m = detail::parse_double(detail::trim(line.substr(6, eq - 6)));
          auto c = detail::parse_double(detail::trim(line.substr(eq + 1)));
          if (!m || !c || *m < 1 || *m > 16 || *c < 0 ||
              *m != std::floor(*m) || *c != std::floor(*c)) {
            throw ParseError(lineno, "malformed ngram count line");
          }
          const int order = static_cast<int>(*m);
          if (order != static_cast<int>(declared.size()) + 1) {
            throw ParseError(lineno, "ngram counts must be listed in order");
          }
          declared[order] = static_cast<std::size_t>(*c);
          break;
        }
        if (line.empty()) break;
        if (declared.empty()) throw ParseError(lineno, "no ngram counts");
        model = BackoffModel(static_cast<int>(declared.size()));
        state = State::kBody;
        [[fallthrough]];
      }
      case State::kBody: {
        if (line.empty()) break;
        if (line == "\\end\\") {
          close_section(lineno);
          if (section != model.order()) {
            throw ParseError(lineno, "missing \\" +
                                         std::to_string(section + 1) +
                                         "-grams: section");
          }
          state = State::kDone;
          break;
        }
        if (line.front() == '\\') {
          const auto expect = "\\" + std::to_string(section + 1) + "-grams:";
          if (line != expect) {
            throw ParseError(lineno, "expected " + expect + ", got '" +
                                         std::string(line) + "'");
          }
          close_section(lineno);
          if (section + 1 > model.order()) {
            throw ParseError(lineno, "section beyond declared order");
          }
          ++section;
          section_entries = 0;
          break;
        }
        if (section == 0) throw ParseError(lineno, "entry outside a section");
        auto fields = utf8::split_whitespace(line);
        if (!fields) throw ParseError(lineno, "invalid UTF-8");
        const auto nf = fields->size();
        if (nf != static_cast<std::size_t>(section) + 1 &&
            nf != static_cast<std::size_t>(section) + 2) {
          throw ParseError(lineno, "expected " + std::to_string(section) +
                                       " tokens per entry");
        }
        auto prob = detail::parse_double((*fields)[0]);
        if (!prob) throw ParseError(lineno, "bad log probability");
        NGramEntry entry{*prob, std::nullopt};
        if (nf == static_cast<std::size_t>(section) + 2) {
          auto bo = detail::parse_double(fields->back());
          if (!bo) throw ParseError(lineno, "bad backoff weight");
          entry.log10_backoff = *bo;
        }
        std::vector<std::string_view> toks(fields->begin() + 1,
                                           fields->begin() + 1 + section);
        auto key = join_key(toks);
        if (model.find(section, key)) {
          throw ParseError(lineno, "duplicate n-gram '" + key + "'");
        }
        model.level(section).emplace(std::move(key), entry);
        ++section_entries;
        break;
      }
      case State::kDone:
        if (!line.empty()) throw ParseError(lineno, "content after \\end\\");
        break;
    }
  }
  if (state != State::kDone) {
    throw ParseError(lineno + 1, "missing \\end\\");
  }
  return model;
}

inline BackoffModel read_arpa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  return read_arpa(in);
}

}  // namespace ngramkit

#endif  // NGRAMKIT_ARPA_HPP_
