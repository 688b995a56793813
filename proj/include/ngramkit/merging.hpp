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

#ifndef NGRAMKIT_MERGING_HPP_
#define NGRAMKIT_MERGING_HPP_

// Linear interpolation of k backoff models, M*(w|h) = sum_i w_i M_i(w|h),
// with weights on the probability simplex chosen to minimize perplexity on
// a validation set. Two optimizers: EM, which reaches the global optimum of
// the concave log-likelihood, and Bayesian optimization with a GP surrogate
// over a softmax parametrization of the simplex.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "ngramkit/error.hpp"
#include "ngramkit/evaluation.hpp"
#include "ngramkit/gaussian_process.hpp"
#include "ngramkit/model.hpp"
#include "ngramkit/tokens.hpp"

namespace ngramkit {

// Nonnegative weights summing to one (within 1e-9).
class InterpolationWeights {
 public:
  explicit InterpolationWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw ConfigError("weights must not be empty");
    double sum = 0.0;
    for (double x : w_) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw ConfigError("weights must be finite and nonnegative");
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("weights must sum to 1, got " + std::to_string(sum));
    }
  }

  static InterpolationWeights uniform(std::size_t k) {
    return InterpolationWeights(std::vector<double>(k, 1.0 / k));
  }
  static InterpolationWeights corner(std::size_t k, std::size_t i) {
    std::vector<double> w(k, 0.0);
    w.at(i) = 1.0;
    return InterpolationWeights(std::move(w));
  }
  // Rescales a nonnegative vector onto the simplex.
  static InterpolationWeights normalized(std::vector<double> w) {
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0.0)) throw ConfigError("weights sum to zero");
    for (double& x : w) x /= sum;
    return InterpolationWeights(std::move(w));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const { return w_; }

 private:
  std::vector<double> w_;
};

inline void check_mixture_arity(std::span<const BackoffModel> models,
                                const InterpolationWeights& w) {
  if (models.empty()) throw ConfigError("need at least one model");
  if (models.size() != w.size()) {
    throw ConfigError("got " + std::to_string(models.size()) + " models but " +
                      std::to_string(w.size()) + " weights");
  }
}

// log10 of sum_i w_i * 10^{query_i(context, word)}.
template <typename Range>
double mixture_query(std::span<const BackoffModel> models,
                     const InterpolationWeights& w, const Range& context,
                     std::string_view word) {
  check_mixture_arity(models, w);
  std::vector<std::string_view> ctx;
  for (const auto& t : context) ctx.emplace_back(t);
  double p = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (w[i] == 0.0) continue;
    p += w[i] * std::pow(10.0, models[i].log10_prob_view(ctx, word));
  }
  return std::log10(p);
}

// Per-position component probabilities on a validation set, cached so each
// weight vector costs O(positions * k).
class MixtureObjective {
 public:
  MixtureObjective(std::span<const BackoffModel> models,
                   std::span<const Sentence> validation, unsigned threads = 1)
      : k_(models.size()) {
    if (models.empty()) throw ConfigError("need at least one model");
    std::vector<std::size_t> offsets;
    std::size_t positions = 0;
    for (const auto& s : validation) {
      offsets.push_back(positions);
      if (!s.tokens.empty()) positions += s.tokens.size() + 1;
    }
    if (positions == 0) throw DataError("validation set is empty");
    probs_.assign(positions * k_, 0.0);
    auto work = [&](std::size_t first, std::size_t stride) {
      for (std::size_t si = first; si < validation.size(); si += stride) {
        const auto& s = validation[si];
        if (s.tokens.empty()) continue;
        std::size_t pos = offsets[si];
        for (std::size_t i = 0; i < k_; ++i) {
          std::size_t p = pos;
          for_each_position(s.tokens, models[i].order(),
                            [&](std::span<const std::string_view> ctx,
                                std::string_view w) {
                              probs_[p++ * k_ + i] = std::pow(
                                  10.0, models[i].log10_prob_view(ctx, w));
                            });
        }
      }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
      work(0, 1);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
      for (auto& th : pool) th.join();
    }
    for (double p : probs_) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw DataError("validation set has a position with zero probability "
                        "under some model");
      }
    }
  }

  std::size_t components() const { return k_; }
  std::size_t positions() const { return probs_.size() / k_; }
  // Probability of position t under component i.
  double prob(std::size_t t, std::size_t i) const { return probs_[t * k_ + i]; }

  long double log10_likelihood(const std::vector<double>& w) const {
    long double sum = 0.0L;
    const std::size_t n = positions();
    for (std::size_t t = 0; t < n; ++t) {
      double p = 0.0;
      for (std::size_t i = 0; i < k_; ++i) p += w[i] * probs_[t * k_ + i];
      sum += std::log10(p);
    }
    return sum;
  }

  double perplexity(const InterpolationWeights& w) const {
    if (w.size() != k_) throw ConfigError("weight count mismatch");
    return static_cast<double>(std::pow(
        10.0L, -log10_likelihood(w.values()) /
                   static_cast<long double>(positions())));
  }

 private:
  std::size_t k_;
  std::vector<double> probs_;
};

struct EmResult {
  InterpolationWeights weights;
  std::size_t iterations = 0;
  bool converged = false;
  // Validation perplexity of the initializer and of every iterate.
  std::vector<double> perplexity_history;
};

// Fixed-point EM on the mixture weights, started from the uniform vector.
// Stops when no weight moves by `tol` or more, or after `max_iter` updates;
// in the latter case `converged` is false and the best iterate is returned.
inline EmResult optimize_weights_em(const MixtureObjective& objective,
                                    double tol = 1e-7,
                                    std::size_t max_iter = 1000) {
  const std::size_t k = objective.components();
  if (k < 2) throw ConfigError("EM needs at least two models");
  const std::size_t n = objective.positions();
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  EmResult result{InterpolationWeights(w), 0, false, {}};
  double best = objective.perplexity(result.weights);
  result.perplexity_history.push_back(best);
  std::vector<double> next(k);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      double denom = 0.0;
      for (std::size_t i = 0; i < k; ++i) denom += w[i] * objective.prob(t, i);
      for (std::size_t i = 0; i < k; ++i) {
        next[i] += w[i] * objective.prob(t, i) / denom;
      }
    }
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      next[i] /= static_cast<double>(n);
      change = std::max(change, std::abs(next[i] - w[i]));
    }
    w = next;
    auto current = InterpolationWeights::normalized(w);
    const double ppl = objective.perplexity(current);
    result.perplexity_history.push_back(ppl);
    result.iterations = iter + 1;
    if (ppl <= best) {
      best = ppl;
      result.weights = current;
    }
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

inline EmResult optimize_weights_em(std::span<const BackoffModel> models,
                                    std::span<const Sentence> validation,
                                    double tol = 1e-7,
                                    std::size_t max_iter = 1000) {
  return optimize_weights_em(MixtureObjective(models, validation), tol,
                             max_iter);
}

struct BOConfig {
  std::size_t budget = 50;
  // 0 selects 2k + 1 (corners, center and k random points).
  std::size_t init_points = 0;
  std::uint64_t seed = 0;
  // Softmax logits are searched in [-logit_bound, logit_bound].
  double logit_bound = 8.0;
  // Random candidates scored by expected improvement per step.
  std::size_t candidates = 4096;
};

struct TracePoint {
  std::size_t iteration;
  std::vector<double> weights;
  double perplexity;
};

inline nlohmann::json to_json(const TracePoint& p) {
  return {{"iteration", p.iteration}, {"weights", p.weights},
          {"ppl", p.perplexity}};
}

inline void write_trace(std::span<const TracePoint> trace, std::ostream& out) {
  for (const auto& p : trace) out << to_json(p).dump() << '\n';
}

struct BOResult {
  InterpolationWeights weights;
  double perplexity;
  std::vector<TracePoint> trace;
};

namespace detail {

// weights = softmax(z_1, ..., z_{k-1}, 0)
inline std::vector<double> softmax_weights(const Eigen::VectorXd& z) {
  const auto d = z.size();
  double mx = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) mx = std::max(mx, z[i]);
  std::vector<double> w(d + 1);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) sum += (w[i] = std::exp(z[i] - mx));
  sum += (w[d] = std::exp(-mx));
  for (double& x : w) x /= sum;
  return w;
}

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Gaussian-process Bayesian optimization of validation perplexity. The
// surrogate models log-perplexity over the unit cube that maps affinely onto
// the logit box. The initial design evaluates the k simplex corners exactly,
// the uniform center and random points; every later point maximizes
// expected improvement. Deterministic for a given seed.
inline BOResult optimize_weights_bo(const MixtureObjective& objective,
                                    const BOConfig& cfg) {
  const std::size_t k = objective.components();
  if (k < 2) throw ConfigError("Bayesian optimization needs at least two models");
  const std::size_t init = cfg.init_points ? cfg.init_points : 2 * k + 1;
  if (init < k + 1) {
    throw ConfigError("init_points must be at least k + 1 = " +
                      std::to_string(k + 1));
  }
  if (cfg.budget < init) throw ConfigError("budget must be at least init_points");
  if (!(cfg.logit_bound > 0.0)) throw ConfigError("logit_bound must be positive");

  const auto d = static_cast<Eigen::Index>(k - 1);
  const double bound = cfg.logit_bound;
  std::mt19937_64 rng(cfg.seed);
  auto to_logits = [&](const Eigen::VectorXd& u) {
    return Eigen::VectorXd((u.array() * 2.0 - 1.0) * bound);
  };

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  BOResult result{InterpolationWeights::uniform(k),
                  std::numeric_limits<double>::infinity(),
                  {}};
  auto record = [&](const Eigen::VectorXd& u, InterpolationWeights w) {
    const double ppl = objective.perplexity(w);
    result.trace.push_back({result.trace.size(), w.values(), ppl});
    xs.push_back(u);
    ys.push_back(std::log(ppl));
    if (ppl < result.perplexity) {
      result.perplexity = ppl;
      result.weights = std::move(w);
    }
  };

  // Corners: e_i for i < k-1 sits at logit +bound on axis i; e_{k-1} at the
  // all -bound vertex. Their GP coordinates are the box vertices.
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd u = Eigen::VectorXd::Constant(d, 0.5);
    if (i + 1 < k) {
      u[static_cast<Eigen::Index>(i)] = 1.0;
    } else {
      u.setZero();
    }
    record(u, InterpolationWeights::corner(k, i));
  }
  record(Eigen::VectorXd::Constant(d, 0.5), InterpolationWeights::uniform(k));
  while (result.trace.size() < init) {
    Eigen::VectorXd u(d);
    for (Eigen::Index j = 0; j < d; ++j) u[j] = detail::unit_uniform(rng);
    record(u, InterpolationWeights::normalized(
                  detail::softmax_weights(to_logits(u))));
  }

  while (result.trace.size() < cfg.budget) {
    gp::GaussianProcess model(xs, ys);
    const double best_y = *std::min_element(ys.begin(), ys.end());

    // Order observed points by value to seed local candidates.
    std::vector<std::size_t> order(ys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });

    Eigen::VectorXd best_u;
    double best_ei = -1.0;
    auto consider = [&](const Eigen::VectorXd& u) {
      for (const auto& x : xs) {
        if ((x - u).norm() < 1e-6) return;
      }
      const double ei = gp::expected_improvement(model.predict(u), best_y);
      if (ei > best_ei) {
        best_ei = ei;
        best_u = u;
      }
    };
    for (std::size_t c = 0; c < cfg.candidates; ++c) {
      Eigen::VectorXd u(d);
      for (Eigen::Index j = 0; j < d; ++j) u[j] = detail::unit_uniform(rng);
      consider(u);
    }
    const std::size_t local = std::min<std::size_t>(5, order.size());
    for (std::size_t r = 0; r < local; ++r) {
      for (double radius : {0.1, 0.02, 0.004}) {
        for (int c = 0; c < 64; ++c) {
          Eigen::VectorXd u = xs[order[r]];
          for (Eigen::Index j = 0; j < d; ++j) {
            u[j] = std::clamp(
                u[j] + radius * (2.0 * detail::unit_uniform(rng) - 1.0), 0.0,
                1.0);
          }
          consider(u);
        }
      }
    }
    if (best_u.size() == 0) break;  // every candidate duplicated a sample
    record(best_u, InterpolationWeights::normalized(
                       detail::softmax_weights(to_logits(best_u))));
  }
  return result;
}

inline BOResult optimize_weights_bo(std::span<const BackoffModel> models,
                                    std::span<const Sentence> validation,
                                    const BOConfig& cfg) {
  return optimize_weights_bo(MixtureObjective(models, validation), cfg);
}

// Static ARPA approximation of the mixture: the union of all explicit
// n-grams, each carrying its exact mixture probability, with backoff weights
// re-solved for normalization. When the models' vocabularies differ the
// unigram level is renormalized over the union vocabulary.
inline BackoffModel export_static(std::span<const BackoffModel> models,
                                  const InterpolationWeights& w) {
  check_mixture_arity(models, w);
  int order = 0;
  for (const auto& m : models) order = std::max(order, m.order());
  BackoffModel out(order);

  bool same_vocab = true;
  const auto vocab0 = models[0].vocabulary();
  for (const auto& m : models) same_vocab = same_vocab && m.vocabulary() == vocab0;

  for (int m = 1; m <= order; ++m) {
    std::set<std::string_view> keys;
    for (const auto& model : models) {
      if (m > model.order()) continue;
      for (const auto& [key, e] : model.level(m)) keys.insert(key);
    }
    for (auto key : keys) {
      if (key == kBos) {
        out.set(std::string(key), {kLog10Zero, std::nullopt});
        continue;
      }
      auto toks = split_key(key);
      const auto word = toks.back();
      toks.pop_back();
      const double lp = mixture_query(models, w, toks, word);
      if (!std::isfinite(lp)) {
        throw DataError("mixture assigns zero probability to '" +
                        std::string(key) + "'");
      }
      out.set(std::string(key), {lp, std::nullopt});
    }
  }
  if (!same_vocab) {
    double total = 0.0;
    for (const auto& [key, e] : out.level(1)) {
      if (key != kBos) total += std::pow(10.0, e.log10_prob);
    }
    for (auto& [key, e] : out.level(1)) {
      if (key != kBos) e.log10_prob -= std::log10(total);
    }
  }
  recompute_backoffs(out);
  return out;
}

}  // namespace ngramkit

#endif  // NGRAMKIT_MERGING_HPP_
