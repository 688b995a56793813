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

#ifndef NGRAMKIT_GAUSSIAN_PROCESS_HPP_
#define NGRAMKIT_GAUSSIAN_PROCESS_HPP_

// Small Gaussian-process regressor (Matern-5/2 kernel) and the
// expected-improvement acquisition for minimization.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace ngramkit::gp {

inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       double lengthscale) {
  const double r = (a - b).norm() / lengthscale;
  const double s5r = std::sqrt(5.0) * r;
  return (1.0 + s5r + 5.0 * r * r / 3.0) * std::exp(-s5r);
}

struct Prediction {
  double mean;
  double stddev;
};

// Zero-mean GP on standardized targets. The lengthscale is picked from a
// fixed grid by maximum marginal likelihood.
class GaussianProcess {
 public:
  GaussianProcess(std::vector<Eigen::VectorXd> x, const std::vector<double>& y,
                  double noise = 1e-6)
      : x_(std::move(x)), noise_(noise) {
    const auto n = static_cast<Eigen::Index>(y.size());
    y_ = Eigen::VectorXd(n);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    mean_ = mean;
    scale_ = var > 1e-300 ? std::sqrt(var) : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) y_[i] = (y[i] - mean_) / scale_;

    double best_lml = -std::numeric_limits<double>::infinity();
    for (double ls : {0.03, 0.05, 0.08, 0.12, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0}) {
      const double lml = fit(ls);
      if (lml > best_lml) {
        best_lml = lml;
        lengthscale_ = ls;
      }
    }
    fit(lengthscale_);
  }

  double lengthscale() const { return lengthscale_; }

  // Posterior in the original (unstandardized) units.
  Prediction predict(const Eigen::VectorXd& q) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = matern52(x_[i], q, lengthscale_);
    const double mu = k.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    const double var = std::max(1.0 - v.squaredNorm(), 1e-12);
    return {mean_ + scale_ * mu, scale_ * std::sqrt(var)};
  }

 private:
  // Factorizes the kernel matrix and returns the log marginal likelihood.
  double fit(double ls) {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::MatrixXd kmat(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        kmat(i, j) = kmat(j, i) = matern52(x_[i], x_[j], ls);
      }
      kmat(i, i) += noise_;
    }
    llt_.compute(kmat);
    if (llt_.info() != Eigen::Success) {
      return -std::numeric_limits<double>::infinity();
    }
    alpha_ = llt_.solve(y_);
    const double log_det =
        2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * y_.dot(alpha_) - 0.5 * log_det -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  }

  std::vector<Eigen::VectorXd> x_;
  Eigen::VectorXd y_;
  double noise_;
  double mean_ = 0.0;
  double scale_ = 1.0;
  double lengthscale_ = 0.3;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

// E[max(best - f, 0)] under the posterior at a point.
inline double expected_improvement(const Prediction& p, double best) {
  if (p.stddev <= 0.0) return std::max(best - p.mean, 0.0);
  const double z = (best - p.mean) / p.stddev;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return (best - p.mean) * cdf + p.stddev * pdf;
}

}  // namespace ngramkit::gp

#endif  // NGRAMKIT_GAUSSIAN_PROCESS_HPP_
