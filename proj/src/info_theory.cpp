/*
 * Copyright 2026 The NIB Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "info_theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "error.hpp"

namespace nib::info {

double KlNormal(double mean_p, double var_p, double mean_q, double var_q) {
  Check(var_p > 0.0 && var_q > 0.0, ErrorCode::kInvalidArgument,
        "KL divergence needs positive variances");
  const double ratio = var_p / var_q;
  const double diff = mean_p - mean_q;
  // ratio - 1 - ln(ratio) >= 0; clamp the rounding noise near ratio = 1.
  const double shape = std::max(0.0, ratio - 1.0 - std::log(ratio));
  return 0.5 * (diff * diff / var_q + shape);
}

double KlGaussian(const GaussianDiag& p, const GaussianDiag& q) {
  Check(p.mean.size() == q.mean.size(), ErrorCode::kDimension,
        "KL divergence between Gaussians of different dimension");
  Check(p.variance > 0.0 && q.variance > 0.0, ErrorCode::kInvalidArgument,
        "KL divergence needs positive variances");
  const double n = static_cast<double>(p.mean.size());
  double mahalanobis = 0.0;
  for (std::size_t i = 0; i < p.mean.size(); ++i) {
    const double d = p.mean[i] - q.mean[i];
    mahalanobis += d * d;
  }
  mahalanobis /= q.variance;
  const double ratio = p.variance / q.variance;
  // tr(Sq^-1 Sp) - n + ln(det Sq / det Sp) = n (ratio - 1 - ln ratio).
  const double shape = std::max(0.0, n * (ratio - 1.0 - std::log(ratio)));
  return 0.5 * (mahalanobis + shape);
}

double SupMiBound(const Tensor& z, double lambda, double sigma2) {
  Check(sigma2 > 0.0, ErrorCode::kInvalidArgument, "sigma^2 must be positive");
  Check(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kInvalidArgument,
        "lambda must lie in [0, 1]");
  double norm2 = 0.0;
  for (double v : z.values()) norm2 += v * v;
  return 0.5 * lambda * lambda * norm2 / sigma2;
}

double SupMiBoundMean(std::span<const Tensor> samples, double lambda, double sigma2) {
  Check(!samples.empty(), ErrorCode::kEmptyInput, "no samples for the expectation");
  double total = 0.0;
  for (const Tensor& z : samples) total += SupMiBound(z, lambda, sigma2);
  return total / static_cast<double>(samples.size());
}

NarrowingReport VerifyNarrowing(const Tensor& z, std::span<const double> lambda_grid,
                                std::span<const double> variances) {
  Check(lambda_grid.size() >= 2 && lambda_grid.front() == 0.0, ErrorCode::kInvalidArgument,
        "lambda grid must start at 0 and hold at least two points");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
    Check(lambda_grid[i] > lambda_grid[i - 1], ErrorCode::kInvalidArgument,
          "lambda grid must be strictly ascending");
  }
  NarrowingReport report;
  double norm2 = 0.0;
  for (double v : z.values()) norm2 += v * v;
  report.degenerate = norm2 == 0.0;

  auto fail = [&report](const std::string& what) {
    report.passed = false;
    report.failures.push_back(what);
  };
  for (double sigma2 : variances) {
    const double at_zero = SupMiBound(z, 0.0, sigma2);
    ++report.checks;
    if (at_zero != 0.0) {
      std::ostringstream msg;
      msg << "sigma2=" << sigma2 << ": bound at lambda=0 is " << at_zero;
      fail(msg.str());
    }
    if (report.degenerate) continue;
    double previous = at_zero;
    for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
      const double current = SupMiBound(z, lambda_grid[i], sigma2);
      ++report.checks;
      if (!(current > previous)) {
        std::ostringstream msg;
        msg << "sigma2=" << sigma2 << ": bound not increasing at lambda=" << lambda_grid[i];
        fail(msg.str());
      }
      previous = current;
    }
  }
  return report;
}

JointPmf::JointPmf(std::size_t rows, std::size_t cols, std::vector<double> p)
    : rows_(rows), cols_(cols), p_(std::move(p)) {
  Check(rows_ > 0 && cols_ > 0 && p_.size() == rows_ * cols_, ErrorCode::kDimension,
        "joint pmf size does not match its extents");
  double total = 0.0;
  for (double v : p_) {
    Check(std::isfinite(v) && v >= 0.0, ErrorCode::kInvalidArgument,
          "joint pmf has a negative or non-finite entry");
    total += v;
  }
  Check(std::abs(total - 1.0) <= 1e-12, ErrorCode::kInvalidArgument,
        "joint pmf mass differs from 1");
}

std::vector<double> JointPmf::MarginalX() const {
  std::vector<double> m(rows_, 0.0);
  for (std::size_t x = 0; x < rows_; ++x)
    for (std::size_t y = 0; y < cols_; ++y) m[x] += at(x, y);
  return m;
}

std::vector<double> JointPmf::MarginalY() const {
  std::vector<double> m(cols_, 0.0);
  for (std::size_t x = 0; x < rows_; ++x)
    for (std::size_t y = 0; y < cols_; ++y) m[y] += at(x, y);
  return m;
}

JointPmf JointPmf::Transposed() const {
  std::vector<double> t(p_.size());
  for (std::size_t x = 0; x < rows_; ++x)
    for (std::size_t y = 0; y < cols_; ++y) t[y * rows_ + x] = at(x, y);
  return JointPmf(cols_, rows_, std::move(t));
}

double Entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double EntropyX(const JointPmf& j) { return Entropy(j.MarginalX()); }
double EntropyY(const JointPmf& j) { return Entropy(j.MarginalY()); }

double JointEntropy(const JointPmf& j) {
  double h = 0.0;
  for (std::size_t x = 0; x < j.rows(); ++x)
    for (std::size_t y = 0; y < j.cols(); ++y)
      if (j.at(x, y) > 0.0) h -= j.at(x, y) * std::log(j.at(x, y));
  return h;
}

double ConditionalEntropyXgivenY(const JointPmf& j) {
  const std::vector<double> py = j.MarginalY();
  double h = 0.0;
  for (std::size_t x = 0; x < j.rows(); ++x)
    for (std::size_t y = 0; y < j.cols(); ++y)
      if (j.at(x, y) > 0.0) h -= j.at(x, y) * std::log(j.at(x, y) / py[y]);
  return h;
}

double ConditionalEntropyYgivenX(const JointPmf& j) {
  return ConditionalEntropyXgivenY(j.Transposed());
}

double MutualInfoDiscrete(const JointPmf& j) {
  const std::vector<double> px = j.MarginalX();
  const std::vector<double> py = j.MarginalY();
  double mi = 0.0;
  for (std::size_t x = 0; x < j.rows(); ++x)
    for (std::size_t y = 0; y < j.cols(); ++y) {
      const double p = j.at(x, y);
      if (p > 0.0) mi += p * std::log(p / (px[x] * py[y]));
    }
  return mi;
}

}  // namespace nib::info
