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

#ifndef NIB_SRC_INFO_THEORY_HPP_
#define NIB_SRC_INFO_THEORY_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

// Closed-form Gaussian quantities and discrete mutual information, all in
// nats.
namespace nib::info {

// N(mean, variance * I).
struct GaussianDiag {
  std::vector<double> mean;
  double variance = 1.0;
};

double KlGaussian(const GaussianDiag& p, const GaussianDiag& q);
// One-dimensional KL(N(mp, vp) || N(mq, vq)).
double KlNormal(double mean_p, double var_p, double mean_q, double var_q);

// 1/2 * lambda^2 * ||z||^2 / sigma2: the KL of N(lambda z, sigma2 I) from
// N(0, sigma2 I), an upper bound on I(z~(lambda), x).
double SupMiBound(const Tensor& z, double lambda, double sigma2);
// Empirical mean of SupMiBound over samples.
double SupMiBoundMean(std::span<const Tensor> samples, double lambda, double sigma2);

struct NarrowingReport {
  bool passed = true;
  bool degenerate = false;  // ||z|| = 0: every bound is zero
  std::size_t checks = 0;
  std::vector<std::string> failures;
};

// Checks that the bound is exactly zero at lambda = 0 and strictly increasing
// along `lambda_grid` for every variance in `variances`. The grid must be
// ascending and start at 0.
NarrowingReport VerifyNarrowing(const Tensor& z, std::span<const double> lambda_grid,
                                std::span<const double> variances);

// Joint probability table p(x, y); rows index X, columns index Y.
class JointPmf {
 public:
  JointPmf(std::size_t rows, std::size_t cols, std::vector<double> p);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t x, std::size_t y) const { return p_[x * cols_ + y]; }

  std::vector<double> MarginalX() const;
  std::vector<double> MarginalY() const;
  JointPmf Transposed() const;

 private:
  std::size_t rows_, cols_;
  std::vector<double> p_;
};

double Entropy(std::span<const double> p);
double EntropyX(const JointPmf& j);
double EntropyY(const JointPmf& j);
double JointEntropy(const JointPmf& j);
// H(X | Y) = -sum p(x, y) ln p(x | y).
double ConditionalEntropyXgivenY(const JointPmf& j);
double ConditionalEntropyYgivenX(const JointPmf& j);
// sum p(x, y) ln[p(x, y) / (p(x) p(y))] with 0 ln 0 = 0.
double MutualInfoDiscrete(const JointPmf& j);

}  // namespace nib::info

#endif  // NIB_SRC_INFO_THEORY_HPP_
