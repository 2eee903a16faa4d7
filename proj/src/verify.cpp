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

#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "dual_encoder.hpp"
#include "manifest.hpp"
#include "nib_core.hpp"

namespace nib {

info::JointPmf RandomPmf(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> p(rows * cols);
  double total = 0.0;
  for (double& v : p) {
    v = uniform(rng) < 0.2 ? 0.0 : -std::log(1.0 - uniform(rng));
    total += v;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    total = 1.0;
  }
  for (double& v : p) v /= total;
  // Fold the rounding residue into the largest cell so the mass is 1 to
  // within a few ulps.
  double mass = 0.0;
  for (double v : p) mass += v;
  *std::max_element(p.begin(), p.end()) += 1.0 - mass;
  return info::JointPmf(rows, cols, std::move(p));
}

namespace {

class Ledger {
 public:
  explicit Ledger(const std::function<void(const std::string&)>& emit) : emit_(emit) {}

  void Record(bool ok, const std::string& name, const std::string& detail) {
    all_ok_ = all_ok_ && ok;
    if (emit_) emit_(std::string(ok ? "PASS " : "FAIL ") + name + ": " + detail);
  }
  bool ok() const { return all_ok_; }

 private:
  const std::function<void(const std::string&)>& emit_;
  bool all_ok_ = true;
};

std::string Fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void CheckNarrowing(const VerifyOptions& o, std::mt19937_64& rng, Ledger& ledger) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  const std::vector<double> variances{1.0, 1e-2, 1e-4, 1e-8};
  std::size_t failures = 0, checks = 0;
  double worst_scaling = 0.0;
  for (std::size_t s = 0; s < o.narrowing_samples; ++s) {
    std::vector<double> z(32);
    for (double& v : z) v = normal(rng);
    const Tensor zt = Tensor::Vector(z);
    const auto report = info::VerifyNarrowing(zt, grid, variances);
    checks += report.checks;
    failures += report.failures.size();
    for (double lambda : grid) {
      const double full = info::SupMiBound(zt, lambda, 1.0);
      const double halved = info::SupMiBound(zt, lambda, 0.5);
      if (full > 0.0) worst_scaling = std::max(worst_scaling, std::abs(halved / full - 2.0));
    }
  }
  ledger.Record(failures == 0, "narrowing monotonicity",
                std::to_string(checks) + " checks over " + std::to_string(o.narrowing_samples) +
                    " vectors and 4 noise levels, " + std::to_string(failures) + " failures");
  ledger.Record(worst_scaling <= 1e-12, "inverse-variance scaling",
                "max |ratio - 2| = " + Fmt(worst_scaling));
}

void CheckKl(Ledger& ledger) {
  const double kl = info::KlGaussian({{3.0, 4.0}, 1.0}, {{0.0, 0.0}, 1.0});
  ledger.Record(std::abs(kl - 12.5) <= 1e-12, "gaussian kl spot value",
                "KL = " + Fmt(kl) + " (expected 12.5)");
}

void CheckMutualInformation(const VerifyOptions& o, std::mt19937_64& rng, Ledger& ledger) {
  std::uniform_int_distribution<std::size_t> extent(2, 6);
  double worst = 0.0, min_mi = 0.0;
  for (std::size_t s = 0; s < o.pmf_samples; ++s) {
    const auto j = RandomPmf(rng, extent(rng), extent(rng));
    const double mi = info::MutualInfoDiscrete(j);
    min_mi = std::min(min_mi, mi);
    const double hx = info::EntropyX(j), hy = info::EntropyY(j), hxy = info::JointEntropy(j);
    const double hx_y = info::ConditionalEntropyXgivenY(j);
    const double hy_x = info::ConditionalEntropyYgivenX(j);
    for (double other : {info::MutualInfoDiscrete(j.Transposed()), hx - hx_y, hy - hy_x,
                         hx + hy - hxy, hxy - hx_y - hy_x}) {
      worst = std::max(worst, std::abs(mi - other));
    }
  }
  ledger.Record(min_mi >= -1e-12, "mutual information non-negativity",
                "min I = " + Fmt(min_mi) + " over " + std::to_string(o.pmf_samples) + " pmfs");
  ledger.Record(worst <= 1e-12, "mutual information identities",
                "max deviation = " + Fmt(worst));
}

void CheckCompleteness(const VerifyOptions& o, Ledger& ledger) {
  const DualEncoderModel model = InitToy(o.seed, ModelConfig{});
  const auto pairs = MakeToyDataset(model, o.seed + 1, o.completeness_pairs);
  bool ok = true;
  double worst = 0.0;
  for (const Sample& s : pairs) {
    PathSpec path{10, model.config.bottleneck_layer, Modality::kImage};
    double previous = 0.0;
    for (std::size_t steps : {10, 100, 1000}) {
      path.num_steps = steps;
      const double gap = NibAttribute(model, s.image, s.tokens, path).completeness_gap;
      if (steps > 10 && !(gap < previous)) ok = false;
      previous = gap;
    }
    worst = std::max(worst, previous);
  }
  ok = ok && worst <= 1e-3;
  ledger.Record(ok, "narrowing path completeness",
                "max gap at 1000 steps = " + Fmt(worst) + ", shrinking 10 -> 100 -> 1000");
}

void CheckInvariance(const VerifyOptions& o, Ledger& ledger) {
  const DualEncoderModel model = InitToy(o.seed, ModelConfig{});
  const auto pairs = MakeToyDataset(model, o.seed + 1, 1);
  const PathSpec path{10, model.config.bottleneck_layer, Modality::kImage};
  const bool ok = ImplementationInvarianceProbe(model, pairs[0].image, pairs[0].tokens, path);
  ledger.Record(ok, "implementation invariance", "identity-augmented model within 1e-9");
}

}  // namespace

bool RunVerification(const VerifyOptions& options,
                     const std::function<void(const std::string&)>& emit) {
  Ledger ledger(emit);
  std::mt19937_64 rng(options.seed);
  CheckNarrowing(options, rng, ledger);
  CheckKl(ledger);
  CheckMutualInformation(options, rng, ledger);
  CheckCompleteness(options, ledger);
  CheckInvariance(options, ledger);
  return ledger.ok();
}

}  // namespace nib
