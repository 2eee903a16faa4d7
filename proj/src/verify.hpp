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

#ifndef NIB_SRC_VERIFY_HPP_
#define NIB_SRC_VERIFY_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "info_theory.hpp"

namespace nib {

// Random joint pmf with roughly a fifth of the cells exactly zero.
info::JointPmf RandomPmf(std::mt19937_64& rng, std::size_t rows, std::size_t cols);

struct VerifyOptions {
  std::uint64_t seed = 2024;
  std::size_t narrowing_samples = 100;
  std::size_t pmf_samples = 1000;
  std::size_t completeness_pairs = 3;
};

// Property suite behind `nib verify`: narrowing bound monotonicity at every
// noise level, the Gaussian KL spot value, discrete MI identities,
// completeness of the narrowing path on toy pairs and implementation
// invariance. Emits one line per check; returns true when all pass.
bool RunVerification(const VerifyOptions& options,
                     const std::function<void(const std::string&)>& emit);

}  // namespace nib

#endif  // NIB_SRC_VERIFY_HPP_
