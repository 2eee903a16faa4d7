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

// Command-line front end over the C interface.
//
//   nib-cli init-toy   --seed 0 --out DIR
//   nib-cli attribute  --model M --dataset D --method nib --out DIR
//   nib-cli evaluate   --model M --dataset D --methods nib,m2ib,random --out report.json
//   nib-cli sweep-beta --model M --dataset D --betas 0.01,0.1,0.5 --out sweep.json
//   nib-cli verify
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nib/nib.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ModelDeleter {
  void operator()(nib_model* m) const { nib_model_free(m); }
};
struct DatasetDeleter {
  void operator()(nib_dataset* d) const { nib_dataset_free(d); }
};
struct MapDeleter {
  void operator()(nib_map* m) const { nib_map_free(m); }
};
using ModelPtr = std::unique_ptr<nib_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<nib_dataset, DatasetDeleter>;
using MapPtr = std::unique_ptr<nib_map, MapDeleter>;

// Thrown to unwind with a specific exit code after the message is printed.
struct Exit {
  int code;
};

void Ensure(nib_status status, const std::string& what) {
  if (status == NIB_OK) return;
  std::cerr << "nib-cli: " << what << ": " << nib_status_name(status) << ": " << nib_last_error()
            << "\n";
  throw Exit{status == NIB_ERR_UNKNOWN_METHOD ? kExitUsage : kExitFailure};
}

struct CommonArgs {
  std::string model;
  std::string dataset;
  std::string out;
  std::string modality = "image";
  uint32_t layer = 0;
  uint32_t num_steps = 10;
  double beta = 0.1;
  uint32_t iters = 10;
  uint32_t noise_samples = 10;
  uint64_t seed = 0;
  bool no_fps = false;
};

void AddModelArgs(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--model", a.model, "model manifest (model.json)")->required();
  cmd->add_option("--dataset", a.dataset, "dataset manifest (dataset.json)")->required();
  cmd->add_option("--layer", a.layer, "bottleneck layer, 0 = model default");
  cmd->add_option("--num-steps", a.num_steps, "path steps for nib and ig");
  cmd->add_option("--beta", a.beta, "m2ib trade-off weight");
  cmd->add_option("--iters", a.iters, "m2ib optimisation iterations");
  cmd->add_option("--noise-samples", a.noise_samples, "m2ib noise draws per iteration");
  cmd->add_option("--seed", a.seed, "seed for stochastic methods");
}

nib_attribute_options Options(const CommonArgs& a) {
  nib_attribute_options o;
  nib_attribute_options_init(&o);
  o.layer = a.layer;
  o.num_steps = a.num_steps;
  o.beta = a.beta;
  o.m2ib_iters = a.iters;
  o.noise_samples = a.noise_samples;
  o.seed = a.seed;
  return o;
}

std::pair<ModelPtr, DatasetPtr> Load(const CommonArgs& a) {
  nib_model* model = nullptr;
  Ensure(nib_model_load(a.model.c_str(), &model), "loading model " + a.model);
  ModelPtr owned_model(model);
  nib_dataset* dataset = nullptr;
  Ensure(nib_dataset_load(a.dataset.c_str(), model, &dataset), "loading dataset " + a.dataset);
  return {std::move(owned_model), DatasetPtr(dataset)};
}

nib_method Method(const std::string& name) {
  nib_method m;
  Ensure(nib_method_from_name(name.c_str(), &m), "method");
  return m;
}

int RunAttribute(const CommonArgs& a, const std::string& method_name) {
  nib_attribute_options o = Options(a);
  o.method = Method(method_name);
  nib_modality modality;
  Ensure(nib_modality_from_name(a.modality.c_str(), &modality), "modality");
  o.modality = modality;
  auto [model, dataset] = Load(a);
  const std::size_t n = nib_dataset_size(dataset.get());
  for (std::size_t i = 0; i < n; ++i) {
    nib_attribute_options per_sample = o;
    per_sample.seed = o.seed + i;
    nib_map* raw = nullptr;
    const std::string id = nib_dataset_sample_id(dataset.get(), i);
    Ensure(nib_attribute(model.get(), dataset.get(), i, &per_sample, &raw, nullptr),
           "attributing " + id);
    MapPtr map(raw);
    const std::string stem = id + "." + method_name + "." + a.modality;
    Ensure(nib_map_write_heatmap(map.get(), model.get(), a.out.c_str(), stem.c_str()),
           "writing " + stem);
  }
  std::cout << "wrote " << n << " " << a.modality << " heatmaps to " << a.out << "\n";
  return 0;
}

int RunEvaluate(const CommonArgs& a, const std::vector<std::string>& method_names) {
  std::vector<nib_method> methods;
  for (const auto& name : method_names) methods.push_back(Method(name));
  auto [model, dataset] = Load(a);
  const nib_attribute_options o = Options(a);
  Ensure(nib_evaluate(model.get(), dataset.get(), methods.data(), methods.size(), &o,
                      a.no_fps ? 0 : 1, a.out.c_str()),
         "evaluating");
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

int RunSweep(const CommonArgs& a, const std::vector<double>& betas) {
  auto [model, dataset] = Load(a);
  const nib_attribute_options o = Options(a);
  double spread = 0.0;
  Ensure(nib_sweep_beta(model.get(), dataset.get(), betas.data(), betas.size(), &o,
                        a.no_fps ? 0 : 1, a.out.c_str(), &spread),
         "sweeping beta");
  std::printf("wrote %s (image confidence-drop relative spread %.4f)\n", a.out.c_str(), spread);
  return 0;
}

int RunVerify(uint64_t seed) {
  const nib_status s = nib_verify(
      seed, [](const char* line, void*) { std::cout << line << "\n"; }, nullptr);
  if (s == NIB_ERR_VERIFICATION_FAILED) {
    std::cout << "verification FAILED\n";
    return kExitFailure;
  }
  Ensure(s, "verify");
  std::cout << "verification passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Narrowing-bottleneck attribution for dual-encoder models", "nib-cli"};
  app.require_subcommand(1);

  uint64_t toy_seed = 0;
  std::string toy_out;
  auto* init = app.add_subcommand("init-toy", "write a seeded toy model, dataset and fixture");
  init->add_option("--seed", toy_seed, "model and dataset seed");
  init->add_option("--out", toy_out, "output directory")->required();

  CommonArgs attr_args;
  std::string method_name = "nib";
  auto* attribute = app.add_subcommand("attribute", "write one heatmap per dataset sample");
  AddModelArgs(attribute, attr_args);
  attribute->add_option("--method", method_name, "nib|m2ib|sm|fastig|ig|gradcam|random");
  attribute->add_option("--modality", attr_args.modality, "image|text")
      ->check(CLI::IsMember({"image", "text"}));
  attribute->add_option("--out", attr_args.out, "output directory")->required();

  CommonArgs eval_args;
  std::vector<std::string> methods{"nib", "m2ib", "sm", "fastig", "gradcam", "random"};
  auto* evaluate = app.add_subcommand("evaluate", "Confidence Drop / Increase per method");
  AddModelArgs(evaluate, eval_args);
  evaluate->add_option("--methods", methods, "comma-separated methods")->delimiter(',');
  evaluate->add_option("--out", eval_args.out, "report path (JSON)")->required();
  evaluate->add_flag("--no-fps", eval_args.no_fps, "write fps = 0 for reproducible reports");

  CommonArgs sweep_args;
  std::vector<double> betas{0.01, 0.1, 0.5};
  auto* sweep = app.add_subcommand("sweep-beta", "M2IB-lite metrics across beta values");
  AddModelArgs(sweep, sweep_args);
  sweep->add_option("--betas", betas, "comma-separated beta values")->delimiter(',');
  sweep->add_option("--out", sweep_args.out, "report path (JSON)")->required();
  sweep->add_flag("--no-fps", sweep_args.no_fps, "write fps = 0 for reproducible reports");

  uint64_t verify_seed = 2024;
  auto* verify = app.add_subcommand("verify", "run the information-theory property suite");
  verify->add_option("--seed", verify_seed, "property-suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*init) {
      Ensure(nib_init_toy(toy_seed, toy_out.c_str()), "init-toy");
      std::cout << "wrote toy model, dataset and two-concept fixture to " << toy_out << "\n";
      return 0;
    }
    if (*attribute) return RunAttribute(attr_args, method_name);
    if (*evaluate) return RunEvaluate(eval_args, methods);
    if (*sweep) return RunSweep(sweep_args, betas);
    if (*verify) return RunVerify(verify_seed);
  } catch (const Exit& e) {
    if (e.code == kExitUsage) std::cerr << app.help();
    return e.code;
  }
  return kExitUsage;
}
