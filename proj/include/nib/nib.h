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

/*
 * C interface to the narrowing-bottleneck attribution engine.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns an nib_status; on
 * failure nib_last_error() describes the problem for the calling thread.
 * Handles are immutable after creation and may be shared read-only between
 * threads.
 */
#ifndef NIB_NIB_H_
#define NIB_NIB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NIB_API __declspec(dllexport)
#else
#define NIB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nib_status {
  NIB_OK = 0,
  NIB_ERR_INVALID_ARGUMENT = 1,
  NIB_ERR_DIMENSION = 2,
  NIB_ERR_NON_FINITE = 3,
  NIB_ERR_DEGENERATE_INPUT = 4,
  NIB_ERR_CONFIG = 5,
  NIB_ERR_IO = 6,
  NIB_ERR_BAD_MAGIC = 7,
  NIB_ERR_VERSION_MISMATCH = 8,
  NIB_ERR_DUPLICATE_NAME = 9,
  NIB_ERR_TRUNCATED = 10,
  NIB_ERR_TRAILING_BYTES = 11,
  NIB_ERR_UNSUPPORTED_DTYPE = 12,
  NIB_ERR_MISSING_WEIGHT = 13,
  NIB_ERR_SHAPE_MISMATCH = 14,
  NIB_ERR_UNKNOWN_METHOD = 15,
  NIB_ERR_OPTIMIZATION = 16,
  NIB_ERR_EMPTY_INPUT = 17,
  NIB_ERR_ALL_EXCLUDED = 18,
  NIB_ERR_VERIFICATION_FAILED = 19,
  NIB_ERR_MANIFEST = 20,
  NIB_ERR_INTERNAL = 99
} nib_status;

typedef enum nib_modality { NIB_MODALITY_IMAGE = 0, NIB_MODALITY_TEXT = 1 } nib_modality;

typedef enum nib_method {
  NIB_METHOD_NIB = 0,
  NIB_METHOD_M2IB = 1,
  NIB_METHOD_SALIENCY = 2,
  NIB_METHOD_FASTIG = 3,
  NIB_METHOD_IG = 4,
  NIB_METHOD_GRADCAM = 5,
  NIB_METHOD_RANDOM = 6
} nib_method;

typedef struct nib_model nib_model;
typedef struct nib_dataset nib_dataset;
typedef struct nib_map nib_map;

typedef struct nib_attribute_options {
  nib_method method;
  nib_modality modality;
  uint32_t layer;     /* 0 selects the model's declared bottleneck layer */
  uint32_t num_steps; /* path steps for nib and ig */
  double beta;        /* m2ib trade-off weight */
  uint32_t m2ib_iters;
  uint32_t noise_samples;
  uint64_t seed; /* m2ib and random */
} nib_attribute_options;

typedef struct nib_pass_counts {
  size_t forward;
  size_t backward;
  size_t input_independent;
} nib_pass_counts;

typedef void (*nib_line_callback)(const char* line, void* user);

/* Defaults: nib, image, model layer, 10 steps, beta 0.1, 10 iters, 10 draws. */
NIB_API void nib_attribute_options_init(nib_attribute_options* options);

NIB_API const char* nib_status_name(nib_status status);
NIB_API const char* nib_last_error(void);

NIB_API nib_status nib_method_from_name(const char* name, nib_method* out);
NIB_API const char* nib_method_name(nib_method method);
NIB_API nib_status nib_modality_from_name(const char* name, nib_modality* out);

/* Writes model.{json,nibt}, dataset.{json,nibt} (64 pairs) and
 * two_concept.{json,nibt} into out_dir. */
NIB_API nib_status nib_init_toy(uint64_t seed, const char* out_dir);

NIB_API nib_status nib_model_load(const char* manifest_path, nib_model** out);
NIB_API nib_status nib_model_init_toy(uint64_t seed, nib_model** out);
NIB_API void nib_model_free(nib_model* model);
NIB_API uint32_t nib_model_layers(const nib_model* model);
NIB_API uint32_t nib_model_bottleneck_layer(const nib_model* model);
NIB_API uint32_t nib_model_image_size(const nib_model* model);

NIB_API nib_status nib_dataset_load(const char* manifest_path, const nib_model* model,
                                    nib_dataset** out);
NIB_API void nib_dataset_free(nib_dataset* dataset);
NIB_API size_t nib_dataset_size(const nib_dataset* dataset);
/* Valid until the dataset is freed; NULL for an out-of-range index. */
NIB_API const char* nib_dataset_sample_id(const nib_dataset* dataset, size_t index);
NIB_API nib_status nib_similarity(const nib_model* model, const nib_dataset* dataset,
                                  size_t index, double* out);

/* counts may be NULL. */
NIB_API nib_status nib_attribute(const nib_model* model, const nib_dataset* dataset, size_t index,
                                 const nib_attribute_options* options, nib_map** out,
                                 nib_pass_counts* counts);
NIB_API void nib_map_free(nib_map* map);
NIB_API size_t nib_map_score_count(const nib_map* map);
/* Copies min(capacity, count) scores. */
NIB_API nib_status nib_map_scores(const nib_map* map, double* out, size_t capacity);
NIB_API void nib_map_grid(const nib_map* map, size_t* rows, size_t* cols);
NIB_API double nib_map_completeness_gap(const nib_map* map);
/* Writes <dir>/<stem>.pgm (image maps only), .csv and .json. */
NIB_API nib_status nib_map_write_heatmap(const nib_map* map, const nib_model* model,
                                         const char* dir, const char* stem);

/* MetricReport JSON for each method. measure_fps = 0 writes fps = 0 so the
 * report is byte-reproducible. */
NIB_API nib_status nib_evaluate(const nib_model* model, const nib_dataset* dataset,
                                const nib_method* methods, size_t method_count,
                                const nib_attribute_options* options, int measure_fps,
                                const char* out_json_path);

/* M2IB-lite reports for each beta; relative_spread (may be NULL) receives
 * (max - min) / max of the image Confidence Drop column. */
NIB_API nib_status nib_sweep_beta(const nib_model* model, const nib_dataset* dataset,
                                  const double* betas, size_t beta_count,
                                  const nib_attribute_options* options, int measure_fps,
                                  const char* out_json_path, double* relative_spread);

/* Runs the property suite; NIB_ERR_VERIFICATION_FAILED when any check fails.
 * callback may be NULL. */
NIB_API nib_status nib_verify(uint64_t seed, nib_line_callback callback, void* user);

#ifdef __cplusplus
}
#endif

#endif /* NIB_NIB_H_ */
