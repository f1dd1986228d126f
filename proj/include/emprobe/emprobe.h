// Copyright 2026 The emprobe Authors.
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

/* C interface to the emprobe library. Every call returns an emp_status; on
 * failure emp_last_error() describes the problem for the calling thread.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with emp_string_free. */
#ifndef EMPROBE_EMPROBE_H
#define EMPROBE_EMPROBE_H

#include <stddef.h>
#include <stdint.h>

#if defined(EMPROBE_BUILDING_LIBRARY)
#define EMP_API __attribute__((visibility("default")))
#else
#define EMP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emp_status {
  EMP_OK = 0,
  EMP_ERR_INVALID_ARGUMENT = 1,
  EMP_ERR_IO = 2,
  EMP_ERR_FORMAT = 3,
  EMP_ERR_NUMERIC = 4,
  EMP_ERR_DEGENERATE = 5,
  EMP_ERR_SPEC = 6,
  EMP_ERR_UNSUPPORTED = 7,
  EMP_ERR_INTERNAL = 8
} emp_status;

typedef struct emp_trace emp_trace;
typedef struct emp_feature_set emp_feature_set;
typedef struct emp_decoder emp_decoder;

EMP_API const char* emp_version(void);
EMP_API const char* emp_last_error(void);
EMP_API const char* emp_status_name(emp_status status);
EMP_API void emp_string_free(char* s);

/* ---- traces ----------------------------------------------------------- */

EMP_API emp_status emp_trace_read(const char* path, emp_trace** out);
EMP_API emp_status emp_trace_write(const emp_trace* trace, const char* path);
EMP_API void emp_trace_free(emp_trace* trace);

/* JSON {video_id, transform, canonical, num_frames, positions:[{id,shape}]}. */
EMP_API emp_status emp_trace_info(const emp_trace* trace, char** json_out);
EMP_API emp_status emp_trace_frame_count(const emp_trace* trace, size_t* out);

/* spec_json keys (all optional): video_id, num_frames, positions ([{id,shape}]
 * or [id] for canonical shapes), interjection_begin, interjection_end, shift,
 * seed, canonical. */
EMP_API emp_status emp_trace_synth(const char* spec_json, emp_trace** out);

/* Lenient validation. *ok is 1 when no violation was found; the report is
 * JSON {ok, frames_read, violations:[{kind, frame, position, message}]}. */
EMP_API emp_status emp_trace_validate(const char* path, int* ok, char** report_json);

/* ---- stream features -------------------------------------------------- */

/* Columns frame,position,short_l2,long_l2,short_ratio,object_present. */
EMP_API emp_status emp_features_csv(const emp_trace* trace, int position, size_t short_window,
                                    size_t long_window, char** csv_out);

EMP_API emp_status emp_feature_set_new(emp_feature_set** out);
EMP_API void emp_feature_set_free(emp_feature_set* set);
EMP_API emp_status emp_feature_set_add_trace(emp_feature_set* set, const emp_trace* trace,
                                             int position, size_t short_window,
                                             size_t long_window);
EMP_API emp_status emp_feature_set_add_csv(emp_feature_set* set, const char* csv_text,
                                           const char* video_id);
EMP_API emp_status emp_feature_set_size(const emp_feature_set* set, size_t* out);

/* Separability report JSON and per-frame distribution CSV. */
EMP_API emp_status emp_presence_report(const emp_feature_set* set, int position,
                                       char** report_json, char** distribution_csv);

/* ---- visualization ---------------------------------------------------- */

/* Writes a 2-row (mean, variance) panel PNG; metadata JSON lists columns. */
EMP_API emp_status emp_panel_write(const emp_trace* trace, uint32_t frame_index,
                                   const int* positions, size_t position_count, int cell_size,
                                   const char* png_path, char** metadata_json);

/* Dataset-average curve of `feature` ("short_l2", "long_l2", "short_ratio")
 * for each set; one CSV column per label. png_path may be NULL. The band is
 * the half-open frame range [band_begin, band_end); equal bounds disable it. */
EMP_API emp_status emp_plot_average(const emp_feature_set* const* sets, const char* const* labels,
                                    size_t count, const char* feature, uint32_t band_begin,
                                    uint32_t band_end, const char* png_path, char** csv_out);

/* ---- object pointers -------------------------------------------------- */

/* PCA over every frame's pointer; CSV index,video_id,frame,pc1,pc2 and JSON
 * summary {explained_variance, total_variance, components}. */
EMP_API emp_status emp_pointer_pca(const emp_trace* const* traces, size_t count, char** csv_out,
                                   char** summary_json);

/* Pointer distance between each (reference, obscured) pair, per frame,
 * against the obscured trace's obscuration percent. Frames without a
 * percent are skipped. */
EMP_API emp_status emp_obscuration_correlation(const emp_trace* const* reference,
                                               const emp_trace* const* obscured, size_t count,
                                               double* pearson_r, char** scatter_csv);

/* config_json keys (optional): learning_rate, momentum, epochs, batch_size,
 * seed. loss_csv has columns epoch,loss (epoch 0 is before training). */
EMP_API emp_status emp_decoder_train(const emp_trace* const* traces, size_t count,
                                     const char* config_json, emp_decoder** out,
                                     char** loss_csv);
EMP_API emp_status emp_decoder_train_synthetic(size_t n, double noise_sigma, uint64_t data_seed,
                                               const char* config_json, emp_decoder** out,
                                               char** loss_csv, double* heldout_iou);
EMP_API emp_status emp_decoder_save(const emp_decoder* decoder, const char* path);
EMP_API emp_status emp_decoder_load(const char* path, emp_decoder** out);
EMP_API void emp_decoder_free(emp_decoder* decoder);
EMP_API emp_status emp_decoder_decode(const emp_decoder* decoder, const double* pointer,
                                      size_t length, float box[4], int* repaired);
/* CSV frame,xmin,ymin,xmax,ymax,repaired,iou (iou empty without a bbox). */
EMP_API emp_status emp_decoder_decode_trace(const emp_decoder* decoder, const emp_trace* trace,
                                            char** csv_out);

/* ---- datasets --------------------------------------------------------- */

/* options_json: {transform, n, seed, pool:{kind:"synthetic", count, frames,
 * width, height, seed} | {kind:"directory", root, object_index},
 * layout:{prefix, inter, suffix}, fill:{mode:"black"|"gray"|"noise", seed}}.
 * Writes one folder per sample under out_dir using up to `jobs` threads
 * (0 = hardware concurrency). Returns JSON [{id, manifest}] in sample order. */
EMP_API emp_status emp_forge_dataset(const char* options_json, const char* out_dir, int jobs,
                                     char** index_json);

/* spec_json: {video_id, frames, width, height, shape:"disk"|"square", size,
 * start:[x,y], velocity:[vx,vy], seed}. Writes frames/NNNNN.png and
 * masks/NNNNN.png (0/255) under out_dir. */
EMP_API emp_status emp_synth_video(const char* spec_json, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
