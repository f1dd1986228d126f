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

/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <math.h>

#include "emprobe/emprobe.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define EXPECT_OK(call)                                                           \
  do {                                                                            \
    emp_status st_ = (call);                                                      \
    if (st_ != EMP_OK) {                                                          \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,         \
              emp_status_name(st_), emp_last_error());                            \
      ++failures;                                                                 \
    }                                                                             \
  } while (0)

static char dir[2048];

static const char* path_in(const char* name) {
  static char buf[4][4096];
  static int slot = 0;
  slot = (slot + 1) % 4;
  snprintf(buf[slot], sizeof buf[slot], "%s/%s", dir, name);
  return buf[slot];
}

static void test_basics(void) {
  EXPECT(emp_version() != NULL && strlen(emp_version()) > 0);
  EXPECT(strcmp(emp_status_name(EMP_OK), "ok") == 0);
  EXPECT(strcmp(emp_status_name(EMP_ERR_FORMAT), "format error") == 0);
  EXPECT(emp_trace_read(NULL, NULL) == EMP_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(emp_last_error()) > 0);
  emp_string_free(NULL);
  emp_trace_free(NULL);
  emp_decoder_free(NULL);
  emp_feature_set_free(NULL);
}

static emp_trace* synth(unsigned seed, double shift) {
  char spec[512];
  snprintf(spec, sizeof spec,
           "{\"video_id\":\"c%u\",\"seed\":%u,\"shift\":%g,"
           "\"positions\":[4,{\"id\":2,\"shape\":[3,4,4]}]}",
           seed, seed, shift);
  emp_trace* t = NULL;
  EXPECT_OK(emp_trace_synth(spec, &t));
  return t;
}

static void test_traces(void) {
  emp_trace* t = synth(1, 5.0);
  if (!t) return;
  size_t frames = 0;
  EXPECT_OK(emp_trace_frame_count(t, &frames));
  EXPECT(frames == 28);
  char* info = NULL;
  EXPECT_OK(emp_trace_info(t, &info));
  EXPECT(info && strstr(info, "\"c1\"") != NULL);
  emp_string_free(info);

  EXPECT_OK(emp_trace_write(t, path_in("c1.emtr")));
  emp_trace* back = NULL;
  EXPECT_OK(emp_trace_read(path_in("c1.emtr"), &back));
  EXPECT(back != NULL);
  emp_trace_free(back);

  int ok = -1;
  char* report = NULL;
  EXPECT_OK(emp_trace_validate(path_in("c1.emtr"), &ok, &report));
  EXPECT(ok == 1);
  emp_string_free(report);

  FILE* f = fopen(path_in("junk.emtr"), "wb");
  fputs("EMTRjunk", f);
  fclose(f);
  EXPECT(emp_trace_read(path_in("junk.emtr"), &back) == EMP_ERR_FORMAT);
  EXPECT_OK(emp_trace_validate(path_in("junk.emtr"), &ok, &report));
  EXPECT(ok == 0);
  EXPECT(report && strstr(report, "\"kind\"") != NULL);
  emp_string_free(report);
  EXPECT(emp_trace_validate(path_in("missing.emtr"), &ok, &report) == EMP_ERR_IO);

  char* csv = NULL;
  EXPECT_OK(emp_features_csv(t, 2, 1, 5, &csv));
  EXPECT(csv && strncmp(csv, "frame,position,short_l2,long_l2,short_ratio,object_present\n", 59) == 0);
  emp_string_free(csv);
  EXPECT(emp_features_csv(t, 5, 1, 5, &csv) == EMP_ERR_INVALID_ARGUMENT);

  char* meta = NULL;
  const int cols[] = {2};
  EXPECT_OK(emp_panel_write(t, 3, cols, 1, 8, path_in("panel.png"), &meta));
  EXPECT(meta && strstr(meta, "\"columns\"") != NULL);
  emp_string_free(meta);
  emp_trace_free(t);
}

static void test_presence_and_plot(void) {
  emp_feature_set* set = NULL;
  EXPECT_OK(emp_feature_set_new(&set));
  for (unsigned s = 0; s < 6; ++s) {
    emp_trace* t = synth(s, 5.0);
    EXPECT_OK(emp_feature_set_add_trace(set, t, 2, 1, 5));
    emp_trace_free(t);
  }
  size_t n = 0;
  EXPECT_OK(emp_feature_set_size(set, &n));
  EXPECT(n == 6);
  char* report = NULL;
  char* dist = NULL;
  EXPECT_OK(emp_presence_report(set, 2, &report, &dist));
  EXPECT(report && strstr(report, "\"linear\"") != NULL);
  EXPECT(dist && strncmp(dist, "frame,feature,label", 19) == 0);
  emp_string_free(report);
  emp_string_free(dist);

  const emp_feature_set* sets[] = {set};
  const char* labels[] = {"shifted"};
  char* csv = NULL;
  EXPECT_OK(emp_plot_average(sets, labels, 1, "short_l2", 12, 16, path_in("plot.png"), &csv));
  EXPECT(csv && strncmp(csv, "frame,shifted\n", 14) == 0);
  emp_string_free(csv);
  EXPECT(emp_plot_average(sets, labels, 1, "bogus", 12, 16, NULL, &csv) == EMP_ERR_INVALID_ARGUMENT);
  emp_feature_set_free(set);
}

static void test_pointers(void) {
  emp_trace* a = synth(10, 0.0);
  emp_trace* b = synth(11, 0.0);
  const emp_trace* both[] = {a, b};
  char* csv = NULL;
  char* summary = NULL;
  EXPECT_OK(emp_pointer_pca(both, 2, &csv, &summary));
  EXPECT(csv && strncmp(csv, "index,video_id,frame,pc1,pc2\n", 29) == 0);
  EXPECT(summary && strstr(summary, "explained_variance") != NULL);
  emp_string_free(csv);
  emp_string_free(summary);

  emp_decoder* dec = NULL;
  double iou = -1.0;
  EXPECT_OK(emp_decoder_train_synthetic(320, 0.01, 3, "{\"epochs\":2,\"seed\":1}", &dec, &csv, &iou));
  EXPECT(iou >= 0.0 && iou <= 1.0);
  EXPECT(csv && strncmp(csv, "epoch,loss\n", 11) == 0);
  emp_string_free(csv);
  EXPECT_OK(emp_decoder_save(dec, path_in("d.emdc")));
  emp_decoder* loaded = NULL;
  EXPECT_OK(emp_decoder_load(path_in("d.emdc"), &loaded));
  double ptr[256] = {0};
  float box1[4], box2[4];
  int rep = -1;
  EXPECT_OK(emp_decoder_decode(dec, ptr, 256, box1, &rep));
  EXPECT_OK(emp_decoder_decode(loaded, ptr, 256, box2, &rep));
  EXPECT(box1[0] <= box1[2] && box1[1] <= box1[3]);
  EXPECT(fabsf(box1[0] - box2[0]) < 1e-4f);
  EXPECT(emp_decoder_decode(dec, ptr, 3, box1, &rep) == EMP_ERR_INVALID_ARGUMENT);
  EXPECT_OK(emp_decoder_decode_trace(dec, a, &csv));
  EXPECT(csv && strncmp(csv, "frame,xmin,ymin,xmax,ymax,repaired,iou\n", 39) == 0);
  emp_string_free(csv);
  emp_decoder_free(dec);
  emp_decoder_free(loaded);
  emp_trace_free(a);
  emp_trace_free(b);
}

static void test_datasets(void) {
  char* index = NULL;
  EXPECT_OK(emp_forge_dataset(
      "{\"transform\":\"obscuration\",\"n\":2,\"seed\":4,"
      "\"pool\":{\"kind\":\"synthetic\",\"count\":3,\"width\":64,\"height\":64}}",
      path_in("forged"), 1, &index));
  EXPECT(index && strstr(index, "obscuration_00001") != NULL);
  emp_string_free(index);
  EXPECT(emp_forge_dataset("{\"transform\":\"nope\"}", path_in("bad"), 1, &index) != EMP_OK);
  EXPECT_OK(emp_synth_video("{\"video_id\":\"sv\",\"frames\":3,\"width\":32,\"height\":32,\"size\":4}",
                            path_in("sv")));
  FILE* f = fopen(path_in("sv/masks/00002.png"), "rb");
  EXPECT(f != NULL);
  if (f) fclose(f);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <scratch-dir>\n", argv[0]);
    return 2;
  }
  snprintf(dir, sizeof dir, "%s", argv[1]);
  test_basics();
  test_traces();
  test_presence_and_plot();
  test_pointers();
  test_datasets();
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
