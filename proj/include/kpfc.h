/* kpfc — keypoint motion forecasting, C API.
 *
 * A small shared-library surface over the forecasting core: clip ingestion,
 * synthetic corpus generation, sliding-window datasets, the four forecaster
 * architectures, Adam training, RMSE/FID evaluation, latency measurement,
 * and keep-out envelope geometry.
 *
 * Conventions:
 *   - every fallible call returns kpfc_status; KPFC_OK is 0
 *   - on failure, kpfc_last_error() returns a thread-local message that
 *     stays valid until the next failing call on the same thread
 *   - objects returned through out-parameters are owned by the caller and
 *     released with the matching *_free function
 *   - pose frames are row-major float arrays of 17 (x, y) keypoints:
 *     34 floats per frame
 */
#ifndef KPFC_H_
#define KPFC_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define KPFC_JOINTS 17
#define KPFC_FRAME_DIM 34 /* 17 * 2 */
#define KPFC_T_IN 60
#define KPFC_T_OUT 30

typedef enum kpfc_status {
  KPFC_OK = 0,
  KPFC_ERR_INVALID_ARGUMENT = 1,
  KPFC_ERR_DIMENSION = 2,
  KPFC_ERR_PARSE = 3,
  KPFC_ERR_SCHEMA = 4,
  KPFC_ERR_IO = 5,
  KPFC_ERR_FORMAT = 6,
  KPFC_ERR_CORRUPT = 7,
  KPFC_ERR_NUMERIC = 8,
  KPFC_ERR_CONTRACT = 9
} kpfc_status;

typedef enum kpfc_arch {
  KPFC_ARCH_MLP = 0,
  KPFC_ARCH_LSTM = 1,
  KPFC_ARCH_CNNLSTM = 2,
  KPFC_ARCH_TRANSFORMER = 3
} kpfc_arch;

typedef enum kpfc_synth_profile {
  KPFC_SYNTH_PRETRAIN = 0, /* large-corpus priors */
  KPFC_SYNTH_REAL_LIKE = 1 /* shifted priors + extra noise */
} kpfc_synth_profile;

typedef struct kpfc_clips kpfc_clips;
typedef struct kpfc_windows kpfc_windows;
typedef struct kpfc_model kpfc_model;

const char* kpfc_version(void);
const char* kpfc_status_name(kpfc_status status);
const char* kpfc_last_error(void);

const char* kpfc_arch_name(kpfc_arch arch);
kpfc_status kpfc_arch_from_name(const char* name, kpfc_arch* out);

/* ---- clips ------------------------------------------------------------ */

/* JSON Lines, one frame per record:
 *   {"clip_id": str, "frame": int, "kp": [[x, y] * 17]}            */
kpfc_status kpfc_clips_load(const char* path, kpfc_clips** out);
kpfc_status kpfc_clips_save(const kpfc_clips* clips, const char* path);
/* sidecar labels: {"clip_id": str, "behavior": int} */
kpfc_status kpfc_clips_save_labels(const kpfc_clips* clips, const char* path);
size_t kpfc_clips_count(const kpfc_clips* clips);
const char* kpfc_clips_id(const kpfc_clips* clips, size_t index);
size_t kpfc_clips_frame_count(const kpfc_clips* clips, size_t index);
/* frame-major buffer of frame_count * 34 floats; valid until the next
 * kpfc_clips_frames call on the same handle */
const float* kpfc_clips_frames(const kpfc_clips* clips, size_t index);
/* behavior class, or -1 when unlabeled */
int kpfc_clips_behavior(const kpfc_clips* clips, size_t index);
void kpfc_clips_free(kpfc_clips* clips);

/* procedural corpus generation; clip_count <= 0 selects nothing */
kpfc_status kpfc_synth_generate(int clip_count, uint64_t seed, kpfc_synth_profile profile,
                                int clip_len, kpfc_clips** out);

/* ---- windows ----------------------------------------------------------- */

kpfc_status kpfc_windows_build(const kpfc_clips* clips, int t_in, int t_out, int step,
                               kpfc_windows** out);
size_t kpfc_windows_count(const kpfc_windows* windows);
/* seeded shuffle, ceil(n * train_fraction) training windows; by_clip != 0
 * assigns whole clips to the training side */
kpfc_status kpfc_windows_split(const kpfc_windows* windows, double train_fraction, uint64_t seed,
                               int by_clip, kpfc_windows** train_out, kpfc_windows** test_out);
void kpfc_windows_free(kpfc_windows* windows);

/* ---- models ------------------------------------------------------------ */

kpfc_status kpfc_model_build(kpfc_arch arch, uint64_t seed, kpfc_model** out);
kpfc_status kpfc_model_load(const char* path, kpfc_model** out);
kpfc_status kpfc_model_save(const kpfc_model* model, const char* path);
kpfc_arch kpfc_model_arch(const kpfc_model* model);
int64_t kpfc_model_param_count(const kpfc_model* model);
/* batch-1 eval forward in normalized pose space:
 * input 60*34 floats -> output 30*34 floats */
kpfc_status kpfc_model_forward(kpfc_model* model, const float* input, float* output);
/* world-coordinate convenience: normalizes the 60 observed frames, runs the
 * model, denormalizes the horizon with the last observed frame's centroid
 * and scale held constant */
kpfc_status kpfc_model_forecast(kpfc_model* model, const float* frames, float* out);
void kpfc_model_free(kpfc_model* model);

/* ---- training ---------------------------------------------------------- */

typedef struct kpfc_train_config {
  double lr;
  int epochs;
  int batch_size;
  double weight_decay;
  double beta1;
  double beta2;
  double eps;
  uint64_t seed;
  int checkpoint_every; /* epochs; 0 disables periodic checkpoints */
} kpfc_train_config;

void kpfc_train_config_defaults(kpfc_arch arch, kpfc_train_config* out);

/* eval_rmse_x100 is NaN when no eval windows were supplied */
typedef void (*kpfc_epoch_callback)(int epoch, double train_mse, double eval_rmse_x100, void* user);

/* Adam/MSE training; a fresh optimizer state per call, so calling twice on
 * the same model implements pretrain -> finetune. checkpoint_path may be
 * NULL unless checkpoint_every > 0. */
kpfc_status kpfc_train(kpfc_model* model, const kpfc_windows* train_windows,
                       const kpfc_windows* eval_windows_or_null, const kpfc_train_config* config,
                       const char* checkpoint_path, kpfc_epoch_callback callback, void* user);

/* ---- evaluation -------------------------------------------------------- */

typedef struct kpfc_metrics_report {
  double rmse_x100;
  double fid;
  int64_t n;
} kpfc_metrics_report;

kpfc_status kpfc_evaluate(kpfc_model* model, const kpfc_windows* windows,
                          kpfc_metrics_report* out);

/* ---- latency ----------------------------------------------------------- */

typedef struct kpfc_latency_report {
  kpfc_arch arch;
  int64_t params;
  double mean_ms;
  double p50_ms;
  double p99_ms;
  double fps;
  int warmup;
  int iters;
} kpfc_latency_report;

kpfc_status kpfc_bench(kpfc_model* model, int warmup, int iters, uint64_t seed,
                       kpfc_latency_report* out);

/* Formats the aligned text table (rows ordered by architecture). Returns the
 * byte length of the full table excluding the terminating NUL; when buf is
 * non-NULL, writes at most cap-1 bytes plus a NUL. */
size_t kpfc_report_table(const kpfc_latency_report* reports, size_t count, char* buf, size_t cap);

/* ---- envelopes --------------------------------------------------------- */

typedef struct kpfc_box {
  int frame_index; /* 1-based; 0 for the union record */
  float min_x, min_y;
  float max_x, max_y;
} kpfc_box;

/* frames: n_frames * 34 world-coordinate floats; boxes must hold n_frames
 * entries */
kpfc_status kpfc_keepout_boxes(const float* frames, int n_frames, float margin, kpfc_box* boxes,
                               kpfc_box* union_out);
kpfc_status kpfc_min_clearance(const float* frames, int n_frames, float px, float py,
                               double* distance, int* frame_index, int* joint_index);

/* ---- normalization helpers --------------------------------------------- */

kpfc_status kpfc_normalize_frame(const float* frame, float* out, float* cx, float* cy,
                                 float* scale);
kpfc_status kpfc_denormalize_frame(const float* frame, float cx, float cy, float scale,
                                   float* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KPFC_H_ */
