/* C interface to the curricula library: opaque handles, status codes, and
 * command-level entry points. Strings returned by the library stay valid
 * until the next failing call on the same thread. */
#ifndef CURRICULA_H
#define CURRICULA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum curr_status {
  CURR_OK = 0,
  CURR_E_PARSE = 1,
  CURR_E_VALIDATION = 2,
  CURR_E_CONFIG = 3,
  CURR_E_DIMENSION = 4,
  CURR_E_FEATURE = 5,
  CURR_E_NONFINITE = 6,
  CURR_E_FORMAT = 7,
  CURR_E_INTEGRITY = 8,
  CURR_E_LABEL = 9,
  CURR_E_SPEC = 10,
  CURR_E_TRAINER = 11,
  CURR_E_IO = 12,
  CURR_E_INVALID_ARGUMENT = 13,
  CURR_E_INTERNAL = 14
} curr_status;

/* Message of the last failure on the calling thread; "" when none. */
const char* curr_last_error(void);

typedef struct curr_manifest curr_manifest;
typedef struct curr_pool curr_pool;
typedef struct curr_checkpoint curr_checkpoint;

/* Clip manifest. A NULL registry_path uses the canonical 12-class registry. */
curr_status curr_manifest_load(const char* path, const char* registry_path,
                               curr_manifest** out);
void curr_manifest_free(curr_manifest* manifest);
curr_status curr_manifest_clip_count(const curr_manifest* manifest, size_t* out);
/* level: 0 counts clips under their majority label, 1 counts frames.
 * Writes min(len, registry span) entries indexed by class id. */
curr_status curr_manifest_histogram(const curr_manifest* manifest, int level,
                                    uint64_t* counts, size_t len);

/* Training pool: windows the manifest's clips with the default windowing
 * parameters and attaches features from the sidecar directory. */
curr_status curr_pool_build(const curr_manifest* manifest, const char* features_dir,
                            curr_pool** out);
void curr_pool_free(curr_pool* pool);
curr_status curr_pool_size(const curr_pool* pool, size_t* out);
curr_status curr_pool_save(const curr_pool* pool, const char* path);

curr_status curr_checkpoint_load(const char* path, curr_checkpoint** out);
void curr_checkpoint_free(curr_checkpoint* checkpoint);
curr_status curr_checkpoint_save(const curr_checkpoint* checkpoint, const char* path);
curr_status curr_evaluate_top1(const curr_checkpoint* checkpoint, const curr_pool* pool,
                               double* out);

/* Command entry points mirroring the CLI; they return process exit codes
 * (0 success, 2 input/config, 3 training, 4 comparison inputs). Optional
 * arguments take NULL (strings) or has_seed = 0. */
int curr_cmd_prepare(const char* config_path, const char* out_dir, uint64_t seed,
                     int has_seed, int force);
int curr_cmd_bench(const char* spec_path, const char* out_dir, uint64_t seed, int has_seed,
                   int force);
int curr_cmd_run(const char* config_path, const char* strategy, const char* direction,
                 const char* out_dir, uint64_t seed, int has_seed, int force);
int curr_cmd_compare(const char* config_path, const char* base_label,
                     const char* const* run_dirs, size_t n_run_dirs, const char* out_dir,
                     int force);
int curr_cmd_report(const char* report_json, const char* format, const char* out_dir,
                    int force);

#ifdef __cplusplus
}
#endif

#endif /* CURRICULA_H */
