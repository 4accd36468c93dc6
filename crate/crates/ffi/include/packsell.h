#ifndef PACKSELL_H
#define PACKSELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_IO = 3,
  PS_STATUS_PARSE = 4,
  PS_STATUS_CODEC = 5,
  PS_STATUS_DIMENSION_MISMATCH = 6,
  PS_STATUS_CONTAINER = 7,
  PS_STATUS_STRUCTURE = 8,
  PS_STATUS_PANIC = 9,
} PsStatus;

typedef enum PsCodec {
  /*
   IEEE half values, `V = 16`.
   */
  PS_CODEC_FP16 = 0,
  /*
   Sign, 8 exponent bits and `22 - D` mantissa bits, `W = 32`.
   */
  PS_CODEC_E8MY = 1,
  /*
   Lossless FP32 values, `W = 64`.
   */
  PS_CODEC_FP32_EMBED = 2,
} PsCodec;

typedef enum PsPermMode {
  /*
   No sorting.
   */
  PS_PERM_MODE_NONE = 0,
  /*
   Rows sorted within σ-blocks; SpMV output is in sorted order.
   */
  PS_PERM_MODE_EXPLICIT = 1,
  /*
   Rows sorted within σ-blocks; SpMV output is in original order.
   */
  PS_PERM_MODE_IMPLICIT = 2,
} PsPermMode;

/*
 A CSR matrix with `f64` values.
 */
typedef struct PsCsr PsCsr;

/*
 A PackSELL matrix.
 */
typedef struct PsPackSell PsPackSell;

/*
 Word layout and slice structure for `ps_packsell_build`. `codec` holds a
 `PsCodec` value and `mode` a `PsPermMode` value.
 */
typedef struct PsBuildOptions {
  uint32_t word_bits;
  uint32_t delta_bits;
  uint32_t codec;
  size_t slice;
  size_t sigma;
  uint32_t mode;
} PsBuildOptions;

typedef struct PsCounts {
  uint64_t nnz_real;
  uint64_t n_dummy;
  uint64_t n_padding;
} PsCounts;

typedef struct PsFootprint {
  uint64_t pack_bits;
  uint64_t sell_equiv_bits;
  uint64_t overhead_bits;
  double ratio;
} PsFootprint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Description of the last failure on this thread (empty after a
 successful call). The pointer stays valid until the next call into this
 library on the same thread.
 */
const char *ps_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/*
 Reads a Matrix Market file (`coordinate`, `real`/`integer`,
 `general`/`symmetric`).

 # Safety
 `file` must be a NUL-terminated string and `out_matrix` a valid pointer.
 */
enum PsStatus ps_csr_from_mtx_file(const char *file, struct PsCsr **out_matrix);

/*
 Builds a CSR matrix from 0-based triplets; duplicates are summed.

 # Safety
 `rows`, `cols` and `values` must each point to `nnz` elements and
 `out_matrix` must be valid.
 */
enum PsStatus ps_csr_from_triplets(size_t n_rows,
                                   size_t n_cols,
                                   size_t nnz,
                                   const size_t *rows,
                                   const size_t *cols,
                                   const double *values,
                                   struct PsCsr **out_matrix);

/*
 # Safety
 `matrix` must be null or a handle from this library not yet freed.
 */
void ps_csr_free(struct PsCsr *matrix);

/*
 # Safety
 `matrix` must be a live handle; the out pointers must be valid.
 */
enum PsStatus ps_csr_dims(const struct PsCsr *matrix, size_t *n_rows, size_t *n_cols, size_t *nnz);

/*
 `y = A x` in `f64`.

 # Safety
 `x` and `y` must point to `x_len` and `y_len` elements.
 */
enum PsStatus ps_csr_spmv_f64(const struct PsCsr *matrix,
                              const double *x,
                              size_t x_len,
                              double *y,
                              size_t y_len);

/*
 FP16 values, `W = 32`, `D = 15`, `C = 32`, `σ = 256`, implicit
 permutation.
 */
struct PsBuildOptions ps_build_options_default(void);

/*
 Converts a CSR matrix to PackSELL.

 # Safety
 `matrix` and `options` must be valid; `out_matrix` must be writable.
 */
enum PsStatus ps_packsell_build(const struct PsCsr *matrix,
                                const struct PsBuildOptions *options,
                                struct PsPackSell **out_matrix);

/*
 # Safety
 `matrix` must be null or a handle from this library not yet freed.
 */
void ps_packsell_free(struct PsPackSell *matrix);

/*
 # Safety
 `matrix` must be a live handle; the out pointers must be valid.
 */
enum PsStatus ps_packsell_dims(const struct PsPackSell *matrix, size_t *n_rows, size_t *n_cols);

/*
 Real, dummy and padding word counts.

 # Safety
 `matrix` must be a live handle and `counts` valid.
 */
enum PsStatus ps_packsell_counts(const struct PsPackSell *matrix, struct PsCounts *counts);

/*
 Footprint against the equivalent SELL matrix.

 # Safety
 `matrix` must be a live handle and `footprint` valid.
 */
enum PsStatus ps_packsell_footprint(const struct PsPackSell *matrix, struct PsFootprint *footprint);

/*
 `y = A x` with `f64` vectors. With explicit permutation `y` is in sorted
 row order.

 # Safety
 `x` and `y` must point to `x_len` and `y_len` elements.
 */
enum PsStatus ps_packsell_spmv_f64(const struct PsPackSell *matrix,
                                   const double *x,
                                   size_t x_len,
                                   double *y,
                                   size_t y_len);

/*
 `y = A x` with `f32` vectors.

 # Safety
 `x` and `y` must point to `x_len` and `y_len` elements.
 */
enum PsStatus ps_packsell_spmv_f32(const struct PsPackSell *matrix,
                                   const float *x,
                                   size_t x_len,
                                   float *y,
                                   size_t y_len);

/*
 Writes a `.psell` container.

 # Safety
 `matrix` must be a live handle and `file` a NUL-terminated string.
 */
enum PsStatus ps_packsell_write(const struct PsPackSell *matrix, const char *file);

/*
 Reads a `.psell` container.

 # Safety
 `file` must be a NUL-terminated string and `out_matrix` valid.
 */
enum PsStatus ps_packsell_read(const char *file, struct PsPackSell **out_matrix);

/*
 Packs one word. `has_value = false` makes a dummy carrying `delta`.
 `codec_id` is a `PsCodec` value.

 # Safety
 `word` must be valid.
 */
enum PsStatus ps_pack_word(uint32_t word_bits,
                           uint32_t delta_bits,
                           uint32_t codec_id,
                           bool has_value,
                           double value,
                           uint64_t delta,
                           uint64_t *word);

/*
 Unpacks one word into its decoded value, delta and flag.

 # Safety
 The out pointers must be valid.
 */
enum PsStatus ps_unpack_word(uint32_t word_bits,
                             uint32_t delta_bits,
                             uint32_t codec_id,
                             uint64_t word,
                             double *value,
                             uint64_t *delta,
                             bool *has_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACKSELL_H */
