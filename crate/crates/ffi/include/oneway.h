#ifndef ONEWAY_H
#define ONEWAY_H

/* Generated by cbindgen from the oneway-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome.
typedef enum OwStatus {
  OW_STATUS_OK = 0,
  OW_STATUS_NULL_POINTER = 1,
  OW_STATUS_INVALID_ARGUMENT = 2,
  OW_STATUS_IMPOSSIBLE_BRANCH = 3,
  OW_STATUS_UTF8 = 4,
  OW_STATUS_PANIC = 5,
} OwStatus;

// Opaque state-vector handle.
typedef struct OwKet OwKet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; never freed.
const char *ow_version(void);

// Message of the last failure on this thread. Valid until the next
// failing call; never freed by the caller.
const char *ow_last_error(void);

// Builds the linear-chain cluster state on `n` qubits.
// # Safety
// `out` must point to writable storage for one `*mut OwKet`.
enum OwStatus ow_cluster_chain(uint32_t n, struct OwKet **out);

// Builds a cluster state from a JSON graph {"n":…, "edges":[[i,j],…]}.
// # Safety
// `graph_json` must be a valid NUL-terminated string and `out` must
// point to writable storage for one `*mut OwKet`.
enum OwStatus ow_cluster_from_graph_json(const char *graph_json, struct OwKet **out);

// Number of qubits in the handle.
// # Safety
// `ket` must be a live handle from this library and `out` must point to
// writable storage for one `u32`.
enum OwStatus ow_ket_num_qubits(const struct OwKet *ket, uint32_t *out);

// Copies the 2^n amplitudes into caller-provided real/imaginary buffers
// of length `len` (which must equal 2^n).
// # Safety
// `ket` must be a live handle and `re`/`im` must each point to `len`
// writable doubles.
enum OwStatus ow_ket_amplitudes(const struct OwKet *ket, double *re, double *im, uintptr_t len);

// Releases a state handle. Null is a no-op.
// # Safety
// `ket` must be null or a handle produced by this library that has not
// been freed already.
void ow_ket_free(struct OwKet *ket);

// Releases a string returned through a `char**` out-parameter.
// # Safety
// `s` must be null or a string produced by this library that has not
// been freed already.
void ow_string_free(char *s);

// Runs the single-qubit rotation protocol and returns the per-branch
// report as a JSON string. `ordering` is 'a' or 'b'; `noise_p` in [0, 1]
// is the white-noise weight (1 = ideal).
// # Safety
// `out_json` must point to writable storage for one `*mut c_char`.
enum OwStatus ow_rotation_report_json(double alpha,
                                      double beta,
                                      char ordering,
                                      double noise_p,
                                      char **out_json);

// Runs the C-NOT protocol. `oracle_hadamard` selects 𝒪 = H (1) or
// 𝒪 = 𝟙 (0); `ht_compensated` toggles the target-Hadamard compensation.
// # Safety
// `out_json` must point to writable storage for one `*mut c_char`.
enum OwStatus ow_cnot_report_json(double alpha,
                                  int32_t oracle_hadamard,
                                  int32_t ht_compensated,
                                  double noise_p,
                                  char **out_json);

// Runs the C-Phase protocol.
// # Safety
// `out_json` must point to writable storage for one `*mut c_char`.
enum OwStatus ow_cphase_report_json(double alpha, double beta, double noise_p, char **out_json);

// Stabilizer fidelity of the white-noise 4-qubit cluster state,
// p + (1−p)/16 computed through the 16-element stabilizer average.
// # Safety
// `out` must point to writable storage for one `f64`.
enum OwStatus ow_stabilizer_fidelity_white(double p, double *out);

// Enumerates all branches of a serialized pattern on a cluster state
// (JSON graph optional, defaults to the linear chain) and returns them as
// JSON: outcomes, probability, frame, output amplitudes.
// # Safety
// `pattern_json` must be a valid NUL-terminated string, `graph_json`
// must be null or a valid NUL-terminated string, and `out_json` must
// point to writable storage for one `*mut c_char`.
enum OwStatus ow_pattern_branches_json(const char *pattern_json,
                                       const char *graph_json,
                                       char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONEWAY_H */
