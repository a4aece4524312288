#ifndef STRINGSIM_H
#define STRINGSIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Static environment of the chain.
typedef enum SsEnvironment {
  SS_ENVIRONMENT_NONE = 0,
  SS_ENVIRONMENT_CHARGE = 1,
  SS_ENVIRONMENT_STRING = 2,
} SsEnvironment;

// Status codes returned by every fallible function.
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_BUFFER_TOO_SMALL = 3,
  SS_STATUS_SIZE_LIMIT = 4,
  SS_STATUS_NUMERICAL = 5,
  SS_STATUS_CONFIG = 6,
  SS_STATUS_IO = 7,
  SS_STATUS_PANIC = 8,
} SsStatus;

// Ising Hamiltonian with its propagator and environment.
typedef struct SsModel SsModel;

// Wavefunction with the static tails needed for charge observables.
typedef struct SsState SsState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t ss_last_error_message(char *buf, uintptr_t len);

// Builds a chain of `l` spins with couplings `j·e^{−β(r−1)}`, fields `g`,
// `h` and the virtual fields of `environment`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum SsStatus ss_model_new_exponential(uintptr_t l,
                                       double j,
                                       double beta,
                                       double g,
                                       double h,
                                       enum SsEnvironment environment,
                                       struct SsModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from [`ss_model_new_exponential`] and not be used again.
void ss_model_free(struct SsModel *model);

// Number of dynamical spins, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uintptr_t ss_model_num_sites(const struct SsModel *model);

// Site-resolved virtual field `Δh_i` of the model (`L` values).
//
// # Safety
// `model` must be a live handle; `out` must hold `len` doubles.
enum SsStatus ss_model_virtual_field(const struct SsModel *model, double *out, uintptr_t len);

// Two-body potential `V(l1, l2)` of the string between static charges on
// an `l`-site chain.
//
// # Safety
// `out` must point to one writable double.
enum SsStatus ss_two_body_potential(int32_t l1,
                                    int32_t l2,
                                    double j,
                                    double beta,
                                    double h,
                                    uintptr_t l,
                                    double *out);

// Classical initial state of the model's environment.
//
// # Safety
// `model` must be a live handle; `out` a valid handle slot.
enum SsStatus ss_state_new_initial(const struct SsModel *model, struct SsState **out);

// Releases a state. Null is ignored.
//
// # Safety
// `state` must come from [`ss_state_new_initial`] and not be used again.
void ss_state_free(struct SsState *state);

// Advances `state` by `steps` steps of length `dt` under `model`.
//
// # Safety
// Both handles must be live; the state must belong to a model of equal size.
enum SsStatus ss_state_propagate(const struct SsModel *model,
                                 struct SsState *state,
                                 double dt,
                                 uintptr_t steps);

// Number of bonds reported by [`ss_state_charge_density`] (`L + 3`).
//
// # Safety
// `state` must be null or a live handle.
uintptr_t ss_state_num_bonds(const struct SsState *state);

// Charge density `q_b` on bonds `i0−1 ..= i0+L+1`.
//
// # Safety
// `state` must be live; `out` must hold `len` doubles.
enum SsStatus ss_state_charge_density(const struct SsState *state, double *out, uintptr_t len);

// Electric field `ε_i = ⟨σᶻ_i⟩` on the `L` dynamical sites.
//
// # Safety
// `state` must be live; `out` must hold `len` doubles.
enum SsStatus ss_state_electric_field(const struct SsState *state, double *out, uintptr_t len);

// Runs a scenario file, writing artifacts under `out_dir` (null: `out`).
//
// # Safety
// `config` and `out_dir` must be null or NUL-terminated UTF-8 strings.
enum SsStatus ss_run_scenario(const char *config, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRINGSIM_H */
