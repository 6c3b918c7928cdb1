/*
 * shecov -- stochastic heat equation covariance toolkit, C API.
 *
 * Forward simulation of the spectral Galerkin system for the stochastic heat
 * equation with multiplicative Q-noise, deterministic evolution of the
 * two-point correlation on the tensor space, and reconstruction of the noise
 * covariance eigenvalues from final-time correlation data.
 *
 * All functions return shecov_status; outputs travel through pointers. On
 * failure shecov_last_error() describes the problem for the calling thread.
 * Handles are opaque and must be released with their destroy function.
 * Mode indices are 1-based throughout, matching the eigenbasis numbering.
 */

#ifndef SHECOV_H
#define SHECOV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum shecov_status {
  SHECOV_OK = 0,
  SHECOV_ERR_INVALID_ARGUMENT = 1, /* bad parameter, unknown key, range */
  SHECOV_ERR_DOMAIN = 2,           /* point outside the spatial domain */
  SHECOV_ERR_INDEX = 3,            /* mode index out of range */
  SHECOV_ERR_NUMERICAL = 4,        /* solver failure, rank deficiency */
  SHECOV_ERR_DIVERGENCE = 5,       /* trajectory left the representable range */
  SHECOV_ERR_POSITIVITY = 6,       /* spectral logarithm hit mu <= 0 */
  SHECOV_ERR_COVERAGE = 7,         /* dataset missing required pairs */
  SHECOV_ERR_CONTRACT = 8,         /* symmetric-input contract violated */
  SHECOV_ERR_IO = 9,               /* file system or format failure */
  SHECOV_ERR_PROPERTY = 10         /* verify suite reported a failure */
} shecov_status;

/* Library version ("major.minor.patch"). */
const char* shecov_version(void);

/* Message for the most recent failure on the calling thread. */
const char* shecov_last_error(void);

/* ------------------------------------------------------------------ */
/* Basis: Dirichlet sine eigenbasis of the box (0,pi)^dim.             */

typedef struct shecov_basis shecov_basis;

shecov_status shecov_basis_create(int dim, int modes_per_axis, shecov_basis** out);
void shecov_basis_destroy(shecov_basis* basis);

shecov_status shecov_basis_mode_count(const shecov_basis* basis, int* out);
shecov_status shecov_basis_eigenvalue(const shecov_basis* basis, int k, double* out);
/* x points at dim coordinates inside the closed box [0, pi]^dim. */
shecov_status shecov_basis_eval(const shecov_basis* basis, int k, const double* x,
                                double* out);
shecov_status shecov_basis_triple_product(const shecov_basis* basis, int k, int m,
                                          int i, double* out);
/* p > 1, or INFINITY for the sup norm. */
shecov_status shecov_basis_lp_norm(const shecov_basis* basis, int k, double p,
                                   double* out);

/* ------------------------------------------------------------------ */
/* Noise covariance Q, diagonal in the eigenbasis.                     */

typedef struct shecov_q shecov_q;

shecov_status shecov_q_create_list(const double* lambdas, int count, shecov_q** out);
shecov_status shecov_q_create_power(double c, double s, int truncation, shecov_q** out);
void shecov_q_destroy(shecov_q* q);

shecov_status shecov_q_count(const shecov_q* q, int* out);
shecov_status shecov_q_lambda(const shecov_q* q, int k, double* out);

/* Lambda_{gamma,Q}; tail_bound receives the analytic power-law tail or NAN
 * when no tail certificate exists (pass NULL to skip). */
shecov_status shecov_lambda_gamma(const shecov_q* q, const shecov_basis* basis,
                                  double gamma, double* partial_sum,
                                  double* tail_bound);
/* admissible is 0/1; witness_gamma receives the first admissible grid point. */
shecov_status shecov_check_wellposed(const shecov_q* q, const shecov_basis* basis,
                                     int* admissible, double* witness_gamma);

/* ------------------------------------------------------------------ */
/* Tensor-space generator L = A0 + HQ and the exact theta evolution.   */

typedef struct shecov_generator shecov_generator;

shecov_status shecov_generator_assemble(const shecov_basis* basis, const shecov_q* q,
                                        shecov_generator** out);
void shecov_generator_destroy(shecov_generator* gen);

/* N = K(K+1)/2, the symmetrized tensor dimension. */
shecov_status shecov_generator_size(const shecov_generator* gen, int* out);
/* Row-major N x N copies. */
shecov_status shecov_generator_matrix(const shecov_generator* gen, double* out);
shecov_status shecov_generator_hq(const shecov_generator* gen, double* out);

/* theta0 and out are row-major K x K symmetric coefficient matrices. */
shecov_status shecov_evolve_theta(const shecov_generator* gen, const double* theta0,
                                  double t, double* out);
shecov_status shecov_theta_ij_exact(const shecov_generator* gen, int i, int j,
                                    double t0, double* out);

/* Truncated operator norm of HQ against the analytic Lambda bound. */
shecov_status shecov_hq_norm_check(const shecov_basis* basis, const shecov_q* q,
                                   double gamma1, double gamma2,
                                   double* operator_norm, double* bound);

/* ------------------------------------------------------------------ */
/* Spectral calculus.                                                  */

/* Spectral logarithm of a symmetric positive matrix m (row-major n x n):
 * l_rec receives the recovered generator, recovered_rank the number of modes
 * at or above the floor. floor < 0 selects the default 1e-12 * max(mu). */
shecov_status shecov_spectral_log(const double* m, int n, double t0, double floor,
                                  double* l_rec, int* recovered_rank);

/* Trotter product errors ||(e^{HQ t/n} e^{A0 t/n})^n - e^{Lt}||_F. */
shecov_status shecov_trotter_errors(const shecov_basis* basis, const shecov_q* q,
                                    double t, const int* step_counts, int count,
                                    double* errors);

/* ------------------------------------------------------------------ */
/* Monte Carlo forward solver.                                         */

/* scheme_kind: "euler_maruyama" or "exponential_euler". */
shecov_status shecov_simulate_path(const shecov_basis* basis, const shecov_q* q,
                                   const double* u0, double t,
                                   const char* scheme_kind, double dt,
                                   uint64_t path_seed, double* u_out,
                                   const char* trajectory_csv_path);

/* theta_out / stderr_out are row-major K x K (stderr_out may be NULL). */
shecov_status shecov_mc_theta(const shecov_basis* basis, const shecov_q* q,
                              const double* u0, double t, const char* scheme_kind,
                              double dt, int64_t paths, uint64_t master_seed,
                              double* theta_out, double* stderr_out);
shecov_status shecov_mc_theta_ij(const shecov_basis* basis, const shecov_q* q, int i,
                                 int j, double t, const char* scheme_kind, double dt,
                                 int64_t paths, uint64_t master_seed,
                                 double* theta_out, double* stderr_out);

/* ------------------------------------------------------------------ */
/* Command layer: JSON config in, files out. These are the entry       */
/* points the CLI drives; config_json follows the documented schema.   */

shecov_status shecov_cmd_basis(const char* config_json, const char* out_dir);

/* source: "ode" (exact) or "mc". pairs: NULL for the full family, else a
 * comma-separated list like "1:1,1:2". */
shecov_status shecov_cmd_theta(const char* config_json, const char* out_dir,
                               const char* source, const char* pairs);

/* Runs the inversion pipeline on an on-disk dataset; writes report.json into
 * out_dir. report_json (optional) receives a malloc'd copy of the report --
 * release it with shecov_string_free. */
shecov_status shecov_cmd_invert(const char* config_json, const char* dataset_dir,
                                const char* out_dir, char** report_json);

/* Runs the property suites. summary_json as above; all_passed is 0/1.
 * Returns SHECOV_ERR_PROPERTY when a property fails. corrupt_triple_tensor
 * is a negative-control hook for tests. */
shecov_status shecov_cmd_verify(const char* config_json, const char* out_dir,
                                int corrupt_triple_tensor, char** summary_json,
                                int* all_passed);

/* sweep_kind: "dt" | "K" | "M" | "t0"; values holds count sweep points. */
shecov_status shecov_cmd_converge(const char* config_json, const char* out_dir,
                                  const char* sweep_kind, const double* values,
                                  int count);

/* Default configuration document with every field materialized. */
shecov_status shecov_config_default(char** config_json);

void shecov_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SHECOV_H */
