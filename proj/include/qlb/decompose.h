// decompose.h — turns a non-unitary collision operator C = exp(M·Δt) into a
// heralded weighted sum of two commuting unitaries C = U_α + γ·U_β, with the
// feasibility window for γ, the success-optimal weight, the worst-case
// failure bound, and N-substep splitting schedules.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qlb/rng.h"

namespace qlb {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

// Spectrum outside the method's domain (non-positive real eigenvalue).
struct SpectralDomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// γ outside the per-eigenvalue feasibility circle.
struct RadicandError : std::domain_error {
  using std::domain_error::domain_error;
};

// Real symmetric scattering generator M (the evolution is C = exp(M·Δt);
// the physical scattering matrix is Ω = iM).
struct GeneratorMatrix {
  int dim = 0;
  MatrixXd m;

  // Validates squareness, dim ≥ 2, symmetry to 1e-12 entrywise.
  static GeneratorMatrix from_matrix(const MatrixXd& m);
};

struct CollisionOperator {
  MatrixXcd entries;
  VectorXcd spectrum;    // ascending by (re, im)
  MatrixXcd eigenbasis;  // columns paired with spectrum
  MatrixXcd eigenbasis_inv;
  double dt = 0.0;
  // True when the eigenbasis is unitary (symmetric/normal source), which is
  // what makes the reconstructed U_α, U_β genuinely unitary.
  bool normal = true;
};

struct GammaWindow {
  double lower = 0.0;
  double upper = 0.0;
};

struct UnitarySumDecomposition {
  MatrixXcd u_alpha;
  MatrixXcd u_beta;
  double gamma = 0.0;
  VectorXcd alphas;
  VectorXcd betas;
  bool normal = true;
  // Residuals recorded at construction (precision report / tests).
  double reconstruction_residual = 0.0;  // max-entry vs the source C
  double unitarity_residual = 0.0;       // max over U_α, U_β (spectral)
  double commutator_residual = 0.0;      // ‖U_αU_β − U_βU_α‖ (spectral)
};

struct SplitStep {
  UnitarySumDecomposition dec;
  double gamma0 = 0.0;
  double p_success = 0.0;
};

struct SplitSchedule {
  int n_steps = 0;
  std::vector<SplitStep> per_step;
  double accumulated_success = 1.0;
};

// C = exp(m·dt) via the symmetric eigendecomposition; spectrum ascending.
CollisionOperator build_collision(const GeneratorMatrix& gen, double dt);

// C = exp(m·dt) for a general real generator (Couette). The eigenbasis is
// non-unitary; its condition number must stay below cond_limit.
CollisionOperator build_collision_general(const MatrixXd& m, double dt,
                                          double cond_limit = 1e8);

// Diagonalizes an explicitly given C (Hermitian fast path, general fallback).
CollisionOperator collision_from_matrix(const MatrixXcd& c, double dt = 0.0);

// Intersection over all eigenvalues of the two-circle feasibility condition
// |γ−1| ≤ |δ_i| ≤ γ+1: lower = max_i ||δ_i|−1|, upper = 1 + min_i |δ_i|.
// For real positive spectra this is max_i|δ_i−1| / 1 + min_i δ_i.
// Returns nullopt when lower > upper. Real non-positive δ_i throws.
std::optional<GammaWindow> gamma_window(const VectorXcd& spectrum);

// P_f grows with γ, so the window's lower edge maximizes success.
double optimal_gamma(const GammaWindow& window);
double optimal_gamma(const std::optional<GammaWindow>& window);

// Per-eigenvalue closed form (real δ) / two-circle intersection (complex δ),
// then U = V·diag(·)·V⁻¹. Throws RadicandError naming the first offending
// eigenvalue when γ is infeasible.
UnitarySumDecomposition decompose(const CollisionOperator& c, double gamma);

// Worst case over pure input states: P_f = γ·‖U_α − U_β‖²/(1+γ)² with the
// spectral norm, since ‖C|ψ⟩‖² = (1+γ)² − γ‖(U_α−U_β)|ψ⟩‖².
double failure_bound(const UnitarySumDecomposition& dec);

// N identical substeps at dt/n, each decomposed at its γ₀.
SplitSchedule split_schedule(const GeneratorMatrix& gen, double dt, int n);

struct SuccessPoint {
  int n = 0;
  double p_step = 0.0;
  double p_accumulated = 0.0;
};

std::vector<SuccessPoint> success_curve(const GeneratorMatrix& gen, double dt,
                                        int n_max);

struct GammaSweepPoint {
  double ratio = 0.0;   // γ/γ₀
  double p_step = 0.0;  // 1 − P_f at that γ
};

std::vector<GammaSweepPoint> gamma_sweep(const GeneratorMatrix& gen, double dt,
                                         int n, const std::vector<double>& ratios);

// Random dissipative instance: symmetrized Gaussian entries, shifted
// negative-semidefinite, spectral radius scaled to `radius` (spectrum of
// exp(m·dt) stays in (0, 1], keeping every dt feasible).
GeneratorMatrix random_dissipative_generator(Rng& rng, int dim, double radius);

}  // namespace qlb
