// statevector.h — dense statevector engine for two pseudospins (plus an
// optional herald ancilla) coupled to two truncated bosonic modes. Builds
// the streaming algebra α^b, β, S_b, conditional displacements and Gaussian
// encodings, and verifies the gate identities.
//
// Spin basis order is |q1 q2⟩ ∈ {00, 01, 10, 11}; amplitudes are laid out
// [ancilla][spin][n_x][n_y] so every operator application is a contiguous
// block GEMM (see kernels.h).

#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

namespace qlb::sv {

using cplx = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector4d;

enum class Axis { x = 0, y = 1, z = 2 };

// ---------------------------------------------------------------- modes ---

struct ModeAlgebra {
  int cutoff = 0;

  explicit ModeAlgebra(int cutoff);

  MatrixXd lowering() const;             // ⟨n|a|n+1⟩ = √(n+1)
  MatrixXd position() const;             // x̂ = (a + a†)/√2
  MatrixXd momentum_generator() const;   // a − a†   (p = i(a − a†))
  // exp(θ(a† − a)): exact exponential of the truncated generator
  // (real orthogonal, so truncated evolution stays norm-preserving).
  MatrixXd displacement(double theta) const;
};

// ----------------------------------------------------------------- spins ---

Matrix2cd pauli(Axis axis);
Matrix4cd alpha_op(Axis b);   // α^b = −σ1^x ⊗ σ2^b
Matrix4cd beta_op();          // β = σ1^z ⊗ I
Matrix4cd s_gate(Axis b);     // S_b = (β + α^b)/√2, involutory diagonalizer
// H_b = (π/2)·S_b, so exp(−iH_b) = −i·S_b.
Matrix4cd s_generator(Axis b);
// ‖exp(−iH_b) − (−i)·S_b‖_max, evaluated through a generic matrix exponential.
double s_generator_check(Axis b);

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);

// ----------------------------------------------------------------- state ---

struct HybridState {
  int cutoff = 0;
  bool has_ancilla = false;
  // Physical distributions are ledger × amplitudes; heralds and encodings
  // update it multiplicatively while the amplitudes stay normalized.
  double ledger = 1.0;
  Vector4d eta = Vector4d::Zero();
  // Leak fraction measured after the most recent displacement; the overflow
  // warning threshold is 1e-6.
  double last_leak = 0.0;
  std::vector<cplx> amp;  // [ancilla][spin][n_x][n_y]

  static HybridState zero(int cutoff, bool with_ancilla);

  std::size_t mode_block() const;    // cutoff²
  std::size_t branch_size() const;   // 4·cutoff²
  int ancilla_dim() const { return has_ancilla ? 2 : 1; }

  cplx& at(int ancilla, int spin, int nx, int ny);
  cplx at(int ancilla, int spin, int nx, int ny) const;

  double norm2() const;
  double norm() const;
  void normalize();

  void apply_spin(const Matrix4cd& u);                     // all branches
  void apply_spin_branch(const Matrix4cd& u, int ancilla); // controlled
  void apply_ancilla(const Matrix2cd& r);
  void apply_mode(const MatrixXcd& op, Axis mode);         // mode ∈ {x, y}
  void apply_mode_slice(const MatrixXcd& op, Axis mode, int ancilla, int spin);
  // Operator on the joint (spin, n_y) subspace, dimension 4·cutoff;
  // ancilla = −1 applies to every branch.
  void apply_spin_mode_y(const MatrixXcd& op, int ancilla = -1);

  // Norm fraction at Fock levels ≥ cutoff−2 on either mode.
  double leak_fraction() const;
  double ancilla_one_weight() const;

  double component_norm2(int spin) const;
  // ⟨op⟩ on the given mode axis restricted to one spin component
  // (ancilla branch 0), normalized by the component weight.
  cplx component_mode_moment(int spin, Axis mode, const MatrixXcd& op) const;
  double max_imag() const;
};

// ------------------------------------------------------------- operators ---

struct ConditionalDisplacement {
  Axis mode = Axis::x;
  double theta = 0.0;
  int cutoff = 0;
  Matrix4cd spin_vectors;   // columns: eigenbasis of the conditioning op
  Vector4d spin_values;     // ±1
  MatrixXd mode_plus;       // exp(+θ(a†−a))
  MatrixXd mode_minus;      // exp(−θ(a†−a))
  bool cutoff_warning = false;

  void apply(HybridState& state) const;
  MatrixXcd dense() const;  // on spin ⊗ mode_b, dimension 4·cutoff
};

// exp(θ·spin_op ⊗ (a_b† − a_b)) via the spin eigendecomposition and exact
// truncated per-branch displacements. spin_op must be Hermitian with ±1
// spectrum. Sets cutoff_warning when θ√(2·cutoff) > cutoff/4.
ConditionalDisplacement conditional_displacement(Axis mode_b, double theta,
                                                 const Matrix4cd& spin_op,
                                                 int cutoff);

struct StreamingSandwich {
  Axis b = Axis::x;
  Matrix4cd s;                 // S_b = S_b⁻¹
  ConditionalDisplacement d;   // β-conditioned displacement on mode b

  void apply(HybridState& state) const;  // S_b⁻¹ · D_b · S_b
  MatrixXcd dense() const;
};

// S_b⁻¹ D_b S_b = exp(θ·α^b ⊗ (a_b† − a_b)) by the conjugation identity.
StreamingSandwich streaming_sandwich(Axis b, double theta, int cutoff);

struct StreamingIdentityReport {
  double raw_residual = 0.0;
  double aligned_residual = 0.0;
  cplx phase{1.0, 0.0};
};

// Builds both sides of the gate-decomposition identity
//   exp[φ α^x (a−a†)] = R1^z†(π/4) R2^y†(−π/4) U_C†(π/4)
//                       exp[φ σ1^x (a−a†)] U_C(π/4) R1^z(π/4) R2^y(−π/4)
// and returns the max-entry difference, raw and phase-aligned.
StreamingIdentityReport verify_streaming_identity(double phi, int cutoff);

// -------------------------------------------------------------- encoding ---

struct GaussianSpec {
  double x0 = 0.0;
  double y0 = 0.0;
  double sigma = 0.70710678118654752440;  // vacuum width 1/√2
};

// Fock expansion of the normalized Gaussian wavepacket
// g(x) = (2πσ²)^(−1/4) exp(−(x−center)²/(4σ²)). Vacuum-width packets use the
// closed-form coherent expansion; other widths are projected by quadrature.
// Throws when the truncated leakage exceeds 1e−6, naming a sufficient cutoff.
std::vector<double> gaussian_fock_coeffs(double center, double sigma,
                                         int cutoff);

HybridState encode_state(const Vector4d& eta,
                         const std::array<GaussianSpec, 4>& packets,
                         int cutoff, bool with_ancilla);

struct FieldGrid {
  double min = 0.0;
  double max = 0.0;
  int points = 0;

  std::vector<double> coords() const;
};

struct ExtractedField {
  FieldGrid grid;
  // f[component](ix, iy) on the grid; includes the η and ledger weights.
  std::array<Eigen::MatrixXd, 4> f;
  double max_imag = 0.0;
};

// Hermite-function matrix ψ_n(x) for n < nmax at the given points.
Eigen::MatrixXd hermite_functions(const std::vector<double>& xs, int nmax);

ExtractedField extract_field(const HybridState& state, const FieldGrid& grid);

}  // namespace qlb::sv
