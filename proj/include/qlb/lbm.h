// lbm.h — classical D2Q4 lattice-Boltzmann reference solver for
// advection-diffusion: spectral-synthesis scattering matrix, streaming +
// relaxation steps on a periodic grid, and torus-aware moment diagnostics.
//
// Velocities are numbered counterclockwise from +x:
//   c1 = (1,0), c2 = (0,1), c3 = (−1,0), c4 = (0,−1)   (indices 0..3 here).

#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace qlb::lbm {

inline constexpr double kCs2 = 0.5;
inline constexpr double kWeight = 0.25;
inline constexpr std::array<std::array<double, 2>, 4> kVelocities{
    {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}};

struct VelocityField {
  enum class Type { constant, couette };
  Type type = Type::constant;
  double ux = 0.0;
  double uy = 0.0;
  double u0 = 0.0;   // Couette shear amplitude
  // Centered profile U_x = u0·(y − ny/2)/(ny/2); false gives raw u0·y.
  bool centered = true;

  std::array<double, 2> at(double y, int ny) const;
};

struct TransportModel {
  double diffusivity = 0.0;
  VelocityField velocity;
  std::array<double, 4> omega{};  // ω1..ω4

  // ω1 = 0, ω2 = ω3 = 1/(1/2 + D/c_s²), ω4 as given.
  static TransportModel make(double diffusivity, VelocityField velocity,
                             double omega4 = 1.0);
  // Anisotropic diffusivities via ω2 ≠ ω3.
  void set_rates(double omega2, double omega3);
};

struct ScatteringMatrix {
  Eigen::Matrix4d a;
  Eigen::Matrix4d basis;  // rows = orthonormalized moment vectors
  Eigen::Vector4d rates;
};

// A = Σ_k ω_k |â_k⟩⟨â_k| over the orthonormalized moment basis
// {1, c_x, c_y, c_x² − c_s²}.
ScatteringMatrix scattering_matrix(const TransportModel& model);

// f_i^eq = w_i [ρ + ρ U·c_i / c_s²]
Eigen::Vector4d equilibrium(double rho, double ux, double uy);

// Ω_cl with Ω_cl·f = −A(f − f^eq(f)) for constant advection velocity:
// Ω_cl,ij = −A_ij + Σ_k A_ik w_k (1 + u_k), u_k = U·c_k/c_s².
Eigen::Matrix4d omega_matrix(const TransportModel& model, double ux, double uy);

struct LatticeField {
  int nx = 0;
  int ny = 0;
  std::vector<double> f;  // [component][y][x]

  LatticeField() = default;
  LatticeField(int nx, int ny);

  double& at(int component, int x, int y);
  double at(int component, int x, int y) const;
  double* row(int component, int y);
  const double* row(int component, int y) const;
  double mass() const;
  double density(int x, int y) const;
};

// Gaussian density pulse, each site initialized to its local equilibrium.
LatticeField gaussian_init(int nx, int ny, double x0, double y0, double sigma,
                           const TransportModel& model);

// Displace each component one lattice site along its velocity (periodic).
void stream(LatticeField& field);

// Relax f ← f − A(f − f^eq) with the local (ρ, U) at every site.
void collide(LatticeField& field, const TransportModel& model);

// One LB iteration: stream, then collide.
void step(LatticeField& field, const TransportModel& model);

struct MomentSample {
  long step = 0;
  double mass = 0.0;
  // Circular means, cumulatively unwrapped across samples.
  double mean_x = 0.0;
  double mean_y = 0.0;
  // First-harmonic variance (exact for wrapped Gaussians on the torus).
  double var_x = 0.0;
  double var_y = 0.0;
};

struct RunResult {
  std::vector<MomentSample> samples;
  LatticeField final_field;
};

// Iterates `step`, sampling moments every sample_every iterations (plus the
// initial state). Aborts with a diagnostic if any |f| exceeds 1e6.
RunResult run(LatticeField field, const TransportModel& model, long steps,
              long sample_every);

}  // namespace qlb::lbm
