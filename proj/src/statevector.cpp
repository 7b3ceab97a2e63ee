#include "qlb/statevector.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qlb/io.h"
#include "qlb/kernels.h"
#include "qlb/linalg.h"

namespace qlb::sv {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kVacuumWidth = 0.70710678118654752440;

std::vector<cplx> to_row_major(const MatrixXcd& m) {
  std::vector<cplx> out(static_cast<std::size_t>(m.rows()) * m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[static_cast<std::size_t>(i) * m.cols() + j] = m(i, j);
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- modes ---

ModeAlgebra::ModeAlgebra(int cutoff_) : cutoff(cutoff_) {
  if (cutoff_ < 2) throw io::InputError("ModeAlgebra: cutoff must be >= 2");
}

MatrixXd ModeAlgebra::lowering() const {
  MatrixXd a = MatrixXd::Zero(cutoff, cutoff);
  for (int n = 0; n + 1 < cutoff; ++n) a(n, n + 1) = std::sqrt(n + 1.0);
  return a;
}

MatrixXd ModeAlgebra::position() const {
  const MatrixXd a = lowering();
  return (a + a.transpose()) / kSqrt2;
}

MatrixXd ModeAlgebra::momentum_generator() const {
  const MatrixXd a = lowering();
  return a - a.transpose();
}

MatrixXd ModeAlgebra::displacement(double theta) const {
  const MatrixXd a = lowering();
  const MatrixXd k = a.transpose() - a;  // a† − a
  return linalg::expm_antisymmetric(k, theta);
}

// ----------------------------------------------------------------- spins ---

Matrix2cd pauli(Axis axis) {
  Matrix2cd m;
  switch (axis) {
    case Axis::x:
      m << 0, 1, 1, 0;
      break;
    case Axis::y:
      m << 0, cplx(0, -1), cplx(0, 1), 0;
      break;
    case Axis::z:
      m << 1, 0, 0, -1;
      break;
  }
  return m;
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix4cd alpha_op(Axis b) {
  return -kron(pauli(Axis::x), pauli(b));
}

Matrix4cd beta_op() {
  return kron(pauli(Axis::z), Matrix2cd::Identity());
}

Matrix4cd s_gate(Axis b) {
  return (beta_op() + alpha_op(b)) / kSqrt2;
}

Matrix4cd s_generator(Axis b) {
  return (std::numbers::pi / 2.0) * s_gate(b);
}

double s_generator_check(Axis b) {
  const Matrix4cd expo = linalg::expm_minus_i_hermitian(s_generator(b));
  const Matrix4cd target = cplx(0.0, -1.0) * s_gate(b);
  return linalg::max_abs(MatrixXcd(expo - target));
}

// ----------------------------------------------------------------- state ---

HybridState HybridState::zero(int cutoff, bool with_ancilla) {
  if (cutoff < 2) throw io::InputError("HybridState: cutoff must be >= 2");
  HybridState s;
  s.cutoff = cutoff;
  s.has_ancilla = with_ancilla;
  s.amp.assign(static_cast<std::size_t>(with_ancilla ? 2 : 1) * 4 * cutoff *
                   cutoff,
               cplx(0.0, 0.0));
  return s;
}

std::size_t HybridState::mode_block() const {
  return static_cast<std::size_t>(cutoff) * cutoff;
}

std::size_t HybridState::branch_size() const { return 4 * mode_block(); }

cplx& HybridState::at(int ancilla, int spin, int nx, int ny) {
  return amp[((static_cast<std::size_t>(ancilla) * 4 + spin) * cutoff + nx) *
                 cutoff +
             ny];
}

cplx HybridState::at(int ancilla, int spin, int nx, int ny) const {
  return amp[((static_cast<std::size_t>(ancilla) * 4 + spin) * cutoff + nx) *
                 cutoff +
             ny];
}

double HybridState::norm2() const {
  return kernels::znorm2(amp.data(), amp.size());
}

double HybridState::norm() const { return std::sqrt(norm2()); }

void HybridState::normalize() {
  const double n = norm();
  if (n <= 0.0) throw std::runtime_error("HybridState: cannot normalize zero state");
  kernels::zscal(cplx(1.0 / n, 0.0), amp.data(), amp.size());
}

namespace {
thread_local std::vector<cplx> g_scratch;
}

void HybridState::apply_spin_branch(const Matrix4cd& u, int ancilla) {
  const std::size_t block = mode_block();
  g_scratch.resize(branch_size());
  const std::vector<cplx> u_rm = to_row_major(u);
  cplx* branch = amp.data() + static_cast<std::size_t>(ancilla) * branch_size();
  kernels::zgemm(u_rm.data(), branch, g_scratch.data(), 4, 4, block);
  std::copy(g_scratch.begin(), g_scratch.end(), branch);
}

void HybridState::apply_spin(const Matrix4cd& u) {
  for (int a = 0; a < ancilla_dim(); ++a) apply_spin_branch(u, a);
}

void HybridState::apply_ancilla(const Matrix2cd& r) {
  if (!has_ancilla) throw std::logic_error("apply_ancilla: state has no ancilla");
  g_scratch.resize(amp.size());
  const std::vector<cplx> r_rm = to_row_major(r);
  kernels::zgemm(r_rm.data(), amp.data(), g_scratch.data(), 2, 2,
                 branch_size());
  std::copy(g_scratch.begin(), g_scratch.end(), amp.data());
}

void HybridState::apply_mode_slice(const MatrixXcd& op, Axis mode, int ancilla,
                                   int spin) {
  const std::size_t nc = static_cast<std::size_t>(cutoff);
  g_scratch.resize(nc * nc);
  cplx* block = &at(ancilla, spin, 0, 0);
  if (mode == Axis::x) {
    // out = op · B
    const std::vector<cplx> op_rm = to_row_major(op);
    kernels::zgemm(op_rm.data(), block, g_scratch.data(), nc, nc, nc);
  } else {
    // out = B · opᵀ
    const std::vector<cplx> opt_rm = to_row_major(op.transpose());
    kernels::zgemm(block, opt_rm.data(), g_scratch.data(), nc, nc, nc);
  }
  std::copy(g_scratch.begin(), g_scratch.end(), block);
}

void HybridState::apply_mode(const MatrixXcd& op, Axis mode) {
  if (mode == Axis::z) throw std::logic_error("apply_mode: z is not a mode");
  for (int a = 0; a < ancilla_dim(); ++a) {
    for (int s = 0; s < 4; ++s) apply_mode_slice(op, mode, a, s);
  }
}

void HybridState::apply_spin_mode_y(const MatrixXcd& op, int ancilla) {
  const std::size_t nc = static_cast<std::size_t>(cutoff);
  const std::size_t dim = 4 * nc;
  if (op.rows() != static_cast<Eigen::Index>(dim)) {
    throw std::logic_error("apply_spin_mode_y: operator dimension mismatch");
  }
  const std::vector<cplx> op_rm = to_row_major(op);
  std::vector<cplx> gathered(dim * nc);
  std::vector<cplx> result(dim * nc);
  const int a_begin = ancilla < 0 ? 0 : ancilla;
  const int a_end = ancilla < 0 ? ancilla_dim() : ancilla + 1;
  for (int a = a_begin; a < a_end; ++a) {
    for (int s = 0; s < 4; ++s) {
      for (std::size_t nx = 0; nx < nc; ++nx) {
        for (std::size_t ny = 0; ny < nc; ++ny) {
          gathered[(s * nc + ny) * nc + nx] =
              at(a, s, static_cast<int>(nx), static_cast<int>(ny));
        }
      }
    }
    kernels::zgemm(op_rm.data(), gathered.data(), result.data(), dim, dim, nc);
    for (int s = 0; s < 4; ++s) {
      for (std::size_t nx = 0; nx < nc; ++nx) {
        for (std::size_t ny = 0; ny < nc; ++ny) {
          at(a, s, static_cast<int>(nx), static_cast<int>(ny)) =
              result[(s * nc + ny) * nc + nx];
        }
      }
    }
  }
}

double HybridState::leak_fraction() const {
  const double total = norm2();
  if (total <= 0.0) return 0.0;
  double leaked = 0.0;
  for (int a = 0; a < ancilla_dim(); ++a) {
    for (int s = 0; s < 4; ++s) {
      for (int nx = 0; nx < cutoff; ++nx) {
        for (int ny = 0; ny < cutoff; ++ny) {
          if (nx >= cutoff - 2 || ny >= cutoff - 2) {
            leaked += std::norm(at(a, s, nx, ny));
          }
        }
      }
    }
  }
  return leaked / total;
}

double HybridState::ancilla_one_weight() const {
  if (!has_ancilla) return 0.0;
  return kernels::znorm2(amp.data() + branch_size(), branch_size());
}

double HybridState::component_norm2(int spin) const {
  return kernels::znorm2(&amp[static_cast<std::size_t>(spin) * mode_block()],
                         mode_block());
}

cplx HybridState::component_mode_moment(int spin, Axis mode,
                                        const MatrixXcd& op) const {
  const std::size_t nc = static_cast<std::size_t>(cutoff);
  const cplx* block = &amp[static_cast<std::size_t>(spin) * mode_block()];
  std::vector<cplx> transformed(nc * nc);
  if (mode == Axis::x) {
    const std::vector<cplx> op_rm = to_row_major(op);
    kernels::zgemm(op_rm.data(), block, transformed.data(), nc, nc, nc);
  } else {
    const std::vector<cplx> opt_rm = to_row_major(op.transpose());
    kernels::zgemm(block, opt_rm.data(), transformed.data(), nc, nc, nc);
  }
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < nc * nc; ++i) {
    acc += std::conj(block[i]) * transformed[i];
  }
  const double weight = component_norm2(spin);
  if (weight <= 0.0) return {0.0, 0.0};
  return acc / weight;
}

double HybridState::max_imag() const {
  double worst = 0.0;
  for (const cplx& v : amp) worst = std::max(worst, std::abs(v.imag()));
  return worst;
}

// ------------------------------------------------------------- operators ---

ConditionalDisplacement conditional_displacement(Axis mode_b, double theta,
                                                 const Matrix4cd& spin_op,
                                                 int cutoff) {
  if (mode_b == Axis::z) {
    throw io::InputError("conditional_displacement: mode must be x or y");
  }
  if (linalg::max_abs(MatrixXcd(spin_op - spin_op.adjoint())) > 1e-12) {
    throw std::invalid_argument("conditional_displacement: spin op not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix4cd> solver(spin_op);
  for (int i = 0; i < 4; ++i) {
    if (std::abs(std::abs(solver.eigenvalues()[i]) - 1.0) > 1e-9) {
      throw std::invalid_argument(
          "conditional_displacement: spin op must have a ±1 spectrum");
    }
  }
  ConditionalDisplacement out;
  out.mode = mode_b;
  out.theta = theta;
  out.cutoff = cutoff;
  out.spin_vectors = solver.eigenvectors();
  out.spin_values = solver.eigenvalues().array().sign();
  const ModeAlgebra mode(cutoff);
  out.mode_plus = mode.displacement(theta);
  out.mode_minus = mode.displacement(-theta);
  out.cutoff_warning =
      std::abs(theta) * std::sqrt(2.0 * cutoff) > cutoff / 4.0;
  return out;
}

void ConditionalDisplacement::apply(HybridState& state) const {
  if (state.cutoff != cutoff) {
    throw std::logic_error("ConditionalDisplacement: cutoff mismatch");
  }
  const Matrix4cd p = spin_vectors;
  state.apply_spin(p.adjoint());
  const MatrixXcd plus = mode_plus.cast<cplx>();
  const MatrixXcd minus = mode_minus.cast<cplx>();
  for (int a = 0; a < state.ancilla_dim(); ++a) {
    for (int k = 0; k < 4; ++k) {
      state.apply_mode_slice(spin_values[k] > 0 ? plus : minus, mode, a, k);
    }
  }
  state.apply_spin(p);
  state.last_leak = state.leak_fraction();
}

MatrixXcd ConditionalDisplacement::dense() const {
  const Eigen::Index dim = 4 * cutoff;
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  for (int k = 0; k < 4; ++k) {
    const MatrixXcd projector =
        spin_vectors.col(k) * spin_vectors.col(k).adjoint();
    const MatrixXd& branch = spin_values[k] > 0 ? mode_plus : mode_minus;
    out += kron(projector, branch.cast<cplx>());
  }
  return out;
}

StreamingSandwich streaming_sandwich(Axis b, double theta, int cutoff) {
  if (b == Axis::z) {
    throw io::InputError("streaming_sandwich: only the x and y modes exist");
  }
  StreamingSandwich out;
  out.b = b;
  out.s = s_gate(b);
  out.d = conditional_displacement(b, theta, beta_op(), cutoff);
  return out;
}

void StreamingSandwich::apply(HybridState& state) const {
  state.apply_spin(s);
  d.apply(state);
  state.apply_spin(s);
}

MatrixXcd StreamingSandwich::dense() const {
  const MatrixXcd s_full =
      kron(s, MatrixXcd::Identity(d.cutoff, d.cutoff));
  return s_full * d.dense() * s_full;
}

namespace {

Matrix2cd rotation(Axis axis, double theta) {
  return std::cos(theta) * Matrix2cd::Identity() -
         cplx(0.0, 1.0) * std::sin(theta) * pauli(axis);
}

}  // namespace

StreamingIdentityReport verify_streaming_identity(double phi, int cutoff) {
  if (cutoff < 16) {
    throw io::InputError("verify_streaming_identity: cutoff must be >= 16");
  }
  const ModeAlgebra mode(cutoff);
  const MatrixXd km = mode.momentum_generator();  // a − a†
  const Matrix2cd id2 = Matrix2cd::Identity();

  const MatrixXd alpha_x = alpha_op(Axis::x).real();
  const MatrixXd lhs_gen = kron(alpha_x.cast<cplx>(), km.cast<cplx>()).real();
  const MatrixXcd lhs = linalg::expm_antisymmetric(lhs_gen, phi).cast<cplx>();

  const MatrixXd sigma1x = kron(pauli(Axis::x), id2).real();
  const MatrixXd core_gen = kron(sigma1x.cast<cplx>(), km.cast<cplx>()).real();
  const MatrixXcd core = linalg::expm_antisymmetric(core_gen, phi).cast<cplx>();

  const double quarter = std::numbers::pi / 4.0;
  Matrix4cd u_c = Matrix4cd::Zero();
  const Matrix4cd zz = kron(pauli(Axis::z), pauli(Axis::z));
  for (int i = 0; i < 4; ++i) {
    u_c(i, i) = std::exp(cplx(0.0, -quarter) * zz(i, i));
  }
  const Matrix4cd w = u_c * kron(rotation(Axis::z, quarter), id2) *
                      kron(id2, rotation(Axis::y, -quarter));
  const MatrixXcd w_full = kron(w, MatrixXcd::Identity(cutoff, cutoff));
  const MatrixXcd rhs = w_full.adjoint() * core * w_full;

  StreamingIdentityReport report;
  report.raw_residual = linalg::max_abs(MatrixXcd(lhs - rhs));
  const cplx inner = (rhs.adjoint() * lhs).trace();
  report.phase = std::abs(inner) > 0.0 ? inner / std::abs(inner) : cplx(1.0, 0.0);
  report.aligned_residual =
      linalg::max_abs(MatrixXcd(lhs - report.phase * rhs));
  return report;
}

// -------------------------------------------------------------- encoding ---

namespace {

// Hermite-function values ψ_0..ψ_{nmax−1} at one point.
void hermite_column(double x, int nmax, double* out) {
  const double pi_quarter = std::pow(std::numbers::pi, -0.25);
  out[0] = pi_quarter * std::exp(-0.5 * x * x);
  if (nmax > 1) out[1] = kSqrt2 * x * out[0];
  for (int n = 2; n < nmax; ++n) {
    out[n] = std::sqrt(2.0 / n) * x * out[n - 1] -
             std::sqrt((n - 1.0) / n) * out[n - 2];
  }
}

}  // namespace

Eigen::MatrixXd hermite_functions(const std::vector<double>& xs, int nmax) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(xs.size()), nmax);
  std::vector<double> column(static_cast<std::size_t>(nmax));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    hermite_column(xs[i], nmax, column.data());
    for (int n = 0; n < nmax; ++n) out(static_cast<Eigen::Index>(i), n) = column[n];
  }
  return out;
}

std::vector<double> gaussian_fock_coeffs(double center, double sigma,
                                         int cutoff) {
  if (sigma < 0.5 - 1e-12) {
    throw io::InputError("gaussian_fock_coeffs: width must be >= 0.5");
  }
  const int extended = cutoff + 256;
  std::vector<double> coeffs(static_cast<std::size_t>(extended), 0.0);
  if (std::abs(sigma - kVacuumWidth) <= 1e-12) {
    // Coherent state with real amplitude α = center/√2.
    const double alpha = center / kSqrt2;
    double c = std::exp(-0.5 * alpha * alpha);
    for (int n = 0; n < extended; ++n) {
      coeffs[static_cast<std::size_t>(n)] = c;
      c *= alpha / std::sqrt(n + 1.0);
    }
  } else {
    // Quadrature projection ⟨n|g⟩ = ∫ ψ_n(x) g(x) dx.
    const double norm = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
    const double span = 12.0 * sigma;
    const double h = 0.005;
    const int points = static_cast<int>(std::ceil(2.0 * span / h)) + 1;
    std::vector<double> psi(static_cast<std::size_t>(extended));
    for (int i = 0; i < points; ++i) {
      const double x = center - span + i * h;
      const double weight = (i == 0 || i == points - 1) ? 0.5 * h : h;
      const double g =
          norm * std::exp(-(x - center) * (x - center) / (4.0 * sigma * sigma));
      hermite_column(x, extended, psi.data());
      for (int n = 0; n < extended; ++n) {
        coeffs[static_cast<std::size_t>(n)] += weight * psi[static_cast<std::size_t>(n)] * g;
      }
    }
  }
  double inside = 0.0;
  for (int n = 0; n < cutoff; ++n) inside += coeffs[static_cast<std::size_t>(n)] * coeffs[static_cast<std::size_t>(n)];
  const double leak = 1.0 - inside;
  if (leak > 1e-6) {
    double cum = 0.0;
    int required = extended;
    for (int n = 0; n < extended; ++n) {
      cum += coeffs[static_cast<std::size_t>(n)] * coeffs[static_cast<std::size_t>(n)];
      if (cum >= 1.0 - 1e-6) {
        required = n + 1;
        break;
      }
    }
    throw io::ToleranceError(
        "gaussian_fock_coeffs: truncation leakage " + io::format_double(leak) +
        " exceeds 1e-6 at cutoff " + std::to_string(cutoff) +
        "; use cutoff >= " + std::to_string(required));
  }
  coeffs.resize(static_cast<std::size_t>(cutoff));
  return coeffs;
}

HybridState encode_state(const Vector4d& eta,
                         const std::array<GaussianSpec, 4>& packets,
                         int cutoff, bool with_ancilla) {
  if (eta.squaredNorm() <= 0.0) {
    throw io::InputError("encode_state: eta must not be all zero");
  }
  HybridState state = HybridState::zero(cutoff, with_ancilla);
  state.eta = eta;
  for (int s = 0; s < 4; ++s) {
    if (eta[s] == 0.0) continue;
    const auto cx = gaussian_fock_coeffs(packets[s].x0, packets[s].sigma, cutoff);
    const auto cy = gaussian_fock_coeffs(packets[s].y0, packets[s].sigma, cutoff);
    for (int nx = 0; nx < cutoff; ++nx) {
      for (int ny = 0; ny < cutoff; ++ny) {
        state.at(0, s, nx, ny) = eta[s] * cx[static_cast<std::size_t>(nx)] *
                                 cy[static_cast<std::size_t>(ny)];
      }
    }
  }
  state.ledger = state.norm();
  state.normalize();
  return state;
}

std::vector<double> FieldGrid::coords() const {
  std::vector<double> xs(static_cast<std::size_t>(points));
  if (points == 1) {
    xs[0] = min;
    return xs;
  }
  const double step = (max - min) / (points - 1);
  for (int i = 0; i < points; ++i) xs[static_cast<std::size_t>(i)] = min + i * step;
  return xs;
}

ExtractedField extract_field(const HybridState& state, const FieldGrid& grid) {
  if (grid.points < 1 || grid.max < grid.min) {
    throw io::InputError("extract_field: malformed grid");
  }
  const double bound = std::sqrt(2.0 * state.cutoff) - 1.0;
  if (grid.min < -bound || grid.max > bound) {
    throw io::InputError("extract_field: grid exceeds the Hermite validity "
                         "range ±" + io::format_double(bound));
  }
  const std::vector<double> xs = grid.coords();
  const std::size_t g = xs.size();
  const std::size_t nc = static_cast<std::size_t>(state.cutoff);
  const Eigen::MatrixXd psi = hermite_functions(xs, state.cutoff);

  // Row-major ψ matrices for the two contractions.
  std::vector<cplx> bx(g * nc), byt(nc * g);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t n = 0; n < nc; ++n) {
      bx[i * nc + n] = psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n));
      byt[n * g + i] = psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n));
    }
  }

  ExtractedField out;
  out.grid = grid;
  std::vector<cplx> t(g * nc), f(g * g);
  for (int s = 0; s < 4; ++s) {
    const cplx* block = &state.amp[static_cast<std::size_t>(s) * state.mode_block()];
    kernels::zgemm(bx.data(), block, t.data(), g, nc, nc);
    kernels::zgemm(t.data(), byt.data(), f.data(), g, nc, g);
    Eigen::MatrixXd& dst = out.f[static_cast<std::size_t>(s)];
    dst.resize(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
    for (std::size_t i = 0; i < g; ++i) {
      for (std::size_t j = 0; j < g; ++j) {
        const cplx v = f[i * g + j];
        out.max_imag = std::max(out.max_imag, std::abs(v.imag() * state.ledger));
        dst(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            state.ledger * v.real();
      }
    }
  }
  return out;
}

}  // namespace qlb::sv
