#include "qlb/decompose.h"

#include <cmath>
#include <sstream>

#include "qlb/io.h"
#include "qlb/linalg.h"

namespace qlb {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kRadicandClamp = 1e-14;
constexpr double kRealSpectrumTol = 1e-12;

std::string fmt(double v) { return io::format_double(v); }

}  // namespace

GeneratorMatrix GeneratorMatrix::from_matrix(const MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw io::InputError("GeneratorMatrix: matrix must be square");
  }
  if (m.rows() < 2) {
    throw io::InputError("GeneratorMatrix: dimension must be at least 2");
  }
  const double asym = linalg::max_abs(MatrixXd(m - m.transpose()));
  if (asym > kSymmetryTol) {
    throw io::InputError("GeneratorMatrix: matrix is not symmetric (max "
                         "asymmetry " + fmt(asym) + ")");
  }
  return {static_cast<int>(m.rows()), m};
}

namespace {

void check_eigen_residual(const CollisionOperator& c) {
  const MatrixXcd residual =
      c.entries * c.eigenbasis - c.eigenbasis * c.spectrum.asDiagonal();
  if (linalg::spectral_norm(residual) > 1e-10) {
    throw std::logic_error("CollisionOperator: eigenpair residual exceeds 1e-10");
  }
}

}  // namespace

CollisionOperator build_collision(const GeneratorMatrix& gen, double dt) {
  if (dt < 0.0) throw io::InputError("build_collision: dt must be nonnegative");
  const linalg::SymEig eig = linalg::sym_eig(gen.m);
  CollisionOperator out;
  out.dt = dt;
  out.normal = true;
  out.spectrum = (eig.values.array() * dt).exp().cast<cplx>();
  out.eigenbasis = eig.vectors.cast<cplx>();
  out.eigenbasis_inv = out.eigenbasis.adjoint();
  out.entries = out.eigenbasis * out.spectrum.asDiagonal() * out.eigenbasis_inv;
  check_eigen_residual(out);
  return out;
}

CollisionOperator build_collision_general(const MatrixXd& m, double dt,
                                          double cond_limit) {
  if (dt < 0.0) throw io::InputError("build_collision_general: dt must be nonnegative");
  const linalg::ComplexEig eig = linalg::complex_eig(m);
  if (eig.condition > cond_limit) {
    throw io::ToleranceError(
        "build_collision_general: eigenbasis condition number " +
        fmt(eig.condition) + " exceeds " + fmt(cond_limit));
  }
  VectorXcd lam(eig.values.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    lam[i] = std::exp(eig.values[i] * dt);
  }
  // exp does not preserve the (re, im) order; re-sort the pairs.
  const auto order = linalg::eig_order(lam);
  CollisionOperator out;
  out.dt = dt;
  out.spectrum.resize(lam.size());
  out.eigenbasis.resize(eig.vectors.rows(), eig.vectors.cols());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    out.spectrum[i] = lam[order[static_cast<std::size_t>(i)]];
    out.eigenbasis.col(i) = eig.vectors.col(order[static_cast<std::size_t>(i)]);
  }
  out.eigenbasis_inv = out.eigenbasis.inverse();
  out.entries = out.eigenbasis * out.spectrum.asDiagonal() * out.eigenbasis_inv;
  out.normal = linalg::max_abs(MatrixXcd(
                   out.eigenbasis.adjoint() * out.eigenbasis -
                   MatrixXcd::Identity(lam.size(), lam.size()))) < 1e-10;
  check_eigen_residual(out);
  return out;
}

CollisionOperator collision_from_matrix(const MatrixXcd& c, double dt) {
  CollisionOperator out;
  out.dt = dt;
  const Eigen::Index n = c.rows();
  if (c.cols() != n || n < 1) {
    throw io::InputError("collision_from_matrix: matrix must be square");
  }
  if (linalg::max_abs(MatrixXcd(c - c.adjoint())) <= kSymmetryTol) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(c);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("collision_from_matrix: eigensolver failed");
    }
    out.spectrum = solver.eigenvalues().cast<cplx>();
    out.eigenbasis = solver.eigenvectors();
    out.eigenbasis_inv = out.eigenbasis.adjoint();
    out.normal = true;
  } else {
    Eigen::ComplexEigenSolver<MatrixXcd> solver(c);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("collision_from_matrix: eigensolver failed");
    }
    const auto order = linalg::eig_order(solver.eigenvalues());
    out.spectrum.resize(n);
    out.eigenbasis.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.spectrum[i] = solver.eigenvalues()(order[static_cast<std::size_t>(i)]);
      out.eigenbasis.col(i) =
          solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    }
    out.eigenbasis_inv = out.eigenbasis.inverse();
    out.normal = linalg::max_abs(MatrixXcd(
                     out.eigenbasis.adjoint() * out.eigenbasis -
                     MatrixXcd::Identity(n, n))) < 1e-10;
  }
  out.entries = c;
  check_eigen_residual(out);
  return out;
}

std::optional<GammaWindow> gamma_window(const VectorXcd& spectrum) {
  if (spectrum.size() == 0) {
    throw SpectralDomainError("gamma_window: empty spectrum");
  }
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const cplx d = spectrum[i];
    if (std::abs(d.imag()) <= kRealSpectrumTol && d.real() <= 0.0) {
      throw SpectralDomainError("gamma_window: eigenvalue " +
                                std::to_string(i) + " = " + fmt(d.real()) +
                                " is not positive");
    }
    const double mag = std::abs(d);
    lower = std::max(lower, std::abs(mag - 1.0));
    upper = std::min(upper, 1.0 + mag);
  }
  if (lower > upper) return std::nullopt;
  return GammaWindow{lower, upper};
}

double optimal_gamma(const GammaWindow& window) { return window.lower; }

double optimal_gamma(const std::optional<GammaWindow>& window) {
  if (!window.has_value()) {
    throw io::ToleranceError("optimal_gamma: infeasible window");
  }
  return window->lower;
}

namespace {

// Per-eigenvalue solution of δ = α + γβ with |α| = |β| = 1. For real
// positive δ this is the closed form
//   Re α = (δ²−γ²+1)/(2δ),  Im α = √r/(2δ),  r = −δ⁴+2δ²(γ²+1)−(γ²−1)²;
// complex δ uses the same intersection rotated by δ/|δ|. β = (δ−α)/γ keeps
// δ_i = α_i + γβ_i exact and |β_i| = 1 algebraically.
struct EigenvaluePair {
  cplx alpha;
  cplx beta;
};

EigenvaluePair solve_pair(cplx delta, double gamma, Eigen::Index index) {
  const double d = std::abs(delta);
  // r in factored form for stability near the window edges.
  double r = ((1.0 + gamma) * (1.0 + gamma) - d * d) *
             (d * d - (1.0 - gamma) * (1.0 - gamma));
  if (std::abs(r) <= kRadicandClamp) r = 0.0;
  if (r < 0.0) {
    std::ostringstream msg;
    msg << "decompose: negative radicand for eigenvalue " << index
        << " (delta = " << fmt(delta.real());
    if (delta.imag() != 0.0) msg << (delta.imag() < 0 ? "-" : "+")
                                 << fmt(std::abs(delta.imag())) << "i";
    msg << ", gamma = " << fmt(gamma) << " outside [" << fmt(std::abs(d - 1.0))
        << ", " << fmt(1.0 + d) << "])";
    throw RadicandError(msg.str());
  }
  // (1−γ)(1+γ) instead of 1−γ² avoids cancellation when γ ≈ 1 and δ ≈ 0.
  const double a = (d * d + (1.0 - gamma) * (1.0 + gamma)) / (2.0 * d);
  const double h = std::sqrt(r) / (2.0 * d);
  const cplx direction = delta / d;
  // |α| = 1 is exact in the eigenvalue system; project out the rounding
  // error (visible when δ ≪ 1 and γ ≈ 1), then β keeps δ = α + γβ exact.
  cplx alpha = direction * cplx(a, h);
  alpha /= std::abs(alpha);
  const cplx beta = (delta - alpha) / gamma;
  return {alpha, beta};
}

}  // namespace

UnitarySumDecomposition decompose(const CollisionOperator& c, double gamma) {
  if (gamma < 0.0) {
    throw io::InputError("decompose: gamma must be nonnegative");
  }
  const Eigen::Index n = c.spectrum.size();
  UnitarySumDecomposition out;
  out.gamma = gamma;
  out.normal = c.normal;
  out.alphas.resize(n);
  out.betas.resize(n);
  if (gamma == 0.0) {
    // Degenerate weight: C itself must be unitary; U_β carries the
    // conventional −1 phase so |β_i| = 1 still holds.
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::abs(c.spectrum[i]);
      if (std::abs(mag - 1.0) > 1e-9) {
        throw RadicandError("decompose: gamma = 0 requires a unitary C "
                            "(|delta_" + std::to_string(i) + "| = " + fmt(mag) + ")");
      }
      out.alphas[i] = c.spectrum[i] / mag;
      out.betas[i] = -out.alphas[i];
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const EigenvaluePair pair = solve_pair(c.spectrum[i], gamma, i);
      out.alphas[i] = pair.alpha;
      out.betas[i] = pair.beta;
    }
  }
  out.u_alpha = c.eigenbasis * out.alphas.asDiagonal() * c.eigenbasis_inv;
  out.u_beta = c.eigenbasis * out.betas.asDiagonal() * c.eigenbasis_inv;

  out.reconstruction_residual =
      linalg::max_abs(MatrixXcd(out.u_alpha + gamma * out.u_beta - c.entries));
  out.unitarity_residual = std::max(linalg::unitarity_residual(out.u_alpha),
                                    linalg::unitarity_residual(out.u_beta));
  out.commutator_residual = linalg::spectral_norm(
      out.u_alpha * out.u_beta - out.u_beta * out.u_alpha);
  if (out.reconstruction_residual > 1e-9) {
    throw std::logic_error("decompose: reconstruction residual " +
                           fmt(out.reconstruction_residual) + " exceeds 1e-9");
  }
  if (c.normal) {
    if (out.unitarity_residual > 1e-10 || out.commutator_residual > 1e-10) {
      throw std::logic_error("decompose: unitarity/commutation invariant failed");
    }
    // Any accepted γ must satisfy ‖C‖ ≤ 1 + γ; for a normal C the spectral
    // norm is the largest eigenvalue modulus.
    const double cnorm = c.spectrum.cwiseAbs().maxCoeff();
    if (cnorm > 1.0 + gamma + 1e-9) {
      throw std::logic_error("decompose: ||C|| exceeds 1 + gamma");
    }
  }
  return out;
}

double failure_bound(const UnitarySumDecomposition& dec) {
  if (dec.gamma == 0.0) return 0.0;
  const double sep = linalg::spectral_norm(dec.u_alpha - dec.u_beta);
  const double pf =
      dec.gamma * sep * sep / ((1.0 + dec.gamma) * (1.0 + dec.gamma));
  return std::clamp(pf, 0.0, 1.0);
}

SplitSchedule split_schedule(const GeneratorMatrix& gen, double dt, int n) {
  if (n < 1) throw io::InputError("split_schedule: n must be positive");
  const CollisionOperator sub = build_collision(gen, dt / n);
  const auto window = gamma_window(sub.spectrum);
  if (!window.has_value()) {
    throw io::ToleranceError("split_schedule: infeasible substep window at "
                             "dt/n = " + fmt(dt / n));
  }
  const double gamma0 = optimal_gamma(*window);
  SplitStep step;
  step.gamma0 = gamma0;
  step.dec = decompose(sub, gamma0);
  step.p_success = 1.0 - failure_bound(step.dec);

  SplitSchedule out;
  out.n_steps = n;
  out.per_step.assign(static_cast<std::size_t>(n), step);
  out.accumulated_success = 1.0;
  for (const SplitStep& s : out.per_step) {
    out.accumulated_success *= s.p_success;
  }

  // Substep product must reassemble the full evolution.
  MatrixXcd product = MatrixXcd::Identity(gen.dim, gen.dim);
  for (int i = 0; i < n; ++i) product = product * sub.entries;
  const MatrixXd full = linalg::expm_sym(gen.m, dt);
  if (linalg::max_abs(MatrixXcd(product - full.cast<cplx>())) > 1e-8) {
    throw std::logic_error("split_schedule: substep product does not "
                           "reconstruct exp(M dt)");
  }
  return out;
}

std::vector<SuccessPoint> success_curve(const GeneratorMatrix& gen, double dt,
                                        int n_max) {
  std::vector<SuccessPoint> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    const SplitSchedule schedule = split_schedule(gen, dt, n);
    out.push_back({n, schedule.per_step.front().p_success,
                   schedule.accumulated_success});
  }
  return out;
}

std::vector<GammaSweepPoint> gamma_sweep(const GeneratorMatrix& gen, double dt,
                                         int n,
                                         const std::vector<double>& ratios) {
  const CollisionOperator sub = build_collision(gen, dt / n);
  const double gamma0 = optimal_gamma(gamma_window(sub.spectrum));
  std::vector<GammaSweepPoint> out;
  out.reserve(ratios.size());
  for (double ratio : ratios) {
    const UnitarySumDecomposition dec = decompose(sub, ratio * gamma0);
    out.push_back({ratio, 1.0 - failure_bound(dec)});
  }
  return out;
}

GeneratorMatrix random_dissipative_generator(Rng& rng, int dim, double radius) {
  if (dim < 2) throw io::InputError("random_dissipative_generator: dim >= 2");
  MatrixXd g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  MatrixXd sym = 0.5 * (g + g.transpose());
  const linalg::SymEig eig = linalg::sym_eig(sym);
  sym -= eig.values.maxCoeff() * MatrixXd::Identity(dim, dim);
  const double rho = std::abs(eig.values.minCoeff() - eig.values.maxCoeff());
  if (rho > 0.0) sym *= radius / rho;
  return GeneratorMatrix::from_matrix(sym);
}

}  // namespace qlb
