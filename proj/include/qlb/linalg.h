// linalg.h — small dense-matrix helpers on top of Eigen: sorted
// eigendecompositions, exponentials through the eigenbasis, and the norms
// used by the decomposition checks.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace qlb::linalg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

struct SymEig {
  VectorXd values;  // ascending
  MatrixXd vectors; // orthonormal columns
};

inline SymEig sym_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig: eigendecomposition failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// exp(m·t) for symmetric m, through the orthonormal eigenbasis.
inline MatrixXd expm_sym(const MatrixXd& m, double t) {
  const SymEig eig = sym_eig(m);
  return eig.vectors *
         (eig.values.array() * t).exp().matrix().asDiagonal() *
         eig.vectors.transpose();
}

struct ComplexEig {
  VectorXcd values;   // ascending by (re, im)
  MatrixXcd vectors;  // columns, generally not orthogonal
  MatrixXcd vectors_inv;
  double condition;   // ‖V‖₂·‖V⁻¹‖₂
};

// Sort eigenpairs ascending by real part, ties broken by imaginary part.
inline std::vector<Eigen::Index> eig_order(const VectorXcd& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values[a].real() != values[b].real()) {
      return values[a].real() < values[b].real();
    }
    return values[a].imag() < values[b].imag();
  });
  return order;
}

inline double spectral_norm(const MatrixXcd& m) {
  return Eigen::JacobiSVD<MatrixXcd>(m).singularValues()(0);
}

inline ComplexEig complex_eig(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("complex_eig: eigendecomposition failed");
  }
  const auto order = eig_order(solver.eigenvalues());
  ComplexEig out;
  const Eigen::Index n = m.rows();
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = solver.eigenvalues()(order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) =
        solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  Eigen::JacobiSVD<MatrixXcd> svd(out.vectors,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()(n - 1);
  if (smin <= 0.0) {
    throw std::runtime_error("complex_eig: defective eigenbasis");
  }
  out.condition = svd.singularValues()(0) / smin;
  out.vectors_inv = out.vectors.inverse();
  return out;
}

inline double max_abs(const MatrixXcd& m) {
  return m.cwiseAbs().maxCoeff();
}

inline double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

inline double unitarity_residual(const MatrixXcd& u) {
  const Eigen::Index n = u.rows();
  return spectral_norm(u.adjoint() * u - MatrixXcd::Identity(n, n));
}

// exp(−i·h) for Hermitian h.
inline MatrixXcd expm_minus_i_hermitian(const MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("expm_minus_i_hermitian: eigendecomposition failed");
  }
  const VectorXd& lam = solver.eigenvalues();
  VectorXcd phases(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    phases[i] = std::exp(cplx(0.0, -lam[i]));
  }
  return solver.eigenvectors() * phases.asDiagonal() *
         solver.eigenvectors().adjoint();
}

// exp(g) for anti-Hermitian g (a unitary result).
inline MatrixXcd expm_anti_hermitian(const MatrixXcd& g) {
  return expm_minus_i_hermitian(MatrixXcd(cplx(0.0, 1.0) * g));
}

// exp(θ·k) for real antisymmetric k (an orthogonal result); the imaginary
// residue of the eigenbasis route is dropped after a sanity bound.
inline MatrixXd expm_antisymmetric(const MatrixXd& k, double theta) {
  const Eigen::Index n = k.rows();
  const MatrixXcd h = cplx(0.0, 1.0) * k.cast<cplx>();  // Hermitian
  const MatrixXcd result = expm_minus_i_hermitian(theta * h);
  if (result.imag().cwiseAbs().maxCoeff() > 1e-10) {
    throw std::runtime_error("expm_antisymmetric: non-real result");
  }
  MatrixXd out(n, n);
  out = result.real();
  return out;
}

}  // namespace qlb::linalg
