#pragma once

#include <complex>

#include <Eigen/Dense>

// Dense numerical kernels shared by the analysis modules.

namespace esnssm::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// ‖M‖₂: SVD when the smaller dimension is ≤ 400, else power iteration on
/// MᵀM (tolerance 1e-10 on the Rayleigh quotient, at most 10 000 iterations).
double spectral_norm(const MatrixXd& m);

/// max |eigenvalue| of a square matrix. Throws DomainError on eigensolver
/// non-convergence.
double spectral_radius(const MatrixXd& a);

Eigen::VectorXcd eigenvalues(const MatrixXd& a);

/// X = A X Aᵀ + S, or X = Aᵀ X A + S when `transpose` is set. Requires
/// ρ(A) < 1. Kronecker-vectorized LU for n ≤ 24, doubling iteration above.
MatrixXd solve_discrete_lyapunov(const MatrixXd& a, const MatrixXd& s, bool transpose = false);

/// Relative residual of A X Aᵀ − X + S (or transposed form).
double lyapunov_residual(const MatrixXd& a, const MatrixXd& x, const MatrixXd& s,
                         bool transpose = false);

/// e^M by scaling and squaring with the [13/13] Padé approximant.
MatrixXd expm(const MatrixXd& m);

MatrixXd symmetrize(const MatrixXd& m);

/// Symmetry (1e-12 relative) and eigenvalue floor (−1e-12) check; throws
/// DomainError with `what` in the message otherwise.
void require_psd(const MatrixXd& m, const char* what);

/// Lower Cholesky factor; retries with diagonal jitter (1e-12 scaled by the
/// trace) if the plain factorization fails.
MatrixXd cholesky_with_jitter(const MatrixXd& m);

/// Clamp eigenvalues of a symmetric matrix below `floor` up to `floor`.
/// Returns the number of eigenvalues that were raised.
int floor_eigenvalues(MatrixXd& m, double floor);

double min_eigenvalue_sym(const MatrixXd& m);

/// Numerical rank: singular values ≥ tol·σ_max.
int numerical_rank(const MatrixXd& m, double tol);

}  // namespace esnssm::linalg
