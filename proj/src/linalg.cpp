#include "esnssm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "esnssm/error.hpp"

namespace esnssm::linalg {

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  // Direct SVD is exact to rounding and affordable at these sizes.
  if (std::min(m.rows(), m.cols()) <= 400) {
    Eigen::BDCSVD<MatrixXd> svd(m);
    return svd.singularValues()(0);
  }
  const MatrixXd gram = m.transpose() * m;
  if (gram.norm() == 0.0) return 0.0;
  // Deterministic start with no special alignment to any coordinate axis.
  VectorXd v(gram.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + 3.7 * i);
  v.normalize();
  double mu = v.dot(gram * v);
  for (int it = 0; it < 10000; ++it) {
    VectorXd w = gram * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double next = v.dot(gram * v);
    const bool done = std::abs(next - mu) <= 1e-10 * std::max(next, 1e-300);
    mu = next;
    if (done) break;
  }
  return std::sqrt(std::max(mu, 0.0));
}

Eigen::VectorXcd eigenvalues(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw DomainError("dimension_mismatch", "eigenvalues of a non-square matrix");
  if (!a.allFinite()) throw DomainError("non_finite_parameter", "eigenvalues of a non-finite matrix");
  Eigen::EigenSolver<MatrixXd> es(a, false);
  if (es.info() != Eigen::Success)
    throw DomainError("eigensolver_failure", "nonsymmetric eigensolver did not converge");
  return es.eigenvalues();
}

double spectral_radius(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return eigenvalues(a).cwiseAbs().maxCoeff();
}

namespace {

MatrixXd lyapunov_kronecker(const MatrixXd& a, const MatrixXd& s) {
  const Eigen::Index n = a.rows();
  const Eigen::Index n2 = n * n;
  MatrixXd lhs = MatrixXd::Identity(n2, n2);
  // vec(A X Aᵀ) = (A ⊗ A) vec(X), column-major vec.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) lhs.block(i * n, j * n, n, n) -= a(i, j) * a;
  const VectorXd rhs = Eigen::Map<const VectorXd>(s.data(), n2);
  const VectorXd sol = lhs.partialPivLu().solve(rhs);
  return Eigen::Map<const MatrixXd>(sol.data(), n, n);
}

MatrixXd lyapunov_doubling(const MatrixXd& a, const MatrixXd& s) {
  MatrixXd x = s;
  MatrixXd ak = a;
  for (int it = 0; it < 200; ++it) {
    const MatrixXd inc = ak * x * ak.transpose();
    x += inc;
    if (inc.norm() <= 1e-17 * x.norm() || ak.norm() == 0.0) break;
    ak = ak * ak;
  }
  return x;
}

}  // namespace

MatrixXd solve_discrete_lyapunov(const MatrixXd& a, const MatrixXd& s, bool transpose) {
  if (a.rows() != a.cols() || s.rows() != a.rows() || s.cols() != a.cols())
    throw DomainError("dimension_mismatch", "Lyapunov solve needs square A and S of equal size");
  const double rho = spectral_radius(a);
  if (rho >= 1.0)
    throw DomainError("unstable", "discrete Lyapunov equation needs rho(A) < 1, got " +
                                      std::to_string(rho));
  const MatrixXd op = transpose ? MatrixXd(a.transpose()) : a;
  MatrixXd x = a.rows() <= 24 ? lyapunov_kronecker(op, s) : lyapunov_doubling(op, s);
  if ((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, s.cwiseAbs().maxCoeff()))
    x = symmetrize(x);
  return x;
}

double lyapunov_residual(const MatrixXd& a, const MatrixXd& x, const MatrixXd& s, bool transpose) {
  const MatrixXd r = transpose ? MatrixXd(a.transpose() * x * a + s - x)
                               : MatrixXd(a * x * a.transpose() + s - x);
  return r.norm() / std::max(1.0, x.norm());
}

namespace {

// Padé numerator/denominator pieces: e^A ≈ (V − U)⁻¹(V + U).
void pade_small(const MatrixXd& a, const double* b, int order, MatrixXd& u, MatrixXd& v) {
  const Eigen::Index n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  MatrixXd power = id;
  MatrixXd odd = MatrixXd::Zero(n, n);
  MatrixXd even = MatrixXd::Zero(n, n);
  for (int k = 0; k <= order / 2; ++k) {
    odd += b[2 * k + 1] * power;
    even += b[2 * k] * power;
    power = power * a2;
  }
  u = a * odd;
  v = even;
}

void pade13(const MatrixXd& a, MatrixXd& u, MatrixXd& v) {
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  const Eigen::Index n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a4 * a2;
  const MatrixXd tmp_u = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * tmp_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const MatrixXd tmp_v = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * tmp_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace

MatrixXd expm(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw DomainError("dimension_mismatch", "expm of a non-square matrix");
  if (!m.allFinite()) throw DomainError("non_finite_parameter", "expm of a non-finite matrix");
  const Eigen::Index n = m.rows();
  if (n == 0) return m;

  // 1-norm thresholds θ_m below which the [m/m] approximant is accurate to
  // unit roundoff (Higham, 2005).
  static constexpr double theta3 = 1.495585217958292e-2;
  static constexpr double theta5 = 2.539398330063230e-1;
  static constexpr double theta7 = 9.504178996162932e-1;
  static constexpr double theta9 = 2.097847961257068e0;
  static constexpr double theta13 = 5.371920351148152e0;
  static constexpr double b3[] = {120.0, 60.0, 12.0, 1.0};
  static constexpr double b5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr double b7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                  25200.0,    1512.0,    56.0,      1.0};
  static constexpr double b9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                                  2162160.0,     110880.0,     3960.0,       90.0,        1.0};

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  MatrixXd u, v;
  int squarings = 0;
  if (norm1 <= theta3) {
    pade_small(m, b3, 3, u, v);
  } else if (norm1 <= theta5) {
    pade_small(m, b5, 5, u, v);
  } else if (norm1 <= theta7) {
    pade_small(m, b7, 7, u, v);
  } else if (norm1 <= theta9) {
    pade_small(m, b9, 9, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    pade13(m / std::ldexp(1.0, squarings), u, v);
  }
  MatrixXd e = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) e = e * e;
  return e;
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

void require_psd(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols())
    throw DomainError("dimension_mismatch", std::string(what) + " must be square");
  if (!m.allFinite()) throw DomainError("non_finite_parameter", std::string(what) + " is not finite");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("not_psd", std::string(what) + " is not symmetric");
  if (m.size() == 0) return;
  const double lo = min_eigenvalue_sym(symmetrize(m));
  if (lo < -1e-12 * scale)
    throw DomainError("not_psd", std::string(what) + " has negative eigenvalue " + std::to_string(lo));
}

MatrixXd cholesky_with_jitter(const MatrixXd& m) {
  const Eigen::Index n = m.rows();
  const MatrixXd sym = symmetrize(m);
  Eigen::LLT<MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double scale = std::max(1.0, sym.trace() / std::max<Eigen::Index>(n, 1));
  Eigen::LLT<MatrixXd> jittered(sym + 1e-12 * scale * MatrixXd::Identity(n, n));
  if (jittered.info() == Eigen::Success) return jittered.matrixL();
  // Singular PSD: any square root factor serves for sampling.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

int floor_eigenvalues(MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd ev = es.eigenvalues();
  int raised = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) < floor) {
      ev(i) = floor;
      ++raised;
    }
  if (raised > 0)
    m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  else
    m = symmetrize(m);
  return raised;
}

double min_eigenvalue_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

int numerical_rank(const MatrixXd& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const VectorXd& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) >= tol * s(0)) ++rank;
  return rank;
}

}  // namespace esnssm::linalg
