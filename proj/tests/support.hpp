#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/core.hpp"
#include "esnssm/random.hpp"

// Independent reference computations used as test oracles. None of these
// call into the library's numerical kernels.

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double max_abs(const MatrixXd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

/// Central finite-difference Jacobian of f at x.
inline MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f, const VectorXd& x,
                            double h = 1e-6) {
  const VectorXd f0 = f(x);
  MatrixXd j(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (f(xp) - f(xm)) / (2 * h);
  }
  return j;
}

/// e^M by Taylor series with scaling by 2^s and repeated squaring, summed
/// until terms stop changing the sum.
inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

inline MatrixXd taylor_expm(const MatrixXd& m) {
  const double nrm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (nrm / std::ldexp(1.0, s) > 0.25) ++s;
  const MatrixXd a = m / std::ldexp(1.0, s);
  MatrixXd sum = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd term = sum;
  for (int k = 1; k < 60; ++k) {
    term = term * a / k;
    sum += term;
    if (max_abs(term) < 1e-300) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

/// Σ_k A^k S (Aᵀ)^k by direct summation.
inline MatrixXd lyapunov_series(const MatrixXd& a, const MatrixXd& s, int terms = 20000) {
  MatrixXd x = MatrixXd::Zero(a.rows(), a.cols());
  MatrixXd term = s;
  for (int k = 0; k < terms; ++k) {
    x += term;
    term = a * term * a.transpose();
    if (max_abs(term) < 1e-18 * std::max(1.0, max_abs(x))) break;
  }
  return x;
}

/// Rescale so that the largest |eigenvalue| equals rho.
inline MatrixXd with_radius(const MatrixXd& a, double rho) {
  const double cur = Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues().cwiseAbs().maxCoeff();
  return a * (rho / cur);
}

/// Largest singular value via the symmetric eigensolver on AᵀA.
inline double norm2(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return std::sqrt(Eigen::SelfAdjointEigenSolver<MatrixXd>(a.transpose() * a).eigenvalues().maxCoeff());
}

/// Exact posterior of a linear-Gaussian state-space model by assembling the
/// joint Gaussian of (x_0..x_T, y_1..y_T) and conditioning once.
/// Observation y_t (stored as outputs[t−1]) sees x_t.
struct JointPosterior {
  std::vector<VectorXd> means;          // E[x_t | y_1..y_T]
  std::vector<MatrixXd> covs;           // Cov(x_t | ·)
  std::vector<MatrixXd> cross;          // Cov(x_t, x_{t+1} | ·)
  std::vector<VectorXd> filtered_means; // E[x_t | y_1..y_t]
  std::vector<MatrixXd> filtered_covs;
  double loglik = 0.0;                  // log p(y_1..y_T)
};

inline JointPosterior joint_conditioning(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& Q,
                                         const MatrixXd& R, const VectorXd& mu0, const MatrixXd& P0,
                                         const std::vector<VectorXd>& u, const std::vector<VectorXd>& y) {
  const Eigen::Index n = A.rows(), p = C.rows();
  const int T = static_cast<int>(y.size());
  // Latent noise vector e = [x_0 − μ₀; w_0..w_{T−1}; v_1..v_T].
  const Eigen::Index ne = n + T * n + T * p;
  MatrixXd S = MatrixXd::Zero(ne, ne);
  S.topLeftCorner(n, n) = P0;
  for (int t = 0; t < T; ++t) {
    S.block(n + t * n, n + t * n, n, n) = Q;
    S.block(n + T * n + t * p, n + T * n + t * p, p, p) = R;
  }
  // x_t = mx_t + Lx_t e,  y_t = C x_t + v_t.
  const Eigen::Index nx = (T + 1) * n, ny = T * p;
  MatrixXd L = MatrixXd::Zero(nx + ny, ne);
  VectorXd mean = VectorXd::Zero(nx + ny);
  MatrixXd lx = MatrixXd::Zero(n, ne);
  lx.leftCols(n) = MatrixXd::Identity(n, n);
  VectorXd mx = mu0;
  L.block(0, 0, n, ne) = lx;
  mean.head(n) = mx;
  for (int t = 0; t < T; ++t) {
    lx = A * lx;
    lx.block(0, n + t * n, n, n) += MatrixXd::Identity(n, n);
    mx = A * mx + B * u[t];
    L.block((t + 1) * n, 0, n, ne) = lx;
    mean.segment((t + 1) * n, n) = mx;
    L.block(nx + t * p, 0, p, ne) = C * lx;
    L.block(nx + t * p, n + T * n + t * p, p, p) = MatrixXd::Identity(p, p);
    mean.segment(nx + t * p, p) = C * mx;
  }
  const MatrixXd J = L * S * L.transpose();
  VectorXd yv(ny);
  for (int t = 0; t < T; ++t) yv.segment(t * p, p) = y[t];

  JointPosterior out;
  auto condition = [&](int upto, VectorXd& cm, MatrixXd& cc) {
    const Eigen::Index k = upto * p;
    if (k == 0) {
      cm = mean.head(nx);
      cc = J.topLeftCorner(nx, nx);
      return;
    }
    const MatrixXd syy = J.block(nx, nx, k, k);
    const MatrixXd sxy = J.block(0, nx, nx, k);
    const Eigen::FullPivLU<MatrixXd> lu(syy);
    cm = mean.head(nx) + sxy * lu.solve(yv.head(k) - mean.segment(nx, k));
    cc = J.topLeftCorner(nx, nx) - sxy * lu.solve(sxy.transpose());
  };
  VectorXd cm;
  MatrixXd cc;
  condition(T, cm, cc);
  for (int t = 0; t <= T; ++t) {
    out.means.push_back(cm.segment(t * n, n));
    out.covs.push_back(cc.block(t * n, t * n, n, n));
    if (t < T) out.cross.push_back(cc.block(t * n, (t + 1) * n, n, n));
  }
  for (int t = 0; t <= T; ++t) {
    VectorXd fm;
    MatrixXd fc;
    condition(t, fm, fc);
    out.filtered_means.push_back(fm.segment(t * n, n));
    out.filtered_covs.push_back(fc.block(t * n, t * n, n, n));
  }
  const MatrixXd syy = J.block(nx, nx, ny, ny);
  const VectorXd r = yv - mean.segment(nx, ny);
  const Eigen::LLT<MatrixXd> llt(syy);
  const double logdet = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  out.loglik = -0.5 * (r.dot(llt.solve(r)) + logdet + double(ny) * std::log(2 * M_PI));
  return out;
}

}  // namespace oracle
