#include "esnssm/freq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"

namespace esnssm {

namespace {

using cd = std::complex<double>;

double sigma_max(const MatrixXcd& h) {
  if (h.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(h);
  return svd.singularValues()(0);
}

// ‖Aᵏ‖₂ / ρᵏ over k = 0..window; equals 1 for normal A.
double decay_constant(const MatrixXd& a, double rho, std::size_t window) {
  double c = 1.0;
  if (rho <= 0.0) return c;
  MatrixXd power = MatrixXd::Identity(a.rows(), a.cols());
  double rho_k = 1.0;
  for (std::size_t k = 1; k <= window; ++k) {
    power = power * a;
    rho_k *= rho;
    if (rho_k < 1e-300) break;
    Eigen::JacobiSVD<MatrixXd> svd(power);
    c = std::max(c, svd.singularValues()(0) / rho_k);
  }
  return c;
}

double tail_bound_for(const LtiModel& lti, double rho, double c, std::size_t K) {
  const double cn = linalg::spectral_norm(lti.C);
  const double bn = linalg::spectral_norm(lti.B);
  if (cn == 0.0 || bn == 0.0) return 0.0;
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  if (rho == 0.0) {
    // Nilpotent: Aᵏ = 0 for k ≥ n; sum the remaining finite terms exactly.
    double tail = 0.0;
    MatrixXd power = MatrixXd::Identity(lti.n(), lti.n());
    for (Eigen::Index k = 1; k < lti.n(); ++k) {
      power = power * lti.A;
      if (static_cast<std::size_t>(k) > K) tail += (lti.C * power * lti.B).norm();
    }
    return tail;
  }
  return c * cn * bn * std::pow(rho, static_cast<double>(K + 1)) / (1.0 - rho);
}

}  // namespace

TransferValue transfer_eval(const LtiModel& lti, std::complex<double> z) {
  lti.validate();
  if (z == cd(0.0, 0.0)) throw DomainError("invalid_argument", "transfer_eval needs z != 0");
  const Eigen::Index n = lti.n();
  TransferValue out;
  out.H = lti.D.cast<cd>();
  if (n == 0) return out;
  const double rho = linalg::spectral_radius(lti.A);
  out.outside_convergence_region = std::abs(z) <= rho;
  const MatrixXcd m = MatrixXcd::Identity(n, n) - lti.A.cast<cd>() / z;
  Eigen::PartialPivLU<MatrixXcd> lu(m);
  if (!(lu.rcond() > 1e-13)) {
    const VectorXcd ev = linalg::eigenvalues(lti.A);
    Eigen::Index idx = 0;
    (ev.array() - z).abs().minCoeff(&idx);
    std::ostringstream msg;
    msg << "pole hit: I - A/z is singular at z = " << z << "; nearest eigenvalue " << ev(idx);
    throw DomainError("pole_hit", msg.str());
  }
  out.H += lti.C.cast<cd>() * lu.solve(lti.B.cast<cd>());
  return out;
}

ImpulseKernel impulse_kernel(const LtiModel& lti, std::size_t K) {
  lti.validate();
  ImpulseKernel kernel;
  kernel.truncation = K;
  kernel.blocks.reserve(K + 1);
  MatrixXd ak_b = lti.B;  // AᵏB
  for (std::size_t k = 0; k <= K; ++k) {
    kernel.blocks.push_back(lti.C * ak_b);
    ak_b = lti.A * ak_b;
  }
  kernel.radius = lti.n() > 0 ? linalg::spectral_radius(lti.A) : 0.0;
  const auto window = static_cast<std::size_t>(std::min<Eigen::Index>(2 * lti.n() + 20, 500));
  kernel.decay_constant = decay_constant(lti.A, kernel.radius, window);
  kernel.tail_bound = tail_bound_for(lti, kernel.radius, kernel.decay_constant, K);
  return kernel;
}

ImpulseKernel impulse_kernel_auto(const LtiModel& lti, double tolerance, std::size_t max_K) {
  lti.validate();
  if (!(tolerance > 0.0)) throw DomainError("invalid_argument", "kernel tolerance must be positive");
  const double rho = lti.n() > 0 ? linalg::spectral_radius(lti.A) : 0.0;
  if (rho >= 1.0) throw DomainError("unstable", "automatic kernel truncation needs rho(A) < 1");
  const auto window = static_cast<std::size_t>(std::min<Eigen::Index>(2 * lti.n() + 20, 500));
  const double c = decay_constant(lti.A, rho, window);
  std::size_t K = 0;
  while (K < max_K && tail_bound_for(lti, rho, c, K) > tolerance) ++K;
  return impulse_kernel(lti, K);
}

ModalDecomposition modal(const LtiModel& lti) {
  lti.validate();
  Eigen::EigenSolver<MatrixXd> es(lti.A, true);
  if (es.info() != Eigen::Success)
    throw DomainError("eigensolver_failure", "nonsymmetric eigensolver did not converge");
  const MatrixXcd v = es.eigenvectors();
  Eigen::JacobiSVD<MatrixXcd> svd(v);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e8))
    throw DomainError("near_defective",
                      "A is nearly defective (eigenvector condition " + std::to_string(cond) +
                          "); analyze the impulse kernel instead of modal residues");
  const MatrixXcd w = v.inverse();  // rows are left eigenvectors wᵢᵀ
  ModalDecomposition md;
  md.eigenvalues = es.eigenvalues();
  md.D = lti.D;
  md.eigvec_condition = cond;
  const MatrixXcd cv = lti.C.cast<cd>() * v;
  const MatrixXcd wb = w * lti.B.cast<cd>();
  for (Eigen::Index i = 0; i < v.cols(); ++i) md.residues.push_back(cv.col(i) * wb.row(i));
  return md;
}

MatrixXd modal_kernel_block(const ModalDecomposition& md, std::size_t k) {
  if (md.residues.empty()) return MatrixXd::Zero(md.D.rows(), md.D.cols());
  MatrixXcd h = MatrixXcd::Zero(md.residues.front().rows(), md.residues.front().cols());
  for (std::size_t i = 0; i < md.residues.size(); ++i)
    h += md.residues[i] * std::pow(md.eigenvalues(static_cast<Eigen::Index>(i)), static_cast<double>(k));
  return h.real();
}

GramianPair gramians(const LtiModel& lti) {
  lti.validate();
  GramianPair g;
  g.Wc = linalg::solve_discrete_lyapunov(lti.A, lti.B * lti.B.transpose(), false);
  g.Wo = linalg::solve_discrete_lyapunov(lti.A, lti.C.transpose() * lti.C, true);
  g.min_eig_c = lti.n() > 0 ? linalg::min_eigenvalue_sym(g.Wc) : 0.0;
  g.min_eig_o = lti.n() > 0 ? linalg::min_eigenvalue_sym(g.Wo) : 0.0;
  return g;
}

RankReport ctrb_obsv_rank(const LtiModel& lti, double tol) {
  lti.validate();
  const Eigen::Index n = lti.n();
  if (n > 512) throw DomainError("invalid_argument", "rank tests are limited to n <= 512");
  const Eigen::Index m = lti.m();
  const Eigen::Index p = lti.p();
  MatrixXd ctrb(n, n * m);
  MatrixXd obsv(n * p, n);
  MatrixXd ak_b = lti.B;
  MatrixXd c_ak = lti.C;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = ak_b;
    obsv.middleRows(k * p, p) = c_ak;
    ak_b = lti.A * ak_b;
    c_ak = c_ak * lti.A;
  }
  RankReport r;
  r.rank_c = linalg::numerical_rank(ctrb, tol);
  r.rank_o = linalg::numerical_rank(obsv, tol);
  if (n > 0 && linalg::spectral_radius(lti.A) < 1.0) {
    const GramianPair g = gramians(lti);
    r.min_eig_wc = g.min_eig_c;
    r.min_eig_wo = g.min_eig_o;
  } else {
    r.min_eig_wc = r.min_eig_wo = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

double h2_norm(const LtiModel& lti) {
  lti.validate();
  if (lti.D.size() > 0 && lti.D.cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("nonzero_feedthrough", "H2 norm is infinite for D != 0");
  if (lti.n() == 0) return 0.0;
  const MatrixXd wc = linalg::solve_discrete_lyapunov(lti.A, lti.B * lti.B.transpose(), false);
  return std::sqrt(std::max(0.0, (lti.C * wc * lti.C.transpose()).trace()));
}

HinfEstimate hinf_norm_grid(const LtiModel& lti, std::size_t grid_points) {
  lti.validate();
  if (grid_points < 64) throw DomainError("invalid_argument", "H-infinity grid needs at least 64 points");
  if (lti.n() > 0 && linalg::spectral_radius(lti.A) >= 1.0)
    throw DomainError("unstable", "H-infinity norm needs rho(A) < 1");
  const double pi = std::numbers::pi;
  auto gain = [&](double w) { return sigma_max(transfer_eval(lti, std::polar(1.0, w)).H); };

  const double step = pi / static_cast<double>(grid_points - 1);
  HinfEstimate best{-1.0, 0.0, step};
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double w = step * static_cast<double>(k);
    const double g = gain(w);
    if (g > best.value) best = {g, w, step};  // strict: lowest ω wins ties
  }

  constexpr double inv_phi = 0.6180339887498949;
  double half = step;
  for (int round = 0; round < 3; ++round) {
    double a = std::max(0.0, best.omega_peak - half);
    double b = std::min(pi, best.omega_peak + half);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = gain(x1), f2 = gain(x2);
    for (int it = 0; it < 40; ++it) {
      if (f1 >= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - inv_phi * (b - a);
        f1 = gain(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + inv_phi * (b - a);
        f2 = gain(x2);
      }
    }
    for (const auto& [w, g] : {std::pair{x1, f1}, std::pair{x2, f2}})
      if (g > best.value) {
        best.value = g;
        best.omega_peak = w;
      }
    best.bracket_width = b - a;
    half = std::max(b - a, half / 16.0);
  }
  return best;
}

MatrixXcd output_psd(const LtiModel& lti, const MatrixXcd& S_u, double omega) {
  if (S_u.rows() != lti.m() || S_u.cols() != lti.m())
    throw DomainError("dimension_mismatch", "input spectral density must be m x m");
  const double scale = std::max(1.0, S_u.cwiseAbs().maxCoeff());
  if ((S_u - S_u.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("not_psd", "input spectral density is not Hermitian");
  if (S_u.size() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(S_u, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale)
      throw DomainError("not_psd", "input spectral density has a negative eigenvalue");
  }
  const MatrixXcd h = transfer_eval(lti, std::polar(1.0, omega)).H;
  return h * S_u * h.adjoint();
}

std::vector<SpectrumRow> spectrum(const LtiModel& lti, std::size_t grid_points) {
  lti.validate();
  if (grid_points < 2) throw DomainError("invalid_argument", "spectrum needs at least 2 grid points");
  std::vector<SpectrumRow> rows;
  rows.reserve(grid_points);
  const double step = std::numbers::pi / static_cast<double>(grid_points - 1);
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double w = step * static_cast<double>(k);
    const MatrixXcd h = transfer_eval(lti, std::polar(1.0, w)).H;
    Eigen::JacobiSVD<MatrixXcd> svd(h);
    rows.push_back({w, svd.singularValues()});
  }
  return rows;
}

}  // namespace esnssm
