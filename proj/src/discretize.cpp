#include "esnssm/discretize.hpp"

#include <string>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"

namespace esnssm {

namespace {

void require_positive_times(double dt, double tau) {
  if (!(dt > 0.0) || !(tau > 0.0))
    throw DomainError("invalid_argument", "time step and time constant must be positive");
}

}  // namespace

double euler_leak(double dt, double tau) {
  require_positive_times(dt, tau);
  const double leak = dt / tau;
  if (leak > 1.0)
    throw DomainError("invalid_leak", "Euler leak dt/tau = " + std::to_string(leak) +
                                          " is outside the leak range (0,1]");
  return leak;
}

TustinLeak tustin_leak(double dt, double tau) {
  require_positive_times(dt, tau);
  const double leak = dt / (tau + 0.5 * dt);
  return {leak, leak >= 1.0};
}

CtLinearModel ct_jacobians(const ReservoirParams& p, double tau, const VectorXd& x_bar, const VectorXd& u_bar) {
  p.validate();
  if (!(tau > 0.0)) throw DomainError("invalid_argument", "time constant must be positive");
  if (x_bar.size() != p.n() || u_bar.size() != p.m())
    throw DomainError("dimension_mismatch", "operating point does not match reservoir dimensions");
  const VectorXd xi = p.W * x_bar + p.U * u_bar + p.b;
  const VectorXd slopes = activation_eval(p.activation, xi).derivative;
  CtLinearModel ct;
  ct.A_c = (-MatrixXd::Identity(p.n(), p.n()) + slopes.asDiagonal() * p.W) / tau;
  ct.B_c = slopes.asDiagonal() * p.U / tau;
  ct.Q_c = MatrixXd::Zero(p.n(), p.n());
  ct.tau = tau;
  ct.dt = 0.0;
  return ct;
}

DiscreteModel zoh_discretize(const CtLinearModel& ct) {
  const Eigen::Index n = ct.A_c.rows();
  if (ct.A_c.cols() != n || ct.B_c.rows() != n)
    throw DomainError("dimension_mismatch", "A_c must be square and B_c must have n rows");
  if (ct.Q_c.size() != 0 && (ct.Q_c.rows() != n || ct.Q_c.cols() != n))
    throw DomainError("dimension_mismatch", "Q_c must be n x n");
  if (!(ct.dt > 0.0)) throw DomainError("invalid_argument", "time step must be positive");
  if (!ct.A_c.allFinite() || !ct.B_c.allFinite())
    throw DomainError("non_finite_parameter", "continuous-time model is not finite");
  const double norm2 = linalg::spectral_norm(ct.A_c) * ct.dt;
  if (norm2 > 1e3)
    throw DomainError("ill_conditioned", "||A_c dt|| = " + std::to_string(norm2) + " exceeds 1e3");
  const Eigen::Index m = ct.B_c.cols();
  const MatrixXd q_c = ct.Q_c.size() == 0 ? MatrixXd::Zero(n, n) : ct.Q_c;
  linalg::require_psd(q_c, "diffusion Q_c");

  // Single exponential of the (2n + m) block matrix
  //   M = [ A_c  Q_c    B_c ]
  //       [ 0   −A_cᵀ   0   ] · Δt
  //       [ 0    0      0   ]
  // gives E₁₁ = A_d, E₁₃ = ∫e^{A_cs}ds·B_c = B_d and E₁₂·E₁₁ᵀ = Q_d.
  MatrixXd big = MatrixXd::Zero(2 * n + m, 2 * n + m);
  big.block(0, 0, n, n) = ct.A_c;
  big.block(0, n, n, n) = q_c;
  big.block(0, 2 * n, n, m) = ct.B_c;
  big.block(n, n, n, n) = -ct.A_c.transpose();
  const MatrixXd e = linalg::expm(big * ct.dt);

  DiscreteModel d;
  // A_d from its own exponential: the small block is scaled less, so it
  // keeps full accuracy (and e^0 = I exactly).
  d.A_d = linalg::expm(ct.A_c * ct.dt);
  d.B_d = e.block(0, 2 * n, n, m);
  d.Q_d = linalg::symmetrize(e.block(0, n, n, n) * e.block(0, 0, n, n).transpose());
  return d;
}

}  // namespace esnssm
