#pragma once

#include <Eigen/Dense>

#include "esnssm/core.hpp"

namespace esnssm {

/// Linearized continuous-time reservoir τẋ = −x + σ(Wx + Uu + b) with
/// diffusion Q_c per unit time, sampled every Δt.
struct CtLinearModel {
  MatrixXd A_c;
  MatrixXd B_c;
  MatrixXd Q_c;
  double tau = 1.0;
  double dt = 1.0;
};

struct DiscreteModel {
  MatrixXd A_d;
  MatrixXd B_d;
  MatrixXd Q_d;
};

/// Forward-Euler leak λ = Δt/τ; rejects λ > 1.
double euler_leak(double dt, double tau);

struct TustinLeak {
  double leak = 0.0;
  bool exceeds_unit = false;  // λ ≥ 1, outside the usual leak range
};

/// Trapezoidal leak Δt/(τ + Δt/2), always in (0, 2).
TustinLeak tustin_leak(double dt, double tau);

/// A_c = (−I + J_σ(ξ)W)/τ, B_c = J_σ(ξ)U/τ at ξ = Wx̄ + Uū + b. Q_c is left
/// zero and Δt unset.
CtLinearModel ct_jacobians(const ReservoirParams& p, double tau, const VectorXd& x_bar, const VectorXd& u_bar);

/// Exact zero-order-hold equivalent: A_d = e^{A_cΔt},
/// B_d = ∫₀^Δt e^{A_cs}ds·B_c, Q_d = ∫₀^Δt e^{A_cs}Q_c e^{A_cᵀs}ds, all read
/// from one block-matrix exponential. Rejects ‖A_cΔt‖₂ > 1e3.
DiscreteModel zoh_discretize(const CtLinearModel& ct);

}  // namespace esnssm
