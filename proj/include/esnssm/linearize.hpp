#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/core.hpp"

namespace esnssm {

/// x⁺ = Ax + Bu, y = Cx + Du, optionally tagged with the operating pair it
/// was linearized at.
struct LtiModel {
  MatrixXd A, B, C, D;
  std::optional<VectorXd> x_bar;
  std::optional<VectorXd> u_bar;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  void validate() const;
};

struct LtvModel {
  std::vector<MatrixXd> A;
  std::vector<MatrixXd> B;
  MatrixXd C, D;

  std::size_t length() const { return A.size(); }
};

/// Exact Jacobians of reservoir_step at (x̄, ū):
/// A = (1−λ)I + λJ_σ(ξ)W, B = λJ_σ(ξ)U, C from the readout, D = 0.
LtiModel jacobians_at(const ReservoirParams& p, const VectorXd& x_bar, const VectorXd& u_bar,
                      const Readout& readout);

/// (λ/2)·L_σ2·r²: one-step linearization error on the tube
/// ‖W(x−x̄)‖ + ‖U(u−ū)‖ ≤ r. Throws for activations without L_σ2.
double remainder_bound(const ReservoirParams& p, double radius);

/// Per-step Jacobians along a trajectory (A_t, B_t at (x_t, u_t)).
LtvModel linearize_trajectory(const ReservoirParams& p, const Trajectory& traj, const Readout& readout);

}  // namespace esnssm
