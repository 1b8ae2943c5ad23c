#include "esnssm/linearize.hpp"

#include <string>

#include "esnssm/error.hpp"

namespace esnssm {

void LtiModel::validate() const {
  const Eigen::Index nn = A.rows();
  if (A.cols() != nn) throw DomainError("dimension_mismatch", "A must be square");
  if (B.rows() != nn) throw DomainError("dimension_mismatch", "B must have n rows");
  if (C.cols() != nn) throw DomainError("dimension_mismatch", "C must have n columns");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw DomainError("dimension_mismatch", "D must be p x m");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
    throw DomainError("non_finite_parameter", "LTI model contains non-finite entries");
}

LtiModel jacobians_at(const ReservoirParams& p, const VectorXd& x_bar, const VectorXd& u_bar,
                      const Readout& readout) {
  p.validate();
  readout.validate(p.n());
  if (x_bar.size() != p.n() || u_bar.size() != p.m())
    throw DomainError("dimension_mismatch", "operating point does not match reservoir dimensions");
  const VectorXd xi = p.W * x_bar + p.U * u_bar + p.b;
  const VectorXd slopes = activation_eval(p.activation, xi).derivative;
  LtiModel lti;
  lti.A = (1.0 - p.leak) * MatrixXd::Identity(p.n(), p.n()) + p.leak * slopes.asDiagonal() * p.W;
  lti.B = p.leak * slopes.asDiagonal() * p.U;
  lti.C = readout.C;
  lti.D = MatrixXd::Zero(readout.p(), p.m());
  lti.x_bar = x_bar;
  lti.u_bar = u_bar;
  return lti;
}

double remainder_bound(const ReservoirParams& p, double radius) {
  if (!(radius >= 0.0)) throw DomainError("invalid_argument", "tube radius must be >= 0");
  const auto second = p.activation.second_derivative_bound();
  if (!second)
    throw DomainError("missing_second_derivative_bound",
                      "activation " + p.activation.name() + " has no second-derivative bound");
  return 0.5 * p.leak * *second * radius * radius;
}

LtvModel linearize_trajectory(const ReservoirParams& p, const Trajectory& traj, const Readout& readout) {
  if (traj.states.size() != traj.inputs.size() + 1)
    throw DomainError("length_mismatch", "trajectory needs states.size() == inputs.size() + 1");
  LtvModel ltv;
  ltv.A.reserve(traj.inputs.size());
  ltv.B.reserve(traj.inputs.size());
  for (std::size_t t = 0; t < traj.inputs.size(); ++t) {
    LtiModel step = jacobians_at(p, traj.states[t], traj.inputs[t], readout);
    ltv.A.push_back(std::move(step.A));
    ltv.B.push_back(std::move(step.B));
  }
  ltv.C = readout.C;
  ltv.D = MatrixXd::Zero(readout.p(), p.m());
  return ltv;
}

}  // namespace esnssm
