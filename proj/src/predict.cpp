#include "esnssm/predict.hpp"

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"

namespace esnssm {

VectorXd PredictiveDistribution::half_widths(double z) const {
  return z * covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

PredictiveDistribution predictive(const LtiModel& lti, const NoiseModel& noise, const GaussianBelief& belief,
                                  const std::vector<VectorXd>& future_inputs) {
  lti.validate();
  noise.validate(lti.n(), lti.p());
  if (lti.D.size() > 0 && lti.D.cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("nonzero_feedthrough", "predictive expects D = 0");
  if (future_inputs.empty()) throw DomainError("invalid_argument", "prediction horizon must be >= 1");
  if (belief.mean.size() != lti.n() || belief.cov.rows() != lti.n() || belief.cov.cols() != lti.n())
    throw DomainError("dimension_mismatch", "belief must be an n-dimensional Gaussian");
  for (const auto& u : future_inputs)
    if (u.size() != lti.m()) throw DomainError("dimension_mismatch", "future input has wrong dimension");

  // Iterating x ← Ax + Bu, Σ ← AΣAᵀ + Q accumulates A^hμ + Σ AʲBu and
  // A^hP(Aᵀ)^h + Σ AʲQ(Aᵀ)ʲ without forming powers.
  VectorXd mean = belief.mean;
  MatrixXd cov = belief.cov;
  for (const auto& u : future_inputs) {
    mean = lti.A * mean + lti.B * u;
    cov = linalg::symmetrize(lti.A * cov * lti.A.transpose() + noise.Q);
  }
  PredictiveDistribution out;
  out.horizon = future_inputs.size();
  out.state_mean = mean;
  out.state_cov = cov;
  out.mean = lti.C * mean;
  out.covariance = linalg::symmetrize(lti.C * cov * lti.C.transpose() + noise.R);
  return out;
}

}  // namespace esnssm
