#pragma once

#include <vector>

#include <Eigen/Dense>

#include "esnssm/identify.hpp"
#include "esnssm/linearize.hpp"

namespace esnssm {

struct PredictiveDistribution {
  std::size_t horizon = 0;
  VectorXd mean;        // p
  MatrixXd covariance;  // CΣ_hCᵀ + R
  VectorXd state_mean;  // A^hμ + Σ AʲBu
  MatrixXd state_cov;   // Σ_h

  /// z·sqrt(diag(covariance)) for a two-sided band; z = 1.959963984540054
  /// gives 95%.
  VectorXd half_widths(double z = 1.959963984540054) const;
};

/// h-step-ahead output distribution from a filtered belief (μ_{t|t}, P_{t|t})
/// given the h future inputs u_t … u_{t+h−1}.
PredictiveDistribution predictive(const LtiModel& lti, const NoiseModel& noise, const GaussianBelief& belief,
                                  const std::vector<VectorXd>& future_inputs);

}  // namespace esnssm
