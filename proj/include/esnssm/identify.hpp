#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/core.hpp"
#include "esnssm/linearize.hpp"
#include "esnssm/stability.hpp"

namespace esnssm {

/// Process and measurement covariances of x⁺ = Ax + Bu + w, y = Cx + v.
struct NoiseModel {
  MatrixXd Q;
  MatrixXd R;

  void validate(Eigen::Index n, Eigen::Index p) const;
};

struct GaussianBelief {
  VectorXd mean;
  MatrixXd cov;
};

/// Input/output record: outputs[t] observes the state reached after
/// applying inputs[t], i.e. y_{t+1} = Cx_{t+1} + v.
struct IoData {
  std::vector<VectorXd> inputs;
  std::vector<VectorXd> outputs;

  std::size_t length() const { return inputs.size(); }
};

/// Filter and smoother output over states x_0 … x_T. Index 0 of the
/// filtered and predicted sequences holds the prior. cross_covs[t] is
/// Cov(x_t, x_{t+1} | y_{1:T}) = J_t P_{t+1|T}, for t = 0 … T−1.
struct SmoothedPosterior {
  std::vector<VectorXd> filtered_means, predicted_means, smoothed_means;
  std::vector<MatrixXd> filtered_covs, predicted_covs, smoothed_covs;
  std::vector<MatrixXd> cross_covs;
  std::vector<MatrixXd> transitions;  // A_t used by the prediction from t to t+1
  double loglik = 0.0;
  bool time_varying = false;  // EKF: cross_covs use the LTI formula per step
  bool smoothed = false;
};

/// Linear Kalman filter with Joseph-form updates. D must be zero.
SmoothedPosterior kalman_filter(const LtiModel& lti, const NoiseModel& noise, const IoData& data,
                                const GaussianBelief& prior);

/// Rauch–Tung–Striebel backward pass over a filter result.
SmoothedPosterior rts_smoother(SmoothedPosterior filtered);

/// Extended Kalman filter on the reservoir: nonlinear mean prediction,
/// covariance propagated with the Jacobian at μ_{t|t}.
SmoothedPosterior ekf_filter(const ReservoirParams& p, const Readout& readout, const NoiseModel& noise,
                             const IoData& data, const GaussianBelief& prior);

/// Basis {I, W̄} for A(θ) = θ₁I + θ₂W̄ with θ₁ = 1−λ, θ₂ = λα.
struct StructureBasis {
  MatrixXd W_bar;
  double L_sigma = 1.0;
};

struct StructuredTheta {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double leak = 1.0;
  double alpha = 1.0;
  MatrixXd W_bar;
  double raw_theta1 = 0.0;  // before feasibility projection
  double raw_theta2 = 0.0;
  bool leak_clamped = false;
  bool alpha_scaled = false;

  MatrixXd A() const;
};

/// Frobenius projection of A onto span{I, W̄}, then λ ∈ [1e-6, 1], α > 0,
/// and α shrunk until (1−λ) + λL_σ‖αW̄‖₂ ≤ 1 − 1e-6.
StructuredTheta project_structured(const MatrixXd& a, const StructureBasis& basis);

/// Small-gain certificate of a projected parameterization.
Certificate structured_certificate(const StructuredTheta& theta, double L_sigma);

struct EmStepResult {
  LtiModel lti;
  NoiseModel noise;
  std::optional<StructuredTheta> theta;
  double loglik = 0.0;  // of the parameters *entering* the step
  bool constrained_step = false;
  int jitter_events = 0;
  bool gram_ridge_applied = false;
};

/// One EM iteration: KF + RTS under the current parameters, then the
/// M-step for (A, B) jointly (optionally projected onto {I, W̄}), Q and R.
/// C, D and the prior on x_0 are held fixed.
EmStepResult em_step(const LtiModel& lti, const NoiseModel& noise, const GaussianBelief& prior,
                     const IoData& data, const std::optional<StructureBasis>& structure = std::nullopt);

struct EmRunResult {
  LtiModel lti;
  NoiseModel noise;
  std::optional<StructuredTheta> theta;
  std::vector<double> loglik_trace;  // one entry per E-step plus the final parameters
  int iterations = 0;
  bool converged = false;
  int constrained_decreases = 0;
  int jitter_events = 0;
};

/// Iterates em_step until the relative loglik improvement drops below
/// rel_tol or max_iters is reached. An unconstrained loglik decrease beyond
/// 1e-9 throws DomainError("em_loglik_decrease").
EmRunResult em_run(const LtiModel& init, const NoiseModel& init_noise, const GaussianBelief& prior,
                   const IoData& data, const std::optional<StructureBasis>& structure, int max_iters = 200,
                   double rel_tol = 1e-8);

/// Ridge readout Ĉ = Σ(y−ȳ)(x̂−x̄)ᵀ (Σ X̂_t^c + λ_rI)⁻¹, d = ȳ − Ĉx̄, where
/// X̂_t^c = P_t + (x̂_t−x̄)(x̂_t−x̄)ᵀ. `covs` may be empty (raw states).
/// With center = false, d = 0 and uncentered moments are used.
Readout readout_ml(const std::vector<VectorXd>& states, const std::vector<MatrixXd>& covs,
                   const std::vector<VectorXd>& outputs, double ridge, bool center = true);

/// Gaussian posterior over vec(C) with precision τI + S ⊗ R⁻¹; kept in
/// factored form (S, R⁻¹, τ) and never densified.
struct BayesReadout {
  Readout mean;
  MatrixXd state_moment;  // S = Σ X̂_t (centered when requested)
  MatrixXd R_inv;
  double prior_precision = 1.0;

  /// Posterior variance of each entry of C (p×n).
  MatrixXd entry_variance() const;
  /// Dense Λ_C, refused when p·n > 10⁴.
  MatrixXd dense_precision() const;
};

BayesReadout readout_bayes(const std::vector<VectorXd>& states, const std::vector<MatrixXd>& covs,
                           const std::vector<VectorXd>& outputs, double prior_precision, const MatrixXd& R,
                           bool center = true);

struct SubspaceResult {
  MatrixXd A_ssi, B_ssi, C_ssi;
  VectorXd hankel_singular_values;
  StructuredTheta theta;
  Certificate certificate;
  std::size_t markov_used = 0;
};

struct SubspaceOptions {
  int order = 1;
  double singular_floor = 0.0;  // absolute floor on retained singular values
  std::size_t markov_length = 0;  // FIR length for I/O data; 0 → automatic
};

/// Smallest singular value of the depth-r block-Toeplitz matrix of inputs
/// (columns [u_t; u_{t−1}; …; u_{t−r+1}], scaled by 1/√columns).
double excitation_level(const std::vector<VectorXd>& inputs, int depth);

/// Markov parameters h_0..h_{L−1} by least squares from I/O data.
std::vector<MatrixXd> estimate_markov(const IoData& data, std::size_t length);

/// Ho–Kalman realization of order r from Markov parameters h_0..h_K, then
/// projection of A_ssi onto span{I, W̄} with the contraction constraint.
SubspaceResult subspace_shape_from_markov(const std::vector<MatrixXd>& markov, const SubspaceOptions& opts,
                                          const StructureBasis& basis);

/// As above, estimating the Markov parameters from persistently exciting
/// I/O data first.
SubspaceResult subspace_shape(const IoData& data, const SubspaceOptions& opts, const StructureBasis& basis);

}  // namespace esnssm
