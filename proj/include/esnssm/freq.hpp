#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/linearize.hpp"

namespace esnssm {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

struct ImpulseKernel {
  std::vector<MatrixXd> blocks;  // h_k = CAᵏB, k = 0..K
  std::size_t truncation = 0;    // K
  double tail_bound = 0.0;       // bound on Σ_{k>K} ‖h_k‖
  double decay_constant = 1.0;   // c with ‖Aᵏ‖ ≤ c·ρᵏ over the sampled window
  double radius = 0.0;           // ρ(A)
};

struct ModalDecomposition {
  VectorXcd eigenvalues;
  std::vector<MatrixXcd> residues;  // (Cvᵢ)(wᵢᵀB), p×m
  MatrixXd D;
  double eigvec_condition = 1.0;
};

struct GramianPair {
  MatrixXd Wc;
  MatrixXd Wo;
  double min_eig_c = 0.0;
  double min_eig_o = 0.0;
};

struct TransferValue {
  MatrixXcd H;
  bool outside_convergence_region = false;  // |z| ≤ ρ(A): closed form only
};

struct RankReport {
  int rank_c = 0;
  int rank_o = 0;
  double min_eig_wc = 0.0;  // NaN when ρ(A) ≥ 1
  double min_eig_wo = 0.0;
};

struct HinfEstimate {
  double value = 0.0;  // certified lower bound: an attained σ_max
  double omega_peak = 0.0;
  double bracket_width = 0.0;
};

/// H(z) = C(I − z⁻¹A)⁻¹B + D = Σ_k h_k z⁻ᵏ + D by a direct linear solve.
/// Throws DomainError("pole_hit") naming the nearest eigenvalue when
/// I − z⁻¹A is singular.
TransferValue transfer_eval(const LtiModel& lti, std::complex<double> z);

/// Kernel blocks by repeated multiplication, with a tail bound
/// c‖C‖‖B‖ρ^{K+1}/(1−ρ) (infinite when ρ ≥ 1).
ImpulseKernel impulse_kernel(const LtiModel& lti, std::size_t K);

/// Smallest K ≤ max_K whose tail bound is ≤ tolerance.
ImpulseKernel impulse_kernel_auto(const LtiModel& lti, double tolerance, std::size_t max_K = 100000);

/// Requires eigenvector condition number ≤ 1e8.
ModalDecomposition modal(const LtiModel& lti);

/// Σᵢ Rᵢλᵢᵏ, the modal reconstruction of h_k = CAᵏB.
MatrixXd modal_kernel_block(const ModalDecomposition& md, std::size_t k);

GramianPair gramians(const LtiModel& lti);

RankReport ctrb_obsv_rank(const LtiModel& lti, double tol);

/// sqrt(tr(C W_c Cᵀ)); requires ρ(A) < 1 and D = 0.
double h2_norm(const LtiModel& lti);

/// Grid of `grid_points` frequencies on [0, π] followed by three
/// golden-section refinement rounds around the grid argmax.
HinfEstimate hinf_norm_grid(const LtiModel& lti, std::size_t grid_points);

/// S_y(ω) = H(e^{jω}) S_u H(e^{jω})*.
MatrixXcd output_psd(const LtiModel& lti, const MatrixXcd& S_u, double omega);

struct SpectrumRow {
  double omega = 0.0;
  VectorXd singular_values;  // descending
};

/// Singular values of H(e^{jω}) on a uniform grid of [0, π].
std::vector<SpectrumRow> spectrum(const LtiModel& lti, std::size_t grid_points);

}  // namespace esnssm
