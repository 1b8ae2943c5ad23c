#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/core.hpp"

// Echo-state / input-to-state stability certificates.
//
// Three sufficient tests are offered:
//  * LipschitzC1: κ = (1−λ) + λ‖W‖₂L_σ, a global contraction in the
//    Euclidean norm.
//  * SpectralC3: ρ of the small-signal Jacobian at an operating point;
//    local only.
//  * WeightedC2: contraction in ‖x‖_P = sqrt(xᵀPx) for every Jacobian
//    (1−λ)I + λΔW with diagonal slopes Δ ∈ [0, L_σ]ⁿ.
//
// Why vertices suffice for WeightedC2: for a fixed P the map
// Δ ↦ M(Δ) = (1−λ)I + λΔW is affine, and M ↦ ‖P^{1/2} M P^{-1/2}‖₂ is convex,
// so the induced P-norm is a convex function of Δ on the box [0, L_σ]ⁿ and
// attains its maximum at one of the 2ⁿ corners. Checking all corners is
// therefore exact for slope-restricted σ with σ' ∈ [0, L_σ] (tanh, identity,
// leaky slopes a ≥ 0). When 2ⁿ exceeds the vertex budget only a
// low-discrepancy subset is checked and the verdict is at best Unknown.

namespace esnssm {

enum class CertificateMethod { LipschitzC1, SpectralC3, WeightedC2 };
enum class Verdict { Pass, Fail, Unknown };

std::string to_string(CertificateMethod m);
std::string to_string(Verdict v);

struct Certificate {
  CertificateMethod method = CertificateMethod::LipschitzC1;
  double kappa = 0.0;
  double margin = 1.0;  // 1 − κ
  Verdict verdict = Verdict::Unknown;
  std::optional<Eigen::MatrixXd> weight_P;  // WeightedC2 only
  std::size_t vertices_checked = 0;
};

struct HorizonEstimate {
  double kappa = 0.0;
  double input_gain = 0.0;
  double amplitude = 0.0;
  double tolerance = 0.0;
  long horizon = 0;
};

Certificate certify_lipschitz(const ReservoirParams& p);

/// ρ of the Jacobian (1−λ)I + λJ_σ(ξ)W at the given operating pair.
Certificate certify_spectral(const ReservoirParams& p, const VectorXd& x_bar, const VectorXd& u_bar);

Certificate certify_weighted(const ReservoirParams& p, std::size_t vertex_budget);

/// Input Lipschitz constant L_u = λ‖U‖₂L_σ.
double input_gain(const ReservoirParams& p);

double spectral_radius(const Eigen::MatrixXd& a);

/// H_ε = ceil(log(L_u·M/ε) / −log κ), 0 when L_u·M ≤ ε. Perturbing u_s by at
/// most M changes x_{s+1+h} by at most κ^h·L_u·M, so h = H_ε steps of
/// propagation after the input enters the state bring the effect below ε.
HorizonEstimate memory_horizon(double kappa, double input_gain, double amplitude, double tolerance);

/// ρ of a block-triangular deep stack: the max over its diagonal blocks.
double deep_stack_radius(const std::vector<Eigen::MatrixXd>& diag_blocks);

/// Most-restrictive certificate that Passes, else the best κ seen.
Certificate best_certificate(const std::vector<Certificate>& certs);

}  // namespace esnssm
