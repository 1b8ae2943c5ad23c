#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "esnssm/core.hpp"
#include "esnssm/stability.hpp"

namespace esnssm {

/// Feature map φ: Rⁿ → R^N. Entry 0 is the constant 1 and entries 1..n are
/// the coordinates of x; the remaining entries depend on the kind.
class Dictionary {
 public:
  enum class Kind { IdentityPlusConstant, Monomials, RandomFourier };

  static Dictionary identity_plus_constant(Eigen::Index n);
  /// All monomials of total degree 2..max_degree, graded-lexicographic.
  static Dictionary monomials(Eigen::Index n, int max_degree);
  /// √(2/k)·cos(ωᵢᵀx + bᵢ), ωᵢ ~ N(0, bandwidth⁻²I), bᵢ ~ U[0, 2π), drawn
  /// once from `seed`.
  static Dictionary random_fourier(Eigen::Index n, int count, double bandwidth, std::uint64_t seed);

  Kind kind() const { return kind_; }
  Eigen::Index state_dim() const { return n_; }
  Eigen::Index output_dim() const;
  int max_degree() const { return degree_; }
  int count() const { return count_; }
  double bandwidth() const { return bandwidth_; }
  std::uint64_t seed() const { return seed_; }

  VectorXd eval(const VectorXd& x) const;

 private:
  Dictionary() = default;

  Kind kind_ = Kind::IdentityPlusConstant;
  Eigen::Index n_ = 0;
  int degree_ = 1;
  int count_ = 0;
  double bandwidth_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<int>> exponents_;  // higher-degree monomials
  MatrixXd omega_;                           // count×n
  VectorXd phase_;
};

/// z⁺ = A_φz + B_φu + c_φ, y = C_φz, with uniform one-step residual ε on
/// the fitting data. c_φ is absorbed into the constant feature (A_φ's first
/// column) and stays zero.
struct LiftedModel {
  Dictionary dict;
  MatrixXd A;  // N×N
  MatrixXd B;  // N×m
  VectorXd c;  // N
  MatrixXd C;  // p×N
  double epsilon = 0.0;
  double rms_residual = 0.0;
  double ridge = 0.0;
  std::size_t snapshots = 0;

  /// ρ of A_φ without the invariant constant coordinate.
  double dynamic_radius() const;
};

/// Ridge least squares of φ(f(x_t, u_t)) on [φ(x_t); u_t] over every
/// snapshot of every trajectory. The constant feature's row is fixed to
/// e₀ and its column is not penalized. C_φ = [d | C | 0] composes the
/// identity block with `readout` (identity selection when absent).
LiftedModel edmd_fit(const ReservoirParams& p, const std::vector<Trajectory>& data, const Dictionary& dict,
                     double ridge, const std::optional<Readout>& readout = std::nullopt);

struct RolloutError {
  std::vector<double> discrepancy;  // ‖z_t − φ(x_t)‖, t = 1..k
  std::vector<double> bound;        // ε·(1 − ρᵗ)/(1 − ρ)
  double radius = 0.0;
  bool bound_valid = false;  // ρ < 1
  std::size_t violations = 0;
};

/// Rolls the lifted model forward k steps from φ(x_0) under traj.inputs and
/// compares it to φ of the exact nonlinear states.
RolloutError lifted_rollout_error(const LiftedModel& lm, const ReservoirParams& p, const Trajectory& traj,
                                  std::size_t horizon);

/// Small-gain test for the Lur'e form: κ = (1−λ) + λ‖V‖L_Φ‖W‖.
Certificate rf_smallgain(double leak, double v_norm, double phi_lipschitz, double w_norm);

}  // namespace esnssm
