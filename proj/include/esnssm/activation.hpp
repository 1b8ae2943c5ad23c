#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace esnssm {

/// Pointwise nonlinearity with the Lipschitz data certificates rely on.
/// The table is closed: tanh, identity, and a leaky ReLU with slope `a`
/// on the negative half-line. All satisfy σ(0) = 0.
class Activation {
 public:
  enum class Kind { Tanh, Identity, LeakySlope };

  static Activation tanh() { return Activation(Kind::Tanh, 0.0); }
  static Activation identity() { return Activation(Kind::Identity, 0.0); }
  /// Requires a ≥ 0 so slopes stay inside [0, L_σ].
  static Activation leaky_slope(double a);

  Kind kind() const { return kind_; }
  double slope() const { return slope_; }

  /// Global Lipschitz constant L_σ.
  double lipschitz() const;
  /// sup |σ''|; empty for the leaky slope, which is not C².
  std::optional<double> second_derivative_bound() const;

  double value(double x) const;
  double derivative(double x) const;

  std::string name() const;

  bool operator==(const Activation&) const = default;

 private:
  Activation(Kind k, double a) : kind_(k), slope_(a) {}
  Kind kind_;
  double slope_;
};

struct ActivationResult {
  Eigen::VectorXd value;
  Eigen::VectorXd derivative;  // diagonal of J_σ
};

/// Componentwise σ and σ'. Throws DomainError naming the first non-finite
/// entry.
ActivationResult activation_eval(const Activation& a, const Eigen::VectorXd& x);

}  // namespace esnssm
