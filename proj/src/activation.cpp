#include "esnssm/activation.hpp"

#include <cmath>
#include <string>

#include "esnssm/error.hpp"

namespace esnssm {

Activation Activation::leaky_slope(double a) {
  if (!std::isfinite(a) || a < 0.0)
    throw DomainError("invalid_activation", "leaky_slope requires a finite slope a >= 0");
  return Activation(Kind::LeakySlope, a);
}

double Activation::lipschitz() const {
  switch (kind_) {
    case Kind::Tanh:
    case Kind::Identity:
      return 1.0;
    case Kind::LeakySlope:
      return std::max(1.0, slope_);
  }
  return 1.0;
}

std::optional<double> Activation::second_derivative_bound() const {
  switch (kind_) {
    case Kind::Tanh:
      // |tanh''| = 2|t|(1−t²) peaks at t² = 1/3.
      return 4.0 / (3.0 * std::sqrt(3.0));
    case Kind::Identity:
      return 0.0;
    case Kind::LeakySlope:
      // Kink at 0, unless the slope makes it the identity.
      if (slope_ == 1.0) return 0.0;
      return std::nullopt;
  }
  return std::nullopt;
}

double Activation::value(double x) const {
  switch (kind_) {
    case Kind::Tanh:
      return std::tanh(x);
    case Kind::Identity:
      return x;
    case Kind::LeakySlope:
      return x >= 0.0 ? x : slope_ * x;
  }
  return x;
}

double Activation::derivative(double x) const {
  switch (kind_) {
    case Kind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Kind::Identity:
      return 1.0;
    case Kind::LeakySlope:
      return x >= 0.0 ? 1.0 : slope_;
  }
  return 1.0;
}

std::string Activation::name() const {
  switch (kind_) {
    case Kind::Tanh:
      return "tanh";
    case Kind::Identity:
      return "identity";
    case Kind::LeakySlope:
      return "leaky_slope";
  }
  return "unknown";
}

ActivationResult activation_eval(const Activation& a, const Eigen::VectorXd& x) {
  ActivationResult r{Eigen::VectorXd(x.size()), Eigen::VectorXd(x.size())};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i)))
      throw DomainError("non_finite_input",
                        "activation input has a non-finite entry at index " + std::to_string(i));
    r.value(i) = a.value(x(i));
    r.derivative(i) = a.derivative(x(i));
  }
  return r;
}

}  // namespace esnssm
