#include "esnssm/identify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>

#include "esnssm/error.hpp"
#include "esnssm/linalg.hpp"

namespace esnssm {

void NoiseModel::validate(Eigen::Index n, Eigen::Index p) const {
  if (Q.rows() != n || Q.cols() != n) throw DomainError("dimension_mismatch", "Q must be n x n");
  if (R.rows() != p || R.cols() != p) throw DomainError("dimension_mismatch", "R must be p x p");
  linalg::require_psd(Q, "process covariance Q");
  linalg::require_psd(R, "measurement covariance R");
}

namespace {

constexpr double kJitter = 1e-12;

void check_data(const IoData& data, Eigen::Index m, Eigen::Index p) {
  if (data.inputs.size() != data.outputs.size())
    throw DomainError("length_mismatch", "inputs and outputs must have equal length");
  for (std::size_t t = 0; t < data.inputs.size(); ++t) {
    if (data.inputs[t].size() != m)
      throw DomainError("dimension_mismatch", "input " + std::to_string(t) + " has wrong dimension");
    if (data.outputs[t].size() != p)
      throw DomainError("dimension_mismatch", "output " + std::to_string(t) + " has wrong dimension");
  }
}

void check_prior(const GaussianBelief& prior, Eigen::Index n) {
  if (prior.mean.size() != n || prior.cov.rows() != n || prior.cov.cols() != n)
    throw DomainError("dimension_mismatch", "prior must be an n-dimensional Gaussian");
  linalg::require_psd(prior.cov, "prior covariance P0");
}

Eigen::LLT<MatrixXd> factor_pd(const MatrixXd& s, const std::string& what, std::size_t t) {
  const MatrixXd sym = linalg::symmetrize(s);
  Eigen::LLT<MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = std::max(1.0, sym.trace() / static_cast<double>(std::max<Eigen::Index>(1, sym.rows())));
  llt.compute(sym + kJitter * scale * MatrixXd::Identity(sym.rows(), sym.cols()));
  if (llt.info() != Eigen::Success)
    throw DomainError("not_positive_definite", what + " is not positive definite at t = " + std::to_string(t));
  return llt;
}

// Prediction x_{t+1} given the filtered belief at t: returns the predicted
// mean and the transition matrix used for the covariance.
using Predictor = std::function<std::pair<VectorXd, MatrixXd>(std::size_t, const VectorXd&)>;

SmoothedPosterior run_filter(const Predictor& predict, const MatrixXd& C, const VectorXd& offset,
                             const NoiseModel& noise, const IoData& data, const GaussianBelief& prior) {
  const Eigen::Index n = prior.mean.size();
  const Eigen::Index p = C.rows();
  const std::size_t T = data.length();
  SmoothedPosterior post;
  post.filtered_means.reserve(T + 1);
  post.filtered_covs.reserve(T + 1);
  post.predicted_means.reserve(T + 1);
  post.predicted_covs.reserve(T + 1);
  post.transitions.reserve(T);
  post.filtered_means.push_back(prior.mean);
  post.filtered_covs.push_back(linalg::symmetrize(prior.cov));
  post.predicted_means.push_back(prior.mean);
  post.predicted_covs.push_back(linalg::symmetrize(prior.cov));

  const MatrixXd id = MatrixXd::Identity(n, n);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double loglik = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    auto [mean_pred, a_t] = predict(t, post.filtered_means.back());
    MatrixXd cov_pred = linalg::symmetrize(a_t * post.filtered_covs.back() * a_t.transpose() + noise.Q);

    const VectorXd innov = data.outputs[t] - (C * mean_pred + offset);
    const MatrixXd s = C * cov_pred * C.transpose() + noise.R;
    const auto llt = factor_pd(s, "innovation covariance", t + 1);
    const MatrixXd gain = llt.solve(C * cov_pred).transpose();  // P Cᵀ S⁻¹
    const MatrixXd ikc = id - gain * C;
    const VectorXd mean_filt = mean_pred + gain * innov;
    const MatrixXd cov_filt =
        linalg::symmetrize(ikc * cov_pred * ikc.transpose() + gain * noise.R * gain.transpose());

    const MatrixXd l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    loglik += -0.5 * (static_cast<double>(p) * log2pi + logdet + innov.dot(llt.solve(innov)));

    post.transitions.push_back(std::move(a_t));
    post.predicted_means.push_back(std::move(mean_pred));
    post.predicted_covs.push_back(std::move(cov_pred));
    post.filtered_means.push_back(mean_filt);
    post.filtered_covs.push_back(cov_filt);
  }
  if (!std::isfinite(loglik)) throw DomainError("non_finite_loglik", "filter log-likelihood is not finite");
  post.loglik = loglik;
  return post;
}

}  // namespace

SmoothedPosterior kalman_filter(const LtiModel& lti, const NoiseModel& noise, const IoData& data,
                                const GaussianBelief& prior) {
  lti.validate();
  if (lti.D.size() > 0 && lti.D.cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("nonzero_feedthrough", "the Kalman filter expects D = 0");
  noise.validate(lti.n(), lti.p());
  check_data(data, lti.m(), lti.p());
  check_prior(prior, lti.n());
  Predictor predict = [&](std::size_t t, const VectorXd& mean) {
    return std::pair<VectorXd, MatrixXd>{lti.A * mean + lti.B * data.inputs[t], lti.A};
  };
  return run_filter(predict, lti.C, VectorXd::Zero(lti.p()), noise, data, prior);
}

SmoothedPosterior ekf_filter(const ReservoirParams& p, const Readout& readout, const NoiseModel& noise,
                             const IoData& data, const GaussianBelief& prior) {
  p.validate();
  readout.validate(p.n());
  noise.validate(p.n(), readout.p());
  check_data(data, p.m(), readout.p());
  check_prior(prior, p.n());
  Predictor predict = [&](std::size_t t, const VectorXd& mean) {
    const VectorXd xi = p.W * mean + p.U * data.inputs[t] + p.b;
    const VectorXd slopes = activation_eval(p.activation, xi).derivative;
    MatrixXd a = (1.0 - p.leak) * MatrixXd::Identity(p.n(), p.n()) + p.leak * slopes.asDiagonal() * p.W;
    return std::pair<VectorXd, MatrixXd>{reservoir_step(p, mean, data.inputs[t]), std::move(a)};
  };
  SmoothedPosterior post = run_filter(predict, readout.C, readout.d, noise, data, prior);
  post.time_varying = true;
  return post;
}

SmoothedPosterior rts_smoother(SmoothedPosterior post) {
  const std::size_t T = post.transitions.size();
  if (post.filtered_means.size() != T + 1 || post.predicted_covs.size() != T + 1)
    throw DomainError("length_mismatch", "rts_smoother needs a complete filter result");
  post.smoothed_means = post.filtered_means;
  post.smoothed_covs = post.filtered_covs;
  post.cross_covs.assign(T, MatrixXd());
  for (std::size_t k = T; k-- > 0;) {
    // J_t = P_{t|t} A_tᵀ P_{t+1|t}⁻¹
    const auto llt = factor_pd(post.predicted_covs[k + 1], "predicted covariance", k + 1);
    const MatrixXd j = llt.solve(post.transitions[k] * post.filtered_covs[k]).transpose();
    post.smoothed_means[k] =
        post.filtered_means[k] + j * (post.smoothed_means[k + 1] - post.predicted_means[k + 1]);
    post.smoothed_covs[k] = linalg::symmetrize(
        post.filtered_covs[k] + j * (post.smoothed_covs[k + 1] - post.predicted_covs[k + 1]) * j.transpose());
    post.cross_covs[k] = j * post.smoothed_covs[k + 1];
  }
  post.smoothed = true;
  return post;
}

MatrixXd StructuredTheta::A() const {
  return theta1 * MatrixXd::Identity(W_bar.rows(), W_bar.cols()) + theta2 * W_bar;
}

StructuredTheta project_structured(const MatrixXd& a, const StructureBasis& basis) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || basis.W_bar.rows() != n || basis.W_bar.cols() != n)
    throw DomainError("dimension_mismatch", "structured projection needs A and W_bar of equal square size");
  if (!(basis.L_sigma > 0.0)) throw DomainError("invalid_argument", "L_sigma must be positive");
  // Normal equations of min ‖θ₁I + θ₂W̄ − A‖_F over the two basis matrices.
  const MatrixXd id = MatrixXd::Identity(n, n);
  Eigen::Matrix2d gram;
  gram << static_cast<double>(n), basis.W_bar.trace(), basis.W_bar.trace(), basis.W_bar.squaredNorm();
  const Eigen::Vector2d rhs(a.trace(), (basis.W_bar.array() * a.array()).sum());
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(gram);
  if (lu.rank() < 2) throw DomainError("degenerate_basis", "W_bar is a multiple of the identity");
  const Eigen::Vector2d theta = lu.solve(rhs);

  StructuredTheta s;
  s.W_bar = basis.W_bar;
  s.raw_theta1 = theta(0);
  s.raw_theta2 = theta(1);
  double leak = 1.0 - theta(0);
  if (leak < 1e-6 || leak > 1.0) {
    leak = std::clamp(leak, 1e-6, 1.0);
    s.leak_clamped = true;
  }
  double alpha = theta(1) / leak;
  if (!(alpha > 0.0)) {
    alpha = 1e-12;
    s.alpha_scaled = true;
  }
  const double wnorm = linalg::spectral_norm(basis.W_bar);
  const double kappa = (1.0 - leak) + leak * basis.L_sigma * alpha * wnorm;
  const double target = 1.0 - 1e-6;
  if (kappa > target && wnorm > 0.0) {
    // Solve (1−λ) + λL_σα‖W̄‖ = 1 − 1e-6 for α.
    alpha = (target - (1.0 - leak)) / (leak * basis.L_sigma * wnorm);
    s.alpha_scaled = true;
  }
  s.leak = leak;
  s.alpha = alpha;
  s.theta1 = 1.0 - leak;
  s.theta2 = leak * alpha;
  return s;
}

Certificate structured_certificate(const StructuredTheta& theta, double L_sigma) {
  Certificate c;
  c.method = CertificateMethod::LipschitzC1;
  c.kappa = (1.0 - theta.leak) + theta.leak * L_sigma * theta.alpha * linalg::spectral_norm(theta.W_bar);
  c.margin = 1.0 - c.kappa;
  c.verdict = c.kappa < 1.0 ? Verdict::Pass : Verdict::Fail;
  return c;
}

namespace {

struct SufficientStats {
  MatrixXd gram;     // Σ E[z_t z_tᵀ], z = [x_t; u_t]
  MatrixXd cross;    // Σ E[x_{t+1} z_tᵀ]
  MatrixXd next;     // Σ E[x_{t+1} x_{t+1}ᵀ]
  MatrixXd out_res;  // Σ (y−Cx̂)(·)ᵀ + CPCᵀ
  std::size_t T = 0;
};

SufficientStats collect(const SmoothedPosterior& post, const IoData& data, const MatrixXd& C) {
  const std::size_t T = data.length();
  const Eigen::Index n = post.smoothed_means.front().size();
  const Eigen::Index m = T > 0 ? data.inputs.front().size() : 0;
  const Eigen::Index p = C.rows();
  SufficientStats s{MatrixXd::Zero(n + m, n + m), MatrixXd::Zero(n, n + m), MatrixXd::Zero(n, n),
                    MatrixXd::Zero(p, p), T};
  for (std::size_t t = 0; t < T; ++t) {
    const VectorXd& x = post.smoothed_means[t];
    const VectorXd& x1 = post.smoothed_means[t + 1];
    const VectorXd& u = data.inputs[t];
    s.gram.topLeftCorner(n, n) += post.smoothed_covs[t] + x * x.transpose();
    s.gram.topRightCorner(n, m) += x * u.transpose();
    s.gram.bottomRightCorner(m, m) += u * u.transpose();
    s.cross.leftCols(n) += post.cross_covs[t].transpose() + x1 * x.transpose();
    s.cross.rightCols(m) += x1 * u.transpose();
    s.next += post.smoothed_covs[t + 1] + x1 * x1.transpose();
    const VectorXd r = data.outputs[t] - C * x1;
    s.out_res += r * r.transpose() + C * post.smoothed_covs[t + 1] * C.transpose();
  }
  s.gram.bottomLeftCorner(m, n) = s.gram.topRightCorner(n, m).transpose();
  return s;
}

}  // namespace

EmStepResult em_step(const LtiModel& lti, const NoiseModel& noise, const GaussianBelief& prior, const IoData& data,
                     const std::optional<StructureBasis>& structure) {
  if (data.length() < 2) throw DomainError("insufficient_data", "EM needs at least two time steps");
  const SmoothedPosterior post = rts_smoother(kalman_filter(lti, noise, data, prior));
  const Eigen::Index n = lti.n();
  const Eigen::Index m = lti.m();
  const SufficientStats st = collect(post, data, lti.C);

  EmStepResult out;
  out.loglik = post.loglik;
  out.lti = lti;

  MatrixXd gram = st.gram;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (!(rcond > 1e-14)) {
    const double ridge = 1e-10 * gram.trace() / static_cast<double>(gram.rows());
    gram += ridge * MatrixXd::Identity(gram.rows(), gram.cols());
    ldlt.compute(gram);
    out.gram_ridge_applied = true;
    std::cerr << "warning: singular EM Gram matrix; ridge " << ridge << " added\n";
  }
  // [A B] = Σ E[x_{t+1}zᵀ] (Σ E[zzᵀ])⁻¹
  MatrixXd ab = ldlt.solve(st.cross.transpose()).transpose();

  if (structure) {
    StructuredTheta theta = project_structured(ab.leftCols(n), *structure);
    const MatrixXd a = theta.A();
    // B conditional on the projected A.
    if (m > 0) {
      const MatrixXd guu = gram.bottomRightCorner(m, m);
      const MatrixXd rhs = st.cross.rightCols(m) - a * gram.topRightCorner(n, m);
      ab.rightCols(m) = guu.ldlt().solve(rhs.transpose()).transpose();
    }
    ab.leftCols(n) = a;
    out.theta = std::move(theta);
    out.constrained_step = true;
  }
  out.lti.A = ab.leftCols(n);
  out.lti.B = ab.rightCols(m);

  // Expected residual forms, valid for any (A, B):
  // Q = (1/T) Σ E[(x_{t+1} − Ax_t − Bu_t)(·)ᵀ].
  const double T = static_cast<double>(st.T);
  MatrixXd q = (st.next - ab * st.cross.transpose() - st.cross * ab.transpose() + ab * st.gram * ab.transpose()) / T;
  MatrixXd r = st.out_res / T;
  out.jitter_events += linalg::floor_eigenvalues(q, kJitter);
  out.jitter_events += linalg::floor_eigenvalues(r, kJitter);
  out.noise = {std::move(q), std::move(r)};
  return out;
}

EmRunResult em_run(const LtiModel& init, const NoiseModel& init_noise, const GaussianBelief& prior,
                   const IoData& data, const std::optional<StructureBasis>& structure, int max_iters,
                   double rel_tol) {
  if (max_iters < 1) throw DomainError("invalid_argument", "max_iters must be >= 1");
  EmRunResult res;
  res.lti = init;
  res.noise = init_noise;
  for (int it = 0; it < max_iters; ++it) {
    EmStepResult step = em_step(res.lti, res.noise, prior, data, structure);
    res.jitter_events += step.jitter_events;
    if (!res.loglik_trace.empty()) {
      const double prev = res.loglik_trace.back();
      const double change = step.loglik - prev;
      if (change < -1e-9) {
        if (!structure)
          throw DomainError("em_loglik_decrease", "EM log-likelihood decreased by " + std::to_string(-change) +
                                                      " at iteration " + std::to_string(it));
        ++res.constrained_decreases;
      }
      res.loglik_trace.push_back(step.loglik);
      if (std::abs(change) < rel_tol * std::abs(prev)) {
        res.converged = true;
        res.iterations = it;
        return res;  // parameters that produced the last loglik
      }
    } else {
      res.loglik_trace.push_back(step.loglik);
    }
    res.lti = std::move(step.lti);
    res.noise = std::move(step.noise);
    res.theta = std::move(step.theta);
    res.iterations = it + 1;
  }
  res.loglik_trace.push_back(kalman_filter(res.lti, res.noise, data, prior).loglik);
  const std::size_t k = res.loglik_trace.size();
  if (!structure && res.loglik_trace[k - 1] - res.loglik_trace[k - 2] < -1e-9)
    throw DomainError("em_loglik_decrease", "EM log-likelihood decreased on the final step");
  return res;
}

namespace {

struct Moments {
  MatrixXd sxx;  // Σ X̂_t (centered when requested)
  MatrixXd syx;  // Σ y x̂ᵀ
  VectorXd x_mean, y_mean;
};

Moments readout_moments(const std::vector<VectorXd>& states, const std::vector<MatrixXd>& covs,
                        const std::vector<VectorXd>& outputs, bool center) {
  if (states.empty() || states.size() != outputs.size())
    throw DomainError("length_mismatch", "readout needs equal, non-empty state and output sequences");
  if (!covs.empty() && covs.size() != states.size())
    throw DomainError("length_mismatch", "state covariances must match the state sequence");
  const Eigen::Index n = states.front().size();
  const Eigen::Index p = outputs.front().size();
  const double count = static_cast<double>(states.size());
  Moments mo{MatrixXd::Zero(n, n), MatrixXd::Zero(p, n), VectorXd::Zero(n), VectorXd::Zero(p)};
  if (center) {
    for (std::size_t t = 0; t < states.size(); ++t) {
      mo.x_mean += states[t];
      mo.y_mean += outputs[t];
    }
    mo.x_mean /= count;
    mo.y_mean /= count;
  }
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (states[t].size() != n || outputs[t].size() != p)
      throw DomainError("dimension_mismatch", "inconsistent state or output dimension at t = " + std::to_string(t));
    const VectorXd x = states[t] - mo.x_mean;
    const VectorXd y = outputs[t] - mo.y_mean;
    mo.sxx += x * x.transpose();
    if (!covs.empty()) mo.sxx += covs[t];
    mo.syx += y * x.transpose();
  }
  return mo;
}

}  // namespace

Readout readout_ml(const std::vector<VectorXd>& states, const std::vector<MatrixXd>& covs,
                   const std::vector<VectorXd>& outputs, double ridge, bool center) {
  if (!(ridge >= 0.0)) throw DomainError("invalid_argument", "ridge must be >= 0");
  const Moments mo = readout_moments(states, covs, outputs, center);
  const Eigen::Index n = mo.sxx.rows();
  const MatrixXd gram = mo.sxx + ridge * MatrixXd::Identity(n, n);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev(0) > 1e-14 * std::max(ev(n - 1), 1e-300)))
    throw DomainError("singular_gram", "readout Gram matrix is singular; use ridge > 0");
  Eigen::LDLT<MatrixXd> ldlt(gram);
  Readout r;
  r.C = ldlt.solve(mo.syx.transpose()).transpose();
  r.d = mo.y_mean - r.C * mo.x_mean;
  return r;
}

MatrixXd BayesReadout::entry_variance() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_s(state_moment);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_r(R_inv);
  const MatrixXd& vs = es_s.eigenvectors();
  const MatrixXd& vr = es_r.eigenvectors();
  const VectorXd& ds = es_s.eigenvalues();
  const VectorXd& dr = es_r.eigenvalues();
  // Λ_C = (V_s ⊗ V_r)(τ + d_s ⊗ d_r)(V_s ⊗ V_r)ᵀ
  MatrixXd inv_eig(dr.size(), ds.size());
  for (Eigen::Index a = 0; a < ds.size(); ++a)
    for (Eigen::Index b = 0; b < dr.size(); ++b) inv_eig(b, a) = 1.0 / (prior_precision + ds(a) * dr(b));
  const MatrixXd vr2 = vr.array().square().matrix();
  const MatrixXd vs2 = vs.array().square().matrix();
  return vr2 * inv_eig * vs2.transpose();
}

MatrixXd BayesReadout::dense_precision() const {
  const Eigen::Index n = state_moment.rows();
  const Eigen::Index p = R_inv.rows();
  if (n * p > 10000) throw DomainError("too_large", "refusing to densify a precision with p*n > 1e4");
  MatrixXd lam = prior_precision * MatrixXd::Identity(n * p, n * p);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l < n; ++l) lam.block(j * p, l * p, p, p) += state_moment(j, l) * R_inv;
  return lam;
}

BayesReadout readout_bayes(const std::vector<VectorXd>& states, const std::vector<MatrixXd>& covs,
                           const std::vector<VectorXd>& outputs, double prior_precision, const MatrixXd& R,
                           bool center) {
  if (!(prior_precision > 0.0)) throw DomainError("invalid_argument", "prior precision must be positive");
  const Moments mo = readout_moments(states, covs, outputs, center);
  const Eigen::Index p = mo.syx.rows();
  if (R.rows() != p || R.cols() != p) throw DomainError("dimension_mismatch", "R must be p x p");
  Eigen::LLT<MatrixXd> llt(linalg::symmetrize(R));
  if (llt.info() != Eigen::Success) throw DomainError("not_positive_definite", "R must be positive definite");
  BayesReadout out;
  out.R_inv = llt.solve(MatrixXd::Identity(p, p));
  out.state_moment = mo.sxx;
  out.prior_precision = prior_precision;

  // vec(Ĉ) = Λ_C⁻¹ vec(R⁻¹ Σ y x̂ᵀ), solved in the joint eigenbasis.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_s(mo.sxx);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_r(out.R_inv);
  const MatrixXd g = es_r.eigenvectors().transpose() * (out.R_inv * mo.syx) * es_s.eigenvectors();
  MatrixXd scaled = g;
  for (Eigen::Index a = 0; a < g.cols(); ++a)
    for (Eigen::Index b = 0; b < g.rows(); ++b)
      scaled(b, a) = g(b, a) / (prior_precision + es_s.eigenvalues()(a) * es_r.eigenvalues()(b));
  out.mean.C = es_r.eigenvectors() * scaled * es_s.eigenvectors().transpose();
  out.mean.d = mo.y_mean - out.mean.C * mo.x_mean;
  return out;
}

double excitation_level(const std::vector<VectorXd>& inputs, int depth) {
  if (depth < 1) throw DomainError("invalid_argument", "excitation depth must be >= 1");
  if (inputs.size() < static_cast<std::size_t>(depth))
    throw DomainError("insufficient_data", "too few inputs for the excitation test");
  const Eigen::Index m = inputs.front().size();
  const auto cols = static_cast<Eigen::Index>(inputs.size()) - depth + 1;
  MatrixXd toeplitz(m * depth, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (int k = 0; k < depth; ++k)
      toeplitz.block(k * m, c, m, 1) = inputs[static_cast<std::size_t>(c + depth - 1 - k)];
  toeplitz /= std::sqrt(static_cast<double>(cols));
  Eigen::JacobiSVD<MatrixXd> svd(toeplitz);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

std::vector<MatrixXd> estimate_markov(const IoData& data, std::size_t length) {
  if (length < 1) throw DomainError("invalid_argument", "Markov length must be >= 1");
  if (data.inputs.size() != data.outputs.size() || data.inputs.empty())
    throw DomainError("length_mismatch", "I/O data must be non-empty with equal lengths");
  const Eigen::Index m = data.inputs.front().size();
  const Eigen::Index p = data.outputs.front().size();
  const std::size_t T = data.length();
  if (T < length + static_cast<std::size_t>(m) * length)
    throw DomainError("insufficient_data", "too few samples to estimate the Markov parameters");
  // outputs[t] = Σ_k h_k inputs[t−k]; rows t ≥ L−1 avoid the unknown
  // initial-state transient only when x_0 = 0, which is assumed.
  const auto rows = static_cast<Eigen::Index>(T);
  const auto cols = static_cast<Eigen::Index>(length) * m;
  MatrixXd reg = MatrixXd::Zero(rows, cols);
  MatrixXd target(rows, p);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (std::size_t k = 0; k < length && static_cast<Eigen::Index>(k) <= t; ++k)
      reg.block(t, static_cast<Eigen::Index>(k) * m, 1, m) =
          data.inputs[static_cast<std::size_t>(t) - k].transpose();
    target.row(t) = data.outputs[static_cast<std::size_t>(t)].transpose();
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(reg);
  if (qr.rank() < cols) throw DomainError("rank_deficient", "input regressor is rank deficient");
  const MatrixXd coef = qr.solve(target);  // (L·m) × p
  std::vector<MatrixXd> h;
  h.reserve(length);
  for (std::size_t k = 0; k < length; ++k)
    h.push_back(coef.middleRows(static_cast<Eigen::Index>(k) * m, m).transpose());
  return h;
}

SubspaceResult subspace_shape_from_markov(const std::vector<MatrixXd>& markov, const SubspaceOptions& opts,
                                          const StructureBasis& basis) {
  const int r = opts.order;
  if (r < 1) throw DomainError("invalid_argument", "model order must be >= 1");
  if (basis.W_bar.rows() != r) throw DomainError("dimension_mismatch", "W_bar must be r x r");
  if (markov.size() < 3) throw DomainError("insufficient_data", "need at least 3 Markov parameters");
  const Eigen::Index p = markov.front().rows();
  const Eigen::Index m = markov.front().cols();
  // Block Hankel with s block rows/cols uses h_0..h_{2s−1}; the shifted
  // Hankel one more.
  const std::size_t s = (markov.size() - 1) / 2;
  if (static_cast<Eigen::Index>(s) * std::min(p, m) < r)
    throw DomainError("insufficient_data", "too few Markov parameters for the requested order");
  const auto S = static_cast<Eigen::Index>(s);
  MatrixXd hankel(S * p, S * m), shifted(S * p, S * m);
  for (Eigen::Index i = 0; i < S; ++i)
    for (Eigen::Index j = 0; j < S; ++j) {
      hankel.block(i * p, j * m, p, m) = markov[static_cast<std::size_t>(i + j)];
      shifted.block(i * p, j * m, p, m) = markov[static_cast<std::size_t>(i + j + 1)];
    }
  Eigen::JacobiSVD<MatrixXd> svd(hankel, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) >= 1e-8 * sv(0) && sv(i) >= opts.singular_floor && sv(i) > 0.0) ++rank;
  if (rank < r)
    throw DomainError("hankel_rank", "Hankel rank " + std::to_string(rank) + " is below the order " +
                                         std::to_string(r));
  const MatrixXd u = svd.matrixU().leftCols(r);
  const MatrixXd v = svd.matrixV().leftCols(r);
  const VectorXd root = sv.head(r).cwiseSqrt();
  const VectorXd inv_root = root.cwiseInverse();
  const MatrixXd obs = u * root.asDiagonal();                 // extended observability
  const MatrixXd ctr = root.asDiagonal() * v.transpose();     // extended controllability

  SubspaceResult res;
  res.hankel_singular_values = sv;
  res.markov_used = 2 * s;
  res.A_ssi = inv_root.asDiagonal() * u.transpose() * shifted * v * inv_root.asDiagonal();
  res.B_ssi = ctr.leftCols(m);
  res.C_ssi = obs.topRows(p);
  res.theta = project_structured(res.A_ssi, basis);
  res.certificate = structured_certificate(res.theta, basis.L_sigma);
  return res;
}

SubspaceResult subspace_shape(const IoData& data, const SubspaceOptions& opts, const StructureBasis& basis) {
  if (data.inputs.empty()) throw DomainError("insufficient_data", "no input data");
  const double level = excitation_level(data.inputs, opts.order);
  if (!(level > 1e-8))
    throw DomainError("not_persistently_exciting",
                      "inputs are not persistently exciting of order " + std::to_string(opts.order) +
                          " (smallest singular value " + std::to_string(level) + ")");
  const std::size_t length = opts.markov_length > 0 ? opts.markov_length
                                                    : static_cast<std::size_t>(std::max(2 * opts.order + 2, 20));
  return subspace_shape_from_markov(estimate_markov(data, length), opts, basis);
}

}  // namespace esnssm
