// Copyright 2026 The irrcorr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Information projection onto the exponential family with interactions of
// weight <= m, solved through its convex dual
//
//     F(theta) = ln Tr exp(sum_a theta_a O_a) - sum_a theta_a t_a,
//
// whose gradient is the moment mismatch Tr(O_a sigma(theta)) - t_a. A damped
// Newton iteration (exact spectral Hessian, Cholesky with Levenberg
// fallback) handles index sets up to 200 entries; larger sets use matrix-free
// Newton-CG with exact Hessian-vector products. The contract is the
// residual, not the path.

#pragma once

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "irrcorr/errors.hpp"
#include "irrcorr/matrix.hpp"
#include "irrcorr/pauli.hpp"

namespace irrcorr {

/// One information-projection instance: match all moments of weight <= level
/// while ln(sigma) carries no heavier terms (structural in this
/// parametrization).
struct ProjectionProblem {
  SystemShape shape;
  int level = 1;
  MomentVector targets;
  double tolerance = 1e-9;
  int max_iterations = 500;
  double theta_cap = 60.0;
};

/// Free coefficients theta_a = <O_a|ln sigma> over 1 <= wt(a) <= level; the
/// identity coefficient is implicit as -lnZ.
struct ThetaVector {
  int level = 0;
  std::map<MultiIndex, double> values;
};

struct SolverReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  double theta_norm = 0.0;
  bool boundary_flag = false;  // diverging toward a rank-deficient limit
  double wall_time_s = 0.0;
};

struct ProjectionResult {
  DensityMatrix state;
  ThetaVector theta;
  double ln_z = 0.0;
  SolverReport report;
};

/// Residuals of the two certificate equation sets at a candidate solution:
/// r7 = heaviest log coefficient beyond the level, r8 = worst moment
/// mismatch at or below it.
struct CertificateReport {
  double r7 = 0.0;
  double r8 = 0.0;
  bool pass = false;
};

namespace detail {

inline constexpr int kNewtonMaxIndices = 200;
inline constexpr double kArmijoSlope = 1e-4;
inline constexpr double kArmijoShrink = 0.5;
inline constexpr double kLevenbergMin = 1e-10;

struct DualWorkspace {
  PauliSet set;
  Vector targets;
};

inline DualWorkspace make_workspace(const ProjectionProblem& problem) {
  if (problem.level < 1 || problem.level > problem.shape.n - 1) {
    throw ValidationError("projection level " + std::to_string(problem.level) +
                          " outside [1, n-1]");
  }
  if (!(problem.tolerance > 0.0)) {
    throw ValidationError("projection tolerance must be positive");
  }
  if (!(problem.theta_cap > 0.0)) {
    throw ValidationError("theta cap must be positive");
  }
  if (problem.targets.level != problem.level) {
    throw ValidationError("targets are at level " +
                          std::to_string(problem.targets.level) +
                          ", problem at level " +
                          std::to_string(problem.level));
  }
  PauliSet set(problem.shape, problem.level);
  Vector t = set.pack_exact(problem.targets.entries);
  if (t.size() > 0 && t.cwiseAbs().maxCoeff() > 1.0 + 1e-9) {
    throw ValidationError("target moment outside [-1, 1]");
  }
  return {std::move(set), std::move(t)};
}

/// Everything the solver needs at one theta: the dual value, gradient, and
/// the spectral data of H(theta) for the Hessian and the final state.
struct DualEval {
  double value = 0.0;
  double ln_z = 0.0;
  Vector sigma_moments;
  Vector grad;
  Vector lambda;   // eigenvalues of H(theta), ascending
  Matrix basis;    // eigenvectors
  Vector weights;  // Gibbs eigenvalues, normalized
};

inline DualEval eval_dual(const DualWorkspace& ws,
                          const Eigen::Ref<const Vector>& theta) {
  DualEval out;
  const Matrix h = ws.set.synthesize(theta);
  SpectralDecomposition sd = eig_hermitian(h);
  const double top = sd.eigenvalues.maxCoeff();
  if (top - sd.eigenvalues.minCoeff() > tol::kSpreadGuard) {
    throw OverflowGuard("dual evaluation: eigenvalue spread exceeds guard");
  }
  Vector w = (sd.eigenvalues.array() - top).exp().matrix();
  const double z_shifted = w.sum();
  out.ln_z = top + std::log(z_shifted);
  w /= z_shifted;
  w /= w.sum();
  const Matrix sigma =
      sd.eigenvectors * w.asDiagonal() * sd.eigenvectors.adjoint();
  out.sigma_moments = ws.set.moments(sigma, 1e-9);
  out.grad = out.sigma_moments - ws.targets;
  out.value = out.ln_z - theta.dot(ws.targets);
  out.lambda = std::move(sd.eigenvalues);
  out.basis = std::move(sd.eigenvectors);
  out.weights = std::move(w);
  return out;
}

/// O_a * U computed row-wise from the signed-permutation form.
inline Matrix apply_pauli_left(const PauliAction& act, const Matrix& u) {
  const Eigen::Index d = u.rows();
  Matrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto ju = static_cast<std::uint32_t>(j);
    const double s = parity_sign(ju & act.sign_mask);
    out.row(j) =
        (act.phase * s) * u.row(static_cast<Eigen::Index>(ju ^ act.flip_mask));
  }
  return out;
}

/// Loewner (divided-difference) matrix of the normalized Gibbs weights:
/// Phi_ij = (w_i - w_j)/(lambda_i - lambda_j), Phi_ii = w_i. Near-degenerate
/// pairs use sqrt(w_i w_j) * sinh(h)/h with h = (lambda_i - lambda_j)/2,
/// which is exact in the limit; the direct quotient is stable once the gap
/// is large. All entries are positive.
inline Eigen::MatrixXd gibbs_divided_differences(const Vector& lambda,
                                                 const Vector& weights) {
  const Eigen::Index d = lambda.size();
  Eigen::MatrixXd phi(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    phi(i, i) = weights[i];
    for (Eigen::Index j = 0; j < i; ++j) {
      const double gap = lambda[i] - lambda[j];
      double value;
      if (std::abs(gap) > 1e-4) {
        value = (weights[i] - weights[j]) / gap;
      } else {
        const double h = 0.5 * gap;
        const double sinhc = 1.0 + h * h / 6.0 * (1.0 + h * h / 20.0);
        value = std::sqrt(weights[i] * weights[j]) * sinhc;
      }
      phi(i, j) = value;
      phi(j, i) = value;
    }
  }
  return phi;
}

/// Exact dual Hessian via the Daleckii-Krein derivative of the matrix
/// exponential: with H = U diag(lambda) U^dag,
///   Hess_ab = Tr(O_a D exp(H)[O_b])/Z - s_a s_b
///           = sum_ij (A_a)_ij conj((A_b)_ij) Phi_ij - s_a s_b,
/// where A_a = U^dag O_a U. Assembled as one Gram product with sqrt(Phi)
/// folded into the rows.
inline Eigen::MatrixXd dense_hessian(const DualWorkspace& ws,
                                     const DualEval& eval) {
  const Eigen::Index k = ws.set.size();
  const Eigen::Index d = eval.basis.rows();
  const Eigen::MatrixXd sqrt_phi =
      gibbs_divided_differences(eval.lambda, eval.weights).cwiseSqrt();
  Matrix gram_rows(k, d * d);
  for (Eigen::Index a = 0; a < k; ++a) {
    Matrix conjugated = eval.basis.adjoint() *
                        apply_pauli_left(ws.set.action(a), eval.basis);
    conjugated.array() *= sqrt_phi.array();
    gram_rows.row(a) = Eigen::Map<const Eigen::VectorXcd>(
                           conjugated.data(), d * d)
                           .transpose();
  }
  Eigen::MatrixXd hess = (gram_rows * gram_rows.adjoint()).real();
  hess.noalias() -= eval.sigma_moments * eval.sigma_moments.transpose();
  hess = 0.5 * (hess + hess.transpose().eval());
  return hess;
}

/// Newton direction with Levenberg damping: solve (H + mu I) p = -g,
/// escalating mu on Cholesky failure or loss of descent.
inline Vector newton_direction(const Eigen::MatrixXd& hess, const Vector& grad) {
  double mu = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Eigen::MatrixXd damped = hess;
    if (mu > 0.0) damped.diagonal().array() += mu;
    Eigen::LLT<Eigen::MatrixXd> llt(damped);
    if (llt.info() == Eigen::Success) {
      Vector p = llt.solve(-grad);
      if (grad.dot(p) < 0.0 && p.allFinite()) return p;
    }
    mu = std::max(kLevenbergMin, mu * 10.0);
  }
  return -grad;  // steepest descent as a last resort
}

/// Matrix-free application of the dual Hessian, for index sets too large to
/// assemble densely. Reuses the Daleckii-Krein structure: with
/// V = sum_b v_b O_b,
///   (H v)_a = Tr(O_a U (Phi . (U^dag V U)) U^dag) - s_a (s . v),
/// four small GEMMs plus one moment extraction per product.
struct HessianOperator {
  const DualWorkspace& ws;
  const DualEval& eval;
  Eigen::MatrixXd phi;

  HessianOperator(const DualWorkspace& workspace, const DualEval& point)
      : ws(workspace),
        eval(point),
        phi(gibbs_divided_differences(point.lambda, point.weights)) {}

  Vector apply(const Vector& v) const {
    const Matrix big = ws.set.synthesize(v);
    Matrix w = eval.basis.adjoint() * big * eval.basis;
    w.array() *= phi.array();
    const Matrix back = eval.basis * w * eval.basis.adjoint();
    // Hermitian by construction; the imag tolerance only needs to scale
    // with the direction's magnitude.
    const double imag_tol = 1e-8 * std::max(1.0, v.cwiseAbs().sum());
    Vector out = ws.set.moments(back, imag_tol);
    out.noalias() -= eval.sigma_moments * eval.sigma_moments.dot(v);
    return out;
  }
};

/// Inexact Newton direction by conjugate gradients on (H + mu I) p = -g,
/// with an Eisenstat-Walker style forcing term for superlinear outer
/// convergence. H is PSD, so CG is well defined; mu is a tiny floor.
inline Vector newton_cg_direction(const DualWorkspace& ws,
                                  const DualEval& eval, const Vector& grad) {
  const HessianOperator hessian(ws, eval);
  const double mu = 1e-12;
  const double gnorm = grad.norm();
  const double eta = std::min(0.5, std::sqrt(gnorm));

  Vector x = Vector::Zero(grad.size());
  Vector r = grad;  // residual of Hx = -g is -g - Hx; track the negation
  Vector d = -r;
  double rs = r.squaredNorm();
  const int max_cg = static_cast<int>(4 * grad.size());
  for (int it = 0; it < max_cg; ++it) {
    Vector hd = hessian.apply(d) + mu * d;
    const double curvature = d.dot(hd);
    if (curvature <= 0.0) break;  // numerically indefinite: stop with best x
    const double alpha = rs / curvature;
    x += alpha * d;
    r += alpha * hd;
    const double rs_new = r.squaredNorm();
    if (std::sqrt(rs_new) <= eta * gnorm) break;
    d = -r + (rs_new / rs) * d;
    rs = rs_new;
  }
  if (grad.dot(x) >= 0.0) return -grad;  // safeguard: keep a descent direction
  return x;
}

}  // namespace detail

/// Dual value and gradient at theta. The gradient entry for index a is
/// Tr(O_a sigma(theta)) - t_a, i.e. the moment mismatch on the natural
/// [-1, 1] scale.
inline std::pair<double, std::map<MultiIndex, double>> dual_objective_grad(
    const ThetaVector& theta, const ProjectionProblem& problem) {
  const detail::DualWorkspace ws = detail::make_workspace(problem);
  if (theta.level != problem.level && !theta.values.empty()) {
    throw ValidationError("theta level does not match the problem");
  }
  const Vector packed = ws.set.pack(theta.values);
  const detail::DualEval eval = detail::eval_dual(ws, packed);
  return {eval.value, ws.set.unpack(eval.grad)};
}

/// Exact dual Hessian over the problem's index set (ascending code order).
/// Symmetric positive semidefinite up to roundoff.
inline Eigen::MatrixXd hessian(const ThetaVector& theta,
                               const ProjectionProblem& problem) {
  const detail::DualWorkspace ws = detail::make_workspace(problem);
  if (theta.level != problem.level && !theta.values.empty()) {
    throw ValidationError("theta level does not match the problem");
  }
  const Vector packed = ws.set.pack(theta.values);
  const detail::DualEval eval = detail::eval_dual(ws, packed);
  return detail::dense_hessian(ws, eval);
}

/// Minimize the dual from `theta_init` (zero vector allowed). On
/// convergence the returned state matches every target moment within
/// problem.tolerance in max norm, and its logarithm carries no terms above
/// the level by construction. Iteration stops early with boundary_flag when
/// ||theta||_inf exceeds theta_cap, signalling a projection target in the
/// closure of the family; the best iterate is returned.
inline ProjectionResult solve_projection(const ProjectionProblem& problem,
                                         const ThetaVector& theta_init = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  const detail::DualWorkspace ws = detail::make_workspace(problem);
  if (!theta_init.values.empty() && theta_init.level != problem.level) {
    throw ValidationError("theta_init level does not match the problem");
  }
  Vector theta = ws.set.pack(theta_init.values);
  const Eigen::Index k = ws.set.size();
  const bool use_newton = k <= detail::kNewtonMaxIndices;

  detail::DualEval eval = detail::eval_dual(ws, theta);

  SolverReport report;
  bool stalled = false;
  while (true) {
    report.final_residual = eval.grad.size() == 0
                                ? 0.0
                                : eval.grad.cwiseAbs().maxCoeff();
    report.theta_norm = theta.size() == 0 ? 0.0 : theta.cwiseAbs().maxCoeff();
    if (report.final_residual <= problem.tolerance) {
      report.converged = true;
      break;
    }
    if (report.theta_norm > problem.theta_cap) {
      report.boundary_flag = true;
      break;
    }
    if (report.iterations >= problem.max_iterations || stalled) break;

    const Vector direction =
        use_newton
            ? detail::newton_direction(detail::dense_hessian(ws, eval),
                                       eval.grad)
            : detail::newton_cg_direction(ws, eval, eval.grad);
    const double slope = eval.grad.dot(direction);

    // Armijo backtracking; overflowing trial points count as +infinity.
    // Near the optimum the attainable dual decrease (~residual^2) drops
    // below the floating-point resolution of F, so a step is also accepted
    // when it contracts the residual by 10%.
    double alpha = 1.0;
    std::optional<detail::DualEval> accepted;
    Vector trial;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      trial = theta + alpha * direction;
      try {
        detail::DualEval next = detail::eval_dual(ws, trial);
        const bool armijo =
            next.value <= eval.value + detail::kArmijoSlope * alpha * slope;
        const bool contracting =
            next.grad.cwiseAbs().maxCoeff() <= 0.9 * report.final_residual;
        if (armijo || contracting) {
          accepted = std::move(next);
          break;
        }
      } catch (const OverflowGuard&) {
        // fall through and shrink
      }
      alpha *= detail::kArmijoShrink;
    }
    if (!accepted.has_value()) {
      stalled = true;
      continue;
    }

    theta = std::move(trial);
    eval = *std::move(accepted);
    ++report.iterations;
  }

  report.wall_time_s =
      std::chrono::duration<double>(Clock::now() - start).count();

  ProjectionResult result{
      DensityMatrix::from_eigensystem(eval.basis, eval.weights, problem.shape),
      ThetaVector{problem.level, ws.set.unpack(theta)}, eval.ln_z, report};
  return result;
}

/// Direct verification of both certificate equation sets at a candidate
/// solution. `full_targets` must hold the original state's moments for every
/// index of weight <= the solution's level (a level-n moment vector works).
/// Passes iff both residuals are at most 10x the solver tolerance.
inline CertificateReport certify(const ProjectionResult& result,
                                 const MomentVector& full_targets,
                                 double tolerance = 1e-9) {
  const int m = result.theta.level;
  CertificateReport report;
  const auto coefficients = log_coefficients(result.state);
  for (const auto& [index, value] : coefficients) {
    if (index.weight() > m) {
      report.r7 = std::max(report.r7, std::abs(value));
    }
  }
  Eigen::Index covered = 0;
  for (const auto& [index, target] : full_targets.entries) {
    if (index.weight() > m) continue;
    ++covered;
    report.r8 = std::max(
        report.r8, std::abs(pauli_moment(result.state, index) - target));
  }
  const auto expected = static_cast<Eigen::Index>(
      indices_up_to_weight(result.state.shape(), m).size());
  if (covered != expected) {
    throw ValidationError("certify: full_targets covers " +
                          std::to_string(covered) + " of " +
                          std::to_string(expected) +
                          " indices at weight <= level");
  }
  report.pass = report.r7 <= 10.0 * tolerance && report.r8 <= 10.0 * tolerance;
  return report;
}

}  // namespace irrcorr
