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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "irrcorr/solver.hpp"
#include "irrcorr/states.hpp"
#include "test_helpers.hpp"

using namespace irrcorr;
namespace th = irrcorr::testing;

namespace {

ProjectionProblem make_problem(const DensityMatrix& rho, int level,
                               double tolerance = 1e-9) {
  return ProjectionProblem{rho.shape(), level, moment_vector(rho, level),
                           tolerance, 500, 60.0};
}

ThetaVector random_theta(const ProjectionProblem& problem, std::uint64_t seed,
                         double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-scale, scale);
  ThetaVector out{problem.level, {}};
  for (const auto& a : indices_up_to_weight(problem.shape, problem.level)) {
    out.values.emplace(a, unif(rng));
  }
  return out;
}

double dual_value(const ThetaVector& theta, const ProjectionProblem& problem) {
  return dual_objective_grad(theta, problem).first;
}

}  // namespace

TEST_CASE("dual value and gradient at theta = 0") {
  const DensityMatrix rho = random_full_rank(3, 123);
  const ProjectionProblem problem = make_problem(rho, 2);
  const auto [value, grad] = dual_objective_grad(ThetaVector{}, problem);
  CHECK(value == Catch::Approx(std::log(8.0)).margin(1e-12));
  for (const auto& [a, g] : grad) {
    CHECK(g == Catch::Approx(-problem.targets.entries.at(a)).margin(1e-12));
  }

  // maximally mixed targets: theta = 0 is already optimal
  const ProjectionProblem trivial =
      make_problem(DensityMatrix::maximally_mixed(SystemShape(3)), 2);
  const auto [v0, g0] = dual_objective_grad(ThetaVector{}, trivial);
  (void)v0;
  for (const auto& [a, g] : g0) CHECK(g == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("gradient matches central finite differences") {
  const double step = 1e-5;
  for (const auto& [n, m, seed] :
       {std::tuple{2, 1, 7u}, std::tuple{3, 2, 9u}}) {
    const DensityMatrix rho = random_full_rank(n, seed);
    const ProjectionProblem problem = make_problem(rho, m);
    const ThetaVector theta = random_theta(problem, seed + 50, 0.4);
    const auto [value, grad] = dual_objective_grad(theta, problem);
    (void)value;
    for (const auto& [a, g] : grad) {
      ThetaVector lo = theta, hi = theta;
      lo.values[a] -= step;
      hi.values[a] += step;
      const double fd =
          (dual_value(hi, problem) - dual_value(lo, problem)) / (2 * step);
      CHECK(g == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("hessian at theta = 0 is the identity") {
  const DensityMatrix rho = random_full_rank(2, 31);
  const ProjectionProblem problem = make_problem(rho, 1);
  const Eigen::MatrixXd h = hessian(ThetaVector{}, problem);
  CHECK((h - Eigen::MatrixXd::Identity(h.rows(), h.cols()))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("hessian matches finite differences of the gradient") {
  const double step = 1e-5;
  for (const auto& [n, m, seed] :
       {std::tuple{2, 1, 3u}, std::tuple{3, 2, 4u}}) {
    const DensityMatrix rho = random_full_rank(n, seed);
    const ProjectionProblem problem = make_problem(rho, m);
    const ThetaVector theta = random_theta(problem, seed + 80, 0.3);
    const Eigen::MatrixXd h = hessian(theta, problem);

    const auto indices = indices_up_to_weight(problem.shape, m);
    for (std::size_t col = 0; col < indices.size(); ++col) {
      ThetaVector lo = theta, hi = theta;
      lo.values[indices[col]] -= step;
      hi.values[indices[col]] += step;
      const auto grad_lo = dual_objective_grad(lo, problem).second;
      const auto grad_hi = dual_objective_grad(hi, problem).second;
      for (std::size_t row = 0; row < indices.size(); ++row) {
        const double fd = (grad_hi.at(indices[row]) - grad_lo.at(indices[row])) /
                          (2 * step);
        CHECK(h(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) ==
              Catch::Approx(fd).margin(1e-5));
      }
    }
  }
}

TEST_CASE("hessian is positive semidefinite") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DensityMatrix rho = random_full_rank(3, seed);
    const ProjectionProblem problem = make_problem(rho, 2);
    const ThetaVector theta = random_theta(problem, seed, 0.5);
    const Eigen::MatrixXd h = hessian(theta, problem);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("dual is convex along random chords") {
  const DensityMatrix rho = random_full_rank(3, 77);
  const ProjectionProblem problem = make_problem(rho, 2);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int trial = 0; trial < 10; ++trial) {
    const ThetaVector a = random_theta(problem, 300 + trial, 0.7);
    const ThetaVector b = random_theta(problem, 400 + trial, 0.7);
    const double lambda = unif(rng);
    ThetaVector mid{problem.level, {}};
    for (const auto& [idx, va] : a.values) {
      mid.values.emplace(idx, lambda * va + (1 - lambda) * b.values.at(idx));
    }
    CHECK(dual_value(mid, problem) <=
          lambda * dual_value(a, problem) +
              (1 - lambda) * dual_value(b, problem) + 1e-9);
  }
}

TEST_CASE("projection of a product state at level 1 is itself") {
  std::mt19937_64 rng(55);
  const DensityMatrix product = th::random_product_state(3, rng);
  const ProjectionResult result =
      solve_projection(make_problem(product, 1), ThetaVector{});
  CHECK(result.report.converged);
  CHECK(result.report.final_residual <= 1e-9);
  CHECK(th::max_abs_diff(result.state.mat(), product.mat()) < 1e-7);
}

TEST_CASE("projection of the depolarized Bell pair at level 1 is maximally mixed") {
  const DensityMatrix rho = depolarize(ghz(2), 0.5);
  const ProjectionResult result =
      solve_projection(make_problem(rho, 1), ThetaVector{});
  CHECK(result.report.converged);
  CHECK(th::max_abs_diff(result.state.mat(), Matrix::Identity(4, 4) * 0.25) <
        1e-9);
}

TEST_CASE("GHZ4 level-2 projection converges and certifies") {
  const DensityMatrix rho = depolarize(ghz(4), 0.2);
  const ProjectionProblem problem = make_problem(rho, 2);
  const ProjectionResult result = solve_projection(problem, ThetaVector{});
  CHECK(result.report.converged);
  CHECK(result.report.final_residual <= 1e-9);
  const CertificateReport cert =
      certify(result, moment_vector(rho, 4), problem.tolerance);
  CHECK(cert.pass);
  CHECK(cert.r7 <= 1e-8);
  CHECK(cert.r8 <= 1e-8);
}

TEST_CASE("certify flags perturbed solutions") {
  const DensityMatrix rho = random_full_rank(3, 202);
  const ProjectionProblem problem = make_problem(rho, 2);
  ProjectionResult result = solve_projection(problem, ThetaVector{});
  REQUIRE(result.report.converged);

  // nudge one coefficient and rebuild the state
  ThetaVector bent = result.theta;
  bent.values.begin()->second += 1e-3;
  const auto [state, ln_z] = gibbs_state(synthesize(bent.values, 3));
  ProjectionResult tampered{state, bent, ln_z, result.report};
  const CertificateReport cert =
      certify(tampered, moment_vector(rho, 3), problem.tolerance);
  CHECK_FALSE(cert.pass);
  CHECK(cert.r8 > 1e-4);
}

TEST_CASE("solutions are independent of the initial point") {
  for (std::uint64_t seed : {5u, 6u}) {
    const DensityMatrix rho = random_full_rank(3, seed);
    const ProjectionProblem problem = make_problem(rho, 2);
    const ProjectionResult from_zero =
        solve_projection(problem, ThetaVector{});
    const ProjectionResult from_random =
        solve_projection(problem, random_theta(problem, seed + 7, 0.3));
    REQUIRE(from_zero.report.converged);
    REQUIRE(from_random.report.converged);
    CHECK(th::max_abs_diff(from_zero.state.mat(), from_random.state.mat()) <
          1e-7);
  }
}

TEST_CASE("moment matching implies marginal matching") {
  const DensityMatrix rho = random_full_rank(3, 404);
  const ProjectionResult result =
      solve_projection(make_problem(rho, 2), ThetaVector{});
  REQUIRE(result.report.converged);
  for (const std::vector<int>& keep :
       {std::vector<int>{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}}) {
    CHECK(th::max_abs_diff(partial_trace(result.state, keep).mat(),
                           partial_trace(rho, keep).mat()) < 1e-7);
  }
}

TEST_CASE("Pythagorean identity at solutions") {
  const DensityMatrix rho = random_full_rank(3, 505);
  const ProjectionResult result =
      solve_projection(make_problem(rho, 2), ThetaVector{});
  REQUIRE(result.report.converged);
  const double direct = rel_entropy(rho, result.state);
  const double identity = vn_entropy(result.state) - vn_entropy(rho);
  CHECK(direct == Catch::Approx(identity).margin(1e-6));
}

TEST_CASE("projection is idempotent") {
  const DensityMatrix rho = random_full_rank(3, 606);
  const ProjectionResult first =
      solve_projection(make_problem(rho, 2), ThetaVector{});
  REQUIRE(first.report.converged);
  const ProjectionResult second =
      solve_projection(make_problem(first.state, 2), first.theta);
  REQUIRE(second.report.converged);
  CHECK(th::max_abs_diff(first.state.mat(), second.state.mat()) < 1e-8);
  CHECK(rel_entropy(first.state, second.state) <
        1e-8);  // zero additional correlation
}

TEST_CASE("boundary divergence is detected and flagged") {
  // |00> has <Z_i> = 1: the level-1 family only reaches it in the limit.
  // The optimum sits at theta ~ 11 for this tolerance, so a tighter cap
  // exercises the divergence detector.
  const DensityMatrix frozen = dicke(2, 0);
  ProjectionProblem problem = make_problem(frozen, 1);
  problem.theta_cap = 8.0;
  const ProjectionResult result = solve_projection(problem, ThetaVector{});
  CHECK_FALSE(result.report.converged);
  CHECK(result.report.boundary_flag);
  CHECK(result.report.theta_norm > problem.theta_cap);
}

TEST_CASE("iteration budget is honored") {
  const DensityMatrix rho = depolarize(ghz(4), 0.2);
  ProjectionProblem problem = make_problem(rho, 2);
  problem.max_iterations = 1;
  const ProjectionResult result = solve_projection(problem, ThetaVector{});
  CHECK_FALSE(result.report.converged);
  CHECK(result.report.iterations <= 1);
  CHECK_FALSE(result.report.boundary_flag);
}

TEST_CASE("solver input validation") {
  const DensityMatrix rho = random_full_rank(3, 11);
  ProjectionProblem bad_level = make_problem(rho, 2);
  bad_level.level = 3;  // exceeds n-1 (and no longer matches the targets)
  CHECK_THROWS_AS(solve_projection(bad_level, ThetaVector{}), ValidationError);

  ProjectionProblem missing = make_problem(rho, 2);
  missing.targets.entries.erase(missing.targets.entries.begin());
  CHECK_THROWS_AS(solve_projection(missing, ThetaVector{}), ValidationError);

  ProjectionProblem stray = make_problem(rho, 2);
  ThetaVector wrong{1, {{MultiIndex::from_string("ZII"), 0.1}}};
  CHECK_THROWS_AS(solve_projection(stray, wrong), ValidationError);
}
