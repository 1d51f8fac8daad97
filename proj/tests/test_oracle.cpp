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

#include "irrcorr/oracle.hpp"
#include "irrcorr/states.hpp"
#include "test_helpers.hpp"

using namespace irrcorr;
namespace th = irrcorr::testing;

namespace {

JointDistribution random_positive_distribution(int bits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Vector p(Eigen::Index{1} << bits);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = unif(rng);
  p /= p.sum();
  return JointDistribution(bits, std::move(p));
}

// independent marginal computation (the test's own path)
Vector slow_marginal(const Vector& p, int bits, std::uint32_t mask) {
  const int m = std::popcount(mask);
  Vector out = Vector::Zero(Eigen::Index{1} << m);
  for (Eigen::Index x = 0; x < p.size(); ++x) {
    std::uint32_t key = 0;
    int pos = 0;
    for (int b = 0; b < bits; ++b) {
      if (!(mask & (1u << b))) continue;
      key |= ((static_cast<std::uint32_t>(x) >> b) & 1u) << pos;
      ++pos;
    }
    out[key] += p[x];
  }
  return out;
}

double marginal_mismatch(const JointDistribution& a, const JointDistribution& b,
                         int level) {
  double worst = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << a.bits); ++mask) {
    if (std::popcount(mask) != level) continue;
    worst = std::max(worst,
                     (slow_marginal(a.probabilities, a.bits, mask) -
                      slow_marginal(b.probabilities, b.bits, mask))
                         .cwiseAbs()
                         .maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("joint distribution validation") {
  CHECK_THROWS_AS(JointDistribution(2, Vector::Constant(3, 1.0 / 3)),
                  ValidationError);
  Vector neg = Vector::Constant(4, 0.5);
  neg[0] = -0.5;
  CHECK_THROWS_AS(JointDistribution(2, neg), ValidationError);
  Vector off = Vector::Constant(4, 0.3);
  CHECK_THROWS_AS(JointDistribution(2, off), ValidationError);
}

TEST_CASE("diagonal embedding and extraction are mutually inverse") {
  const JointDistribution uniform(3, Vector::Constant(8, 0.125));
  CHECK(th::max_abs_diff(diagonal_embedding(uniform).mat(),
                         Matrix::Identity(8, 8) * 0.125) < 1e-15);

  const JointDistribution p = random_positive_distribution(3, 5);
  const JointDistribution back = diagonal_extraction(diagonal_embedding(p));
  CHECK((back.probabilities - p.probabilities).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(diagonal_extraction(ghz(2)), NotDiagonal);
}

TEST_CASE("ipf fixed points") {
  // product distribution at level 1 is its own projection
  Vector pa(2), pb(2), pc(2);
  pa << 0.3, 0.7;
  pb << 0.6, 0.4;
  pc << 0.25, 0.75;
  Vector prod(8);
  for (int x = 0; x < 8; ++x) {
    prod[x] = pa[x & 1] * pb[(x >> 1) & 1] * pc[(x >> 2) & 1];
  }
  const JointDistribution p(3, prod);
  const JointDistribution fit = ipf_maxent(p, 1);
  CHECK((fit.probabilities - p.probabilities).cwiseAbs().maxCoeff() < 1e-7);

  const JointDistribution uniform(3, Vector::Constant(8, 0.125));
  for (int level : {1, 2, 3}) {
    const JointDistribution u = ipf_maxent(uniform, level);
    CHECK((u.probabilities - uniform.probabilities).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("ipf matches every requested marginal") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const JointDistribution p = random_positive_distribution(3, seed);
    for (int level : {1, 2}) {
      const JointDistribution fit = ipf_maxent(p, level);
      // the 1e-9 positivity floor shifts the matched marginals by its weight
      CHECK(marginal_mismatch(fit, p, level) < 5e-9);
      // max-ent property: entropy does not decrease
      const auto entropy = [](const JointDistribution& q) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < q.probabilities.size(); ++i) {
          if (q.probabilities[i] > 0) {
            s -= q.probabilities[i] * std::log2(q.probabilities[i]);
          }
        }
        return s;
      };
      CHECK(entropy(fit) >= entropy(p) - 1e-10);
    }
  }
}

TEST_CASE("mutual information closed forms") {
  std::mt19937_64 rng(19);
  const DensityMatrix product = th::random_product_state(2, rng);
  CHECK(mutual_information_check(product) == Catch::Approx(0.0).margin(1e-10));

  CHECK(mutual_information_check(
            DensityMatrix::maximally_mixed(SystemShape(2))) ==
        Catch::Approx(0.0).margin(1e-12));

  // depolarized Bell pair at p0 = 0.5: eigenvalues {0.625, 0.125 x3}
  const DensityMatrix half = depolarize(ghz(2), 0.5);
  CHECK(vn_entropy(half) == Catch::Approx(1.5487949406953985).margin(1e-12));
  CHECK(mutual_information_check(half) ==
        Catch::Approx(0.45120505930460153).margin(1e-12));

  CHECK_THROWS_AS(mutual_information_check(ghz(3)), ValidationError);
}
