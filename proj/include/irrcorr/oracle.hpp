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

// Independent verification tools: classical iterative proportional fitting
// on diagonal states and closed-form identities for small systems. These
// deliberately avoid the projection solver's code path so the two can
// cross-validate each other.

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "irrcorr/errors.hpp"
#include "irrcorr/matrix.hpp"

namespace irrcorr {

/// Joint distribution of n classical bits: 2^n nonnegative probabilities
/// summing to 1.
struct JointDistribution {
  int bits = 0;
  Vector probabilities;

  JointDistribution(int bit_count, Vector p)
      : bits(bit_count), probabilities(std::move(p)) {
    if (bits < 1 || bits > kMaxQubitsHard) {
      throw ValidationError("joint distribution bit count out of range");
    }
    if (probabilities.size() != (Eigen::Index{1} << bits)) {
      throw ValidationError("joint distribution needs 2^n probabilities");
    }
    if (probabilities.minCoeff() < 0.0) {
      throw ValidationError("joint distribution has a negative probability");
    }
    if (std::abs(probabilities.sum() - 1.0) > 1e-12) {
      throw ValidationError("joint distribution sums to " +
                            std::to_string(probabilities.sum()) + ", not 1");
    }
  }
};

/// Distribution -> diagonal density matrix (outcome x at basis state |x>).
inline DensityMatrix diagonal_embedding(const JointDistribution& p) {
  const SystemShape shape(p.bits);
  Matrix m = Matrix::Zero(shape.dim, shape.dim);
  for (Eigen::Index x = 0; x < shape.dim; ++x) {
    m(x, x) = p.probabilities[x];
  }
  return DensityMatrix(std::move(m), shape);
}

/// Diagonal density matrix -> distribution; off-diagonal magnitude above
/// 1e-10 is an error. The diagonal is clipped at zero and renormalized.
inline JointDistribution diagonal_extraction(const DensityMatrix& rho) {
  double off = 0.0;
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    for (Eigen::Index j = 0; j < rho.dim(); ++j) {
      if (i != j) off = std::max(off, std::abs(rho.mat()(i, j)));
    }
  }
  if (off > 1e-10) {
    throw NotDiagonal("diagonal_extraction: off-diagonal magnitude " +
                      std::to_string(off));
  }
  Vector p = rho.mat().diagonal().real().cwiseMax(0.0);
  p /= p.sum();
  return JointDistribution(rho.parties(), std::move(p));
}

namespace detail {

/// Marginal of `p` on the bit subset `mask` (packed ascending by bit).
inline Vector marginal(const Vector& p, int bits, std::uint32_t mask) {
  const int m = std::popcount(mask);
  Vector out = Vector::Zero(Eigen::Index{1} << m);
  for (Eigen::Index x = 0; x < p.size(); ++x) {
    std::uint32_t packed = 0;
    int pos = 0;
    for (int b = 0; b < bits; ++b) {
      if (!(mask & (1u << b))) continue;
      packed |= ((static_cast<std::uint32_t>(x) >> b) & 1u) << pos;
      ++pos;
    }
    out[packed] += p[x];
  }
  return out;
}

inline std::uint32_t project_bits(std::uint32_t x, int bits,
                                  std::uint32_t mask) {
  std::uint32_t packed = 0;
  int pos = 0;
  for (int b = 0; b < bits; ++b) {
    if (!(mask & (1u << b))) continue;
    packed |= ((x >> b) & 1u) << pos;
    ++pos;
  }
  return packed;
}

}  // namespace detail

/// Classical maximum-entropy distribution matching every <= level marginal
/// of `p`, via iterative proportional fitting: cyclically rescale a
/// candidate until the worst size-`level` marginal mismatch is at most
/// `tolerance` (lower-order marginals follow automatically). The input is
/// floored by pre-mixing weight 1e-9 of the uniform distribution, mirroring
/// the quantum continuation's role.
inline JointDistribution ipf_maxent(const JointDistribution& p, int level,
                                    double tolerance = 1e-12) {
  const int n = p.bits;
  if (level < 1 || level > n) {
    throw ValidationError("ipf level outside [1, n]");
  }
  const Eigen::Index d = p.probabilities.size();
  const double floor_weight = 1e-9;
  Vector target = (1.0 - floor_weight) * p.probabilities +
                  Vector::Constant(d, floor_weight / d);

  std::vector<std::uint32_t> subsets;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) == level) subsets.push_back(mask);
  }
  std::vector<Vector> target_marginals;
  target_marginals.reserve(subsets.size());
  for (const std::uint32_t mask : subsets) {
    target_marginals.push_back(detail::marginal(target, n, mask));
  }

  Vector q = Vector::Constant(d, 1.0 / d);
  constexpr int kMaxCycles = 100000;
  for (int cycle = 0; cycle < kMaxCycles; ++cycle) {
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      const std::uint32_t mask = subsets[s];
      const Vector current = detail::marginal(q, n, mask);
      for (Eigen::Index x = 0; x < d; ++x) {
        const std::uint32_t bin =
            detail::project_bits(static_cast<std::uint32_t>(x), n, mask);
        q[x] *= target_marginals[s][bin] / current[bin];
      }
    }
    double worst = 0.0;
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      worst = std::max(worst, (detail::marginal(q, n, subsets[s]) -
                               target_marginals[s])
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    if (worst <= tolerance) {
      q /= q.sum();
      return JointDistribution(n, std::move(q));
    }
  }
  throw ConvergenceFailure("ipf_maxent: marginal mismatch above tolerance "
                           "after 1e5 cycles");
}

/// Mutual information I(A:B) = S(rho_A) + S(rho_B) - S(rho_AB) in bits; the
/// closed form of the two-party total correlation.
inline double mutual_information_check(const DensityMatrix& rho) {
  if (rho.parties() != 2) {
    throw ValidationError("mutual_information_check needs a 2-party state");
  }
  return vn_entropy(partial_trace(rho, {0})) +
         vn_entropy(partial_trace(rho, {1})) - vn_entropy(rho);
}

}  // namespace irrcorr
