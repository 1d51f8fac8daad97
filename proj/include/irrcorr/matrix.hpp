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

// Dense Hermitian matrix analysis: eigendecomposition, matrix log/exp,
// entropies, relative entropy, partial trace. Dimensions stay at or below
// 2^6, so everything is spectral and O(d^3).

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "irrcorr/errors.hpp"
#include "irrcorr/pauli.hpp"

namespace irrcorr {

/// Eigensystem of a Hermitian matrix: ascending eigenvalues, unitary columns.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Eigendecomposition with a Hermiticity gate. Deterministic for identical
/// input; reconstruction residual is at machine-precision scale (tested, not
/// re-checked per call).
inline SpectralDecomposition eig_hermitian(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw ValidationError("eig_hermitian: matrix not square");
  }
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double herm = (M - M.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol::kHermitian * scale) {
    throw ValidationError("eig_hermitian: |M - M^dag| = " +
                          std::to_string(herm) + " exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(M);
  if (solver.info() != Eigen::Success) {
    throw Error("eig_hermitian: eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Dense n-qubit density matrix. Construction validates Hermiticity
/// (1e-10), unit trace (1e-9) and positivity (eigenvalues >= -1e-10), and
/// keeps the spectral decomposition for the entropy and logarithm routines.
class DensityMatrix {
 public:
  DensityMatrix(Matrix m, SystemShape shape)
      : shape_(shape), mat_(std::move(m)) {
    if (mat_.rows() != shape_.dim || mat_.cols() != shape_.dim) {
      throw ValidationError("density matrix is " + std::to_string(mat_.rows()) +
                            "x" + std::to_string(mat_.cols()) +
                            " but the shape needs " +
                            std::to_string(shape_.dim));
    }
    const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol::kHermitian) {
      throw ValidationError("density matrix not Hermitian: residue " +
                            std::to_string(herm));
    }
    const Complex tr = mat_.trace();
    if (std::abs(tr - Complex{1.0, 0.0}) > tol::kTrace) {
      throw ValidationError("density matrix trace " + std::to_string(tr.real()) +
                            " not 1 within tolerance");
    }
    mat_ = 0.5 * (mat_ + mat_.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(mat_);
    if (solver.info() != Eigen::Success) {
      throw Error("density matrix eigensolver failed");
    }
    if (solver.eigenvalues().minCoeff() < tol::kPsd) {
      throw ValidationError("density matrix not PSD: min eigenvalue " +
                            std::to_string(solver.eigenvalues().minCoeff()));
    }
    spec_ = {solver.eigenvalues(), solver.eigenvectors()};
  }

  static DensityMatrix maximally_mixed(SystemShape shape) {
    const double inv = 1.0 / shape.dim;
    return DensityMatrix(Matrix::Identity(shape.dim, shape.dim) * inv, shape);
  }

  static DensityMatrix from_pure(const Eigen::VectorXcd& psi,
                                 SystemShape shape) {
    if (psi.size() != shape.dim) {
      throw ValidationError("pure state vector has wrong dimension");
    }
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-9) {
      throw ValidationError("pure state vector not normalized");
    }
    return DensityMatrix(psi * psi.adjoint(), shape);
  }

  /// Trusted constructor for states assembled from a known eigensystem
  /// (Gibbs states): skips re-decomposition. `eigenvalues` must be
  /// nonnegative, ascending, and sum to 1 within 1e-12.
  static DensityMatrix from_eigensystem(Matrix eigenvectors,
                                        Vector eigenvalues,
                                        SystemShape shape) {
    if (eigenvalues.size() != shape.dim || eigenvectors.rows() != shape.dim ||
        eigenvectors.cols() != shape.dim) {
      throw ValidationError("eigensystem dimensions do not match shape");
    }
    if (eigenvalues.minCoeff() < 0.0 ||
        std::abs(eigenvalues.sum() - 1.0) > 1e-12) {
      throw ValidationError("eigensystem is not a normalized PSD spectrum");
    }
    Matrix m = eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
    m = 0.5 * (m + m.adjoint().eval());
    DensityMatrix out(Uninitialized{});
    out.shape_ = shape;
    out.mat_ = std::move(m);
    out.spec_ = {std::move(eigenvalues), std::move(eigenvectors)};
    return out;
  }

  const Matrix& mat() const { return mat_; }
  const SystemShape& shape() const { return shape_; }
  int parties() const { return shape_.n; }
  int dim() const { return shape_.dim; }
  const SpectralDecomposition& spectrum() const { return spec_; }
  double min_eigenvalue() const { return spec_.eigenvalues.minCoeff(); }

 private:
  struct Uninitialized {};
  explicit DensityMatrix(Uninitialized) : shape_(1) {}

  SystemShape shape_;
  Matrix mat_;
  SpectralDecomposition spec_;
};

/// t_a = Tr(O_a rho), a real number in [-1, 1].
inline double pauli_moment(const DensityMatrix& rho, const MultiIndex& a) {
  if (a.parties() != rho.parties()) {
    throw ValidationError("pauli_moment: index \"" + a.str() +
                          "\" does not match a " +
                          std::to_string(rho.parties()) + "-party state");
  }
  const double t = pauli_trace(rho.mat(), a, tol::kMomentImag);
  if (std::abs(t) > 1.0 + 1e-9) {
    throw ValidationError("pauli_moment: |t| = " + std::to_string(t) +
                          " exceeds 1 on \"" + a.str() + "\"");
  }
  return t;
}

/// Moments for every index with 1 <= wt(a) <= level, ascending code order.
inline MomentVector moment_vector(const DensityMatrix& rho, int level) {
  if (level < 1 || level > rho.parties()) {
    throw ValidationError("moment level " + std::to_string(level) +
                          " outside [1, n]");
  }
  MomentVector out;
  out.level = level;
  for (const auto& a : indices_up_to_weight(rho.shape(), level)) {
    out.entries.emplace(a, pauli_moment(rho, a));
  }
  return out;
}

/// Von Neumann entropy in bits; 0*ln(0) contributes zero.
inline double vn_entropy(const DensityMatrix& rho) {
  double nats = 0.0;
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    const double p = rho.spectrum().eigenvalues[i];
    if (p > 0.0) nats -= p * std::log(p);
  }
  return std::max(0.0, nats / kLn2);
}

/// Quantum relative entropy S(rho||sigma) = Tr(rho (ln rho - ln sigma)) in
/// bits, evaluated spectrally on the supports. Throws SupportViolation when
/// rho has weight above 1e-10 on a sigma eigenvector with eigenvalue below
/// 1e-12 (the value would be infinite).
inline double rel_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.shape() != sigma.shape()) {
    throw ValidationError("rel_entropy: shape mismatch");
  }
  double nats = 0.0;
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    const double p = rho.spectrum().eigenvalues[i];
    if (p > 0.0) nats += p * std::log(p);
  }
  // weights of rho in sigma's eigenbasis
  const Matrix cross = sigma.spectrum().eigenvectors.adjoint() * rho.mat() *
                       sigma.spectrum().eigenvectors;
  for (Eigen::Index k = 0; k < rho.dim(); ++k) {
    const double mu = sigma.spectrum().eigenvalues[k];
    const double q = std::max(0.0, cross(k, k).real());
    if (mu < tol::kSupportSigma) {
      if (q > tol::kSupportRho) {
        throw SupportViolation(
            "rel_entropy: rho weight " + std::to_string(q) +
            " outside sigma's support (eigenvalue " + std::to_string(mu) + ")");
      }
      continue;
    }
    nats -= q * std::log(mu);
  }
  const double bits = nats / kLn2;
  if (bits < -1e-9) {
    throw ValidationError("rel_entropy: negative value " +
                          std::to_string(bits) + " (inputs invalid?)");
  }
  return std::max(0.0, bits);
}

/// Reduced state on `keep` (0-based party labels, any order; output party
/// order follows the original register order).
inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   std::vector<int> keep) {
  const int n = rho.parties();
  if (keep.empty()) throw ValidationError("partial_trace: empty keep set");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw ValidationError("partial_trace: duplicate party in keep set");
  }
  if (keep.front() < 0 || keep.back() >= n) {
    throw ValidationError("partial_trace: party label out of range");
  }
  const int k = static_cast<int>(keep.size());
  std::vector<int> traced;
  for (int p = 0; p < n; ++p) {
    if (!std::binary_search(keep.begin(), keep.end(), p)) traced.push_back(p);
  }

  // scatter tables: reduced/traced space index -> bits in the full index
  const auto scatter = [n](const std::vector<int>& parties,
                           std::uint32_t packed) {
    std::uint32_t out = 0;
    const int count = static_cast<int>(parties.size());
    for (int q = 0; q < count; ++q) {
      const std::uint32_t bit = (packed >> (count - 1 - q)) & 1u;
      out |= bit << (n - 1 - parties[static_cast<std::size_t>(q)]);
    }
    return out;
  };

  const Eigen::Index dk = Eigen::Index{1} << k;
  const Eigen::Index dt = Eigen::Index{1} << (n - k);
  std::vector<std::uint32_t> keep_bits(static_cast<std::size_t>(dk));
  std::vector<std::uint32_t> traced_bits(static_cast<std::size_t>(dt));
  for (Eigen::Index r = 0; r < dk; ++r) {
    keep_bits[static_cast<std::size_t>(r)] =
        scatter(keep, static_cast<std::uint32_t>(r));
  }
  for (Eigen::Index t = 0; t < dt; ++t) {
    traced_bits[static_cast<std::size_t>(t)] =
        scatter(traced, static_cast<std::uint32_t>(t));
  }

  Matrix out = Matrix::Zero(dk, dk);
  for (Eigen::Index r = 0; r < dk; ++r) {
    for (Eigen::Index c = 0; c < dk; ++c) {
      Complex acc{0.0, 0.0};
      for (Eigen::Index t = 0; t < dt; ++t) {
        const std::uint32_t tb = traced_bits[static_cast<std::size_t>(t)];
        acc += rho.mat()(
            static_cast<Eigen::Index>(keep_bits[static_cast<std::size_t>(r)] | tb),
            static_cast<Eigen::Index>(keep_bits[static_cast<std::size_t>(c)] | tb));
      }
      out(r, c) = acc;
    }
  }
  return DensityMatrix(std::move(out), SystemShape(k));
}

/// Coefficients theta_a = <O_a|ln rho> = Tr(O_a ln rho)/d for all 4^n
/// indices (identity included). Requires a strictly positive state.
inline std::map<MultiIndex, double> log_coefficients(const DensityMatrix& rho) {
  if (rho.min_eigenvalue() < tol::kFullRank) {
    throw NotFullRank("log_coefficients: min eigenvalue " +
                      std::to_string(rho.min_eigenvalue()) +
                      " below full-rank threshold");
  }
  const int n = rho.parties();
  const Vector log_eigs = rho.spectrum().eigenvalues.array().log().matrix();
  Matrix L = rho.spectrum().eigenvectors * log_eigs.asDiagonal() *
             rho.spectrum().eigenvectors.adjoint();
  L = 0.5 * (L + L.adjoint().eval());
  const double imag_tol =
      tol::kMomentImag * std::max(1.0, L.cwiseAbs().maxCoeff());
  std::map<MultiIndex, double> out;
  const double inv_d = 1.0 / rho.dim();
  const std::uint64_t count = std::uint64_t{1} << (2 * n);
  for (std::uint64_t code = 0; code < count; ++code) {
    const MultiIndex a(n, code);
    out.emplace(a, pauli_trace(L, a, imag_tol) * inv_d);
  }
  return out;
}

/// sigma = exp(H)/Tr(exp(H)) and lnZ = ln Tr(exp(H)), computed with the
/// max-eigenvalue shift; invariant under H -> H + cI. An eigenvalue spread
/// beyond 1400 trips the overflow guard (divergence toward a boundary
/// state).
inline std::pair<DensityMatrix, double> gibbs_state(const Matrix& H) {
  SpectralDecomposition sd = eig_hermitian(H);
  const Eigen::Index d = H.rows();
  int parties = 0;
  while ((Eigen::Index{1} << parties) < d) ++parties;
  if ((Eigen::Index{1} << parties) != d) {
    throw ValidationError("gibbs_state: dimension is not a power of two");
  }
  const double top = sd.eigenvalues.maxCoeff();
  const double spread = top - sd.eigenvalues.minCoeff();
  if (spread > tol::kSpreadGuard) {
    throw OverflowGuard("gibbs_state: eigenvalue spread " +
                        std::to_string(spread) + " exceeds guard " +
                        std::to_string(tol::kSpreadGuard));
  }
  Vector w = (sd.eigenvalues.array() - top).exp().matrix();
  const double z_shifted = w.sum();
  const double ln_z = top + std::log(z_shifted);
  w /= z_shifted;
  w /= w.sum();  // renormalize exactly after the division
  return {DensityMatrix::from_eigensystem(std::move(sd.eigenvectors),
                                          std::move(w), SystemShape(parties)),
          ln_z};
}

/// Kronecker product, party order left to right.
inline Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return out;
}

}  // namespace irrcorr
