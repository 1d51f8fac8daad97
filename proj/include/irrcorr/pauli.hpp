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

// Pauli-string indexing, traces against Pauli strings, and synthesis of
// Hermitian operators from real coefficient vectors.
//
// Conventions used throughout the library:
//   * digits 0,1,2,3 stand for I,X,Y,Z;
//   * party 0 is the leftmost tensor factor, the leftmost character of the
//     string form, and the most significant base-4 digit of the code;
//   * party i occupies bit (n-1-i) of a computational-basis index;
//   * Pauli strings are unnormalized, which makes them orthonormal under
//     the inner product <A|B> = Tr(A^dag B)/d.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "irrcorr/errors.hpp"

namespace irrcorr {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

inline constexpr double kLn2 = 0.6931471805599453;

/// Numeric tolerances shared across the library.
namespace tol {
inline constexpr double kHermitian = 1e-10;    // max |M - M^dag| entry
inline constexpr double kTrace = 1e-9;         // |Tr(rho) - 1|
inline constexpr double kPsd = -1e-10;         // eigenvalue floor
inline constexpr double kFullRank = 1e-12;     // strict positivity threshold
inline constexpr double kSupportSigma = 1e-12; // sigma eigenvalue ~ zero
inline constexpr double kSupportRho = 1e-10;   // admissible rho weight there
inline constexpr double kMomentImag = 1e-10;   // imaginary residue of traces
inline constexpr double kSpreadGuard = 1400.0; // max eigenvalue spread in exp
}  // namespace tol

inline constexpr int kMaxQubitsHard = 6;
inline constexpr int kDefaultMaxQubits = 5;

/// Active party-count cap. The environment variable IRRCORR_MAX_QUBITS
/// overrides the default of 5, clamped to [2, 6].
inline int max_qubits() {
  if (const char* env = std::getenv("IRRCORR_MAX_QUBITS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0') {
      return static_cast<int>(
          std::clamp(v, 2L, static_cast<long>(kMaxQubitsHard)));
    }
  }
  return kDefaultMaxQubits;
}

/// Party count n and Hilbert dimension d = 2^n of an n-qubit register.
///
/// Systems under study have 2 <= n <= max_qubits(); single-party shapes are
/// allowed so partial traces can return one-qubit marginals.
struct SystemShape {
  int n = 0;
  int dim = 0;

  explicit SystemShape(int parties) {
    if (parties < 1 || parties > max_qubits()) {
      throw ValidationError("party count " + std::to_string(parties) +
                            " outside [1, " + std::to_string(max_qubits()) +
                            "] (cap set by IRRCORR_MAX_QUBITS)");
    }
    n = parties;
    dim = 1 << parties;
  }

  friend bool operator==(const SystemShape&, const SystemShape&) = default;
};

/// Label of one n-party Pauli string, stored as a packed base-4 code.
class MultiIndex {
 public:
  MultiIndex(int parties, std::uint64_t code) : n_(parties), code_(code) {
    if (parties < 1 || parties > kMaxQubitsHard) {
      throw ValidationError("Pauli index party count " +
                            std::to_string(parties) + " outside [1, " +
                            std::to_string(kMaxQubitsHard) + "]");
    }
    if (code >= (std::uint64_t{1} << (2 * parties))) {
      throw ValidationError("Pauli index code " + std::to_string(code) +
                            " out of range for " + std::to_string(parties) +
                            " parties");
    }
  }

  /// Encode a digit sequence; digits are validated against {0,1,2,3}.
  static MultiIndex from_digits(std::span<const int> digits) {
    if (digits.empty()) throw ValidationError("empty Pauli digit sequence");
    std::uint64_t code = 0;
    for (int digit : digits) {
      if (digit < 0 || digit > 3) {
        throw ValidationError("Pauli digit " + std::to_string(digit) +
                              " outside {0,1,2,3}");
      }
      code = (code << 2) | static_cast<std::uint64_t>(digit);
    }
    return MultiIndex(static_cast<int>(digits.size()), code);
  }

  /// Parse the "IXYZ"-alphabet text form, e.g. "XYZI".
  static MultiIndex from_string(std::string_view text) {
    std::vector<int> digits;
    digits.reserve(text.size());
    for (char c : text) {
      switch (c) {
        case 'I': digits.push_back(0); break;
        case 'X': digits.push_back(1); break;
        case 'Y': digits.push_back(2); break;
        case 'Z': digits.push_back(3); break;
        default:
          throw ParseError(std::string("invalid Pauli character '") + c +
                           "' (expected one of I,X,Y,Z)");
      }
    }
    return from_digits(digits);
  }

  int parties() const { return n_; }
  std::uint64_t code() const { return code_; }

  int digit(int party) const {
    return static_cast<int>(code_ >> (2 * (n_ - 1 - party))) & 3;
  }

  /// Number of non-identity factors.
  int weight() const {
    int w = 0;
    for (int i = 0; i < n_; ++i) w += digit(i) != 0;
    return w;
  }

  std::vector<int> digits() const {
    std::vector<int> out(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = digit(i);
    return out;
  }

  std::string str() const {
    static constexpr char kAlphabet[] = "IXYZ";
    std::string out(static_cast<std::size_t>(n_), 'I');
    for (int i = 0; i < n_; ++i)
      out[static_cast<std::size_t>(i)] = kAlphabet[digit(i)];
    return out;
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  int n_;
  std::uint64_t code_;
};

inline int weight(const MultiIndex& a) { return a.weight(); }

/// Real Pauli moments t_a = Tr(O_a rho) for 1 <= wt(a) <= level, keyed by
/// index in ascending code order. The identity moment is identically 1 and
/// never stored.
struct MomentVector {
  int level = 0;
  std::map<MultiIndex, double> entries;
};

/// Signed-permutation form of one Pauli string: row j has its single nonzero
/// at column j ^ flip_mask with value phase * (-1)^popcount(j & sign_mask),
/// where phase = (-i)^y_count.
struct PauliAction {
  std::uint32_t flip_mask = 0;  // X and Y positions
  std::uint32_t sign_mask = 0;  // Y and Z positions
  int y_count = 0;
  Complex phase{1.0, 0.0};

  explicit PauliAction(const MultiIndex& a) {
    const int n = a.parties();
    for (int i = 0; i < n; ++i) {
      const std::uint32_t bit = std::uint32_t{1} << (n - 1 - i);
      switch (a.digit(i)) {
        case 1: flip_mask |= bit; break;
        case 2: flip_mask |= bit; sign_mask |= bit; ++y_count; break;
        case 3: sign_mask |= bit; break;
        default: break;
      }
    }
    static constexpr Complex kQuarterTurn[4] = {
        {1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}, {0.0, 1.0}};
    phase = kQuarterTurn[y_count & 3];
  }
};

namespace detail {

inline int parity_sign(std::uint32_t bits) {
#if defined(__cpp_lib_bitops)
  return (std::popcount(bits) & 1) ? -1 : 1;
#else
  return (__builtin_popcount(bits) & 1) ? -1 : 1;
#endif
}

/// Tr(O_a M) accumulated along the single nonzero of each row of O_a; O(d).
inline Complex pauli_trace_raw(const Matrix& M, const PauliAction& act) {
  const Eigen::Index d = M.rows();
  Complex acc{0.0, 0.0};
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto ju = static_cast<std::uint32_t>(j);
    const double s = parity_sign(ju & act.sign_mask);
    acc += s * M(static_cast<Eigen::Index>(ju ^ act.flip_mask), j);
  }
  return act.phase * acc;
}

}  // namespace detail

/// Tr(O_a M) for Hermitian M. The trace of a Hermitian matrix against a
/// Hermitian Pauli string is real; an imaginary residue above `imag_tol`
/// signals a non-Hermitian argument.
inline double pauli_trace(const Matrix& M, const MultiIndex& a,
                          double imag_tol = tol::kMomentImag) {
  const Eigen::Index d = Eigen::Index{1} << a.parties();
  if (M.rows() != d || M.cols() != d) {
    throw ValidationError("pauli_trace: matrix is " + std::to_string(M.rows()) +
                          "x" + std::to_string(M.cols()) + " but index \"" +
                          a.str() + "\" needs dimension " + std::to_string(d));
  }
  const Complex t = detail::pauli_trace_raw(M, PauliAction(a));
  if (std::abs(t.imag()) > imag_tol) {
    throw ValidationError("pauli_trace: imaginary residue " +
                          std::to_string(t.imag()) + " on index \"" + a.str() +
                          "\" (non-Hermitian input?)");
  }
  return t.real();
}

/// H = sum_a theta_a O_a over the given coefficients. Exactly Hermitian,
/// traceless when the identity index is absent, linear in theta; built in
/// O(|theta| d) from the signed-permutation structure.
inline Matrix synthesize(const std::map<MultiIndex, double>& coefficients,
                         int parties) {
  if (parties < 1 || parties > kMaxQubitsHard) {
    throw ValidationError("synthesize: party count out of range");
  }
  const Eigen::Index d = Eigen::Index{1} << parties;
  Matrix H = Matrix::Zero(d, d);
  for (const auto& [index, value] : coefficients) {
    if (index.parties() != parties) {
      throw ValidationError("synthesize: index \"" + index.str() +
                            "\" has wrong party count");
    }
    if (!std::isfinite(value)) {
      throw ValidationError("synthesize: non-finite coefficient on \"" +
                            index.str() + "\"");
    }
    const PauliAction act(index);
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto ju = static_cast<std::uint32_t>(j);
      const double s = detail::parity_sign(ju & act.sign_mask);
      H(j, static_cast<Eigen::Index>(ju ^ act.flip_mask)) +=
          value * s * act.phase;
    }
  }
  return H;
}

/// All indices with 1 <= weight <= max_weight, ascending code order.
inline std::vector<MultiIndex> indices_up_to_weight(const SystemShape& shape,
                                                    int max_weight) {
  if (max_weight < 1 || max_weight > shape.n) {
    throw ValidationError("index weight bound " + std::to_string(max_weight) +
                          " outside [1, n]");
  }
  std::vector<MultiIndex> out;
  const std::uint64_t count = std::uint64_t{1} << (2 * shape.n);
  for (std::uint64_t code = 1; code < count; ++code) {
    MultiIndex a(shape.n, code);
    const int w = a.weight();
    if (w >= 1 && w <= max_weight) out.push_back(a);
  }
  return out;
}

/// A fixed, code-ordered set of Pauli indices with precomputed actions; the
/// shared coordinate frame for targets, theta vectors, gradients and
/// Hessians in the projection solver.
class PauliSet {
 public:
  PauliSet(const SystemShape& shape, int max_weight)
      : shape_(shape),
        max_weight_(max_weight),
        indices_(indices_up_to_weight(shape, max_weight)) {
    actions_.reserve(indices_.size());
    for (const auto& a : indices_) actions_.emplace_back(a);
  }

  const SystemShape& shape() const { return shape_; }
  int max_weight() const { return max_weight_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  Eigen::Index size() const {
    return static_cast<Eigen::Index>(indices_.size());
  }

  /// sum_a theta[a] O_a over this set.
  Matrix synthesize(const Eigen::Ref<const Vector>& theta) const {
    if (theta.size() != size()) {
      throw ValidationError("PauliSet::synthesize: coefficient count mismatch");
    }
    const Eigen::Index d = shape_.dim;
    Matrix H = Matrix::Zero(d, d);
    for (Eigen::Index idx = 0; idx < size(); ++idx) {
      const PauliAction& act = actions_[static_cast<std::size_t>(idx)];
      const double value = theta[idx];
      if (value == 0.0) continue;
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto ju = static_cast<std::uint32_t>(j);
        const double s = detail::parity_sign(ju & act.sign_mask);
        H(j, static_cast<Eigen::Index>(ju ^ act.flip_mask)) +=
            value * s * act.phase;
      }
    }
    return H;
  }

  /// Tr(O_a M) for every index in the set.
  Vector moments(const Matrix& M, double imag_tol = tol::kMomentImag) const {
    Vector out(size());
    double worst_imag = 0.0;
    for (Eigen::Index idx = 0; idx < size(); ++idx) {
      const Complex t =
          detail::pauli_trace_raw(M, actions_[static_cast<std::size_t>(idx)]);
      worst_imag = std::max(worst_imag, std::abs(t.imag()));
      out[idx] = t.real();
    }
    if (worst_imag > imag_tol) {
      throw ValidationError("PauliSet::moments: imaginary residue " +
                            std::to_string(worst_imag) +
                            " (non-Hermitian input?)");
    }
    return out;
  }

  /// Map -> coordinate vector. Every key must belong to the set; missing
  /// entries default to zero.
  Vector pack(const std::map<MultiIndex, double>& values) const {
    Vector out = Vector::Zero(size());
    for (const auto& [index, value] : values) {
      const auto it =
          std::lower_bound(indices_.begin(), indices_.end(), index);
      if (it == indices_.end() || *it != index) {
        throw ValidationError("index \"" + index.str() +
                              "\" not in the weight<=" +
                              std::to_string(max_weight_) + " set");
      }
      out[static_cast<Eigen::Index>(it - indices_.begin())] = value;
    }
    return out;
  }

  /// Map -> coordinate vector, requiring exactly the set's keys.
  Vector pack_exact(const std::map<MultiIndex, double>& values) const {
    if (static_cast<Eigen::Index>(values.size()) != size()) {
      throw ValidationError(
          "expected exactly " + std::to_string(size()) + " moment entries, got " +
          std::to_string(values.size()));
    }
    return pack(values);
  }

  std::map<MultiIndex, double> unpack(
      const Eigen::Ref<const Vector>& values) const {
    if (values.size() != size()) {
      throw ValidationError("PauliSet::unpack: size mismatch");
    }
    std::map<MultiIndex, double> out;
    for (Eigen::Index idx = 0; idx < size(); ++idx) {
      out.emplace(indices_[static_cast<std::size_t>(idx)], values[idx]);
    }
    return out;
  }

  const PauliAction& action(Eigen::Index idx) const {
    return actions_[static_cast<std::size_t>(idx)];
  }

 private:
  SystemShape shape_;
  int max_weight_;
  std::vector<MultiIndex> indices_;
  std::vector<PauliAction> actions_;
};

}  // namespace irrcorr
