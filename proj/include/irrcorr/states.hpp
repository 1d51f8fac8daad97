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

// Benchmark state constructors, random full-rank ensembles, depolarization,
// and the "irrcorr-state-v1" file format.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "irrcorr/errors.hpp"
#include "irrcorr/matrix.hpp"
#include "irrcorr/pauli.hpp"

namespace irrcorr {

namespace detail {
inline SystemShape system_shape_for_state(int n) {
  if (n < 2) {
    throw ValidationError("state constructors need at least 2 parties");
  }
  return SystemShape(n);  // enforces the upper cap
}
}  // namespace detail

/// |GHZ_n> = (|0...0> + |1...1>)/sqrt(2).
inline DensityMatrix ghz(int n) {
  const SystemShape shape = detail::system_shape_for_state(n);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(shape.dim);
  psi[0] = 1.0 / std::sqrt(2.0);
  psi[shape.dim - 1] = psi[0];
  return DensityMatrix::from_pure(psi, shape);
}

/// Symmetric Dicke state with `excitations` ones, all amplitudes +1/sqrt(C).
inline DensityMatrix dicke(int n, int excitations) {
  const SystemShape shape = detail::system_shape_for_state(n);
  if (excitations < 0 || excitations > n) {
    throw ValidationError("dicke: excitation count " +
                          std::to_string(excitations) + " outside [0, n]");
  }
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < shape.dim; ++j) {
    if (std::popcount(static_cast<std::uint32_t>(j)) == excitations) {
      support.push_back(j);
    }
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(shape.dim);
  const double amp = 1.0 / std::sqrt(static_cast<double>(support.size()));
  for (Eigen::Index j : support) psi[j] = amp;
  return DensityMatrix::from_pure(psi, shape);
}

/// W state: uniform superposition of single excitations.
inline DensityMatrix w_state(int n) { return dicke(n, 1); }

/// Four-qubit Smolin state (1/16)(I + X^4 + Y^4 + Z^4); rank 4, entropy
/// 2 bits.
inline DensityMatrix smolin() {
  const SystemShape shape = detail::system_shape_for_state(4);
  std::map<MultiIndex, double> strings;
  const double c = 1.0 / 16.0;
  strings.emplace(MultiIndex::from_string("XXXX"), c);
  strings.emplace(MultiIndex::from_string("YYYY"), c);
  strings.emplace(MultiIndex::from_string("ZZZZ"), c);
  Matrix m = synthesize(strings, 4);
  m += Matrix::Identity(shape.dim, shape.dim) * c;
  return DensityMatrix(std::move(m), shape);
}

/// rho(p0) = p0 I/d + (1 - p0) rho.
inline DensityMatrix depolarize(const DensityMatrix& rho, double p0) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) {
    throw ValidationError("depolarize: p0 = " + std::to_string(p0) +
                          " outside [0, 1]");
  }
  const double inv = p0 / rho.dim();
  Matrix m = (1.0 - p0) * rho.mat() +
             inv * Matrix::Identity(rho.dim(), rho.dim());
  return DensityMatrix(std::move(m), rho.shape());
}

/// Ginibre-induced random state with an eigenvalue floor: G has iid standard
/// complex normal entries, rho0 = GG^dag/Tr(GG^dag), and the result mixes
/// rho0 with I/d so the minimum eigenvalue is at least floor/(1 + floor*d).
/// Deterministic for a given seed.
inline DensityMatrix random_full_rank(int n, std::uint64_t seed,
                                      double floor = 1e-3) {
  const SystemShape shape = detail::system_shape_for_state(n);
  if (!(floor > 0.0 && floor < 1.0)) {
    throw ValidationError("random_full_rank: floor outside (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(shape.dim, shape.dim);
  for (Eigen::Index i = 0; i < shape.dim; ++i) {
    for (Eigen::Index j = 0; j < shape.dim; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex{re, im};
    }
  }
  Matrix rho0 = g * g.adjoint();
  rho0 /= rho0.trace().real();
  const double mix = floor * shape.dim / (1.0 + floor * shape.dim);
  Matrix m = (1.0 - mix) * rho0 +
             (mix / shape.dim) * Matrix::Identity(shape.dim, shape.dim);
  return DensityMatrix(std::move(m), shape);
}

// ---------------------------------------------------------------------------
// State descriptors (the CLI's state-spec values)

/// Parsed form of a CLI state spec such as "ghz:4" or
/// "random:3:seed=42@p0=0.1".
struct StateDescriptor {
  enum class Kind { Ghz, W, Dicke, Smolin, Random, File };

  Kind kind = Kind::Ghz;
  int n = 0;
  int excitations = 0;
  std::uint64_t seed = 0;
  std::string path;
  std::optional<double> p0;   // depolarization suffix, if any
  std::string spec;           // original text, round-trips losslessly

  std::string str() const { return spec; }
};

DensityMatrix load_state(const std::string& path);

/// Instantiate the state a descriptor names (applying any @p0 suffix).
inline DensityMatrix build_state(const StateDescriptor& desc) {
  auto base = [&]() -> DensityMatrix {
    switch (desc.kind) {
      case StateDescriptor::Kind::Ghz: return ghz(desc.n);
      case StateDescriptor::Kind::W: return w_state(desc.n);
      case StateDescriptor::Kind::Dicke: return dicke(desc.n, desc.excitations);
      case StateDescriptor::Kind::Smolin: return smolin();
      case StateDescriptor::Kind::Random:
        return random_full_rank(desc.n, desc.seed);
      case StateDescriptor::Kind::File: return load_state(desc.path);
    }
    throw Error("unreachable state kind");
  }();
  if (desc.p0.has_value()) return depolarize(base, *desc.p0);
  return base;
}

// ---------------------------------------------------------------------------
// State files ("irrcorr-state-v1")
//
// JSON, two kinds:
//   dense: row-major real and imaginary parts of the d x d matrix;
//   pauli: map from Pauli strings over I/X/Y/Z to real moments t_a, meaning
//          rho = (1/d) sum_a t_a O_a with the all-identity coefficient
//          fixed at 1 (rejected if present and different).

inline constexpr const char* kStateFormatTag = "irrcorr-state-v1";

inline void save_state(const std::string& path, const DensityMatrix& rho) {
  nlohmann::json doc;
  doc["format"] = kStateFormatTag;
  doc["kind"] = "dense";
  doc["n"] = rho.parties();
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(rho.dim()) * rho.dim());
  im.reserve(re.capacity());
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    for (Eigen::Index j = 0; j < rho.dim(); ++j) {
      re.push_back(rho.mat()(i, j).real());
      im.push_back(rho.mat()(i, j).imag());
    }
  }
  doc["real"] = re;
  doc["imag"] = im;
  std::ofstream out(path);
  if (!out) throw Error("cannot open \"" + path + "\" for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write to \"" + path + "\" failed");
}

inline DensityMatrix load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open state file \"" + path + "\"");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("state file \"" + path + "\": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kStateFormatTag) {
    throw ParseError("state file \"" + path + "\" lacks the " +
                     std::string(kStateFormatTag) + " format tag");
  }
  const std::string kind = doc.value("kind", "");

  Matrix m;
  int n = 0;
  if (kind == "dense") {
    if (!doc.contains("n") || !doc["n"].is_number_integer()) {
      throw ParseError("dense state file: missing party count \"n\"");
    }
    n = doc["n"].get<int>();
    if (n < 2 || n > max_qubits()) {
      throw ValidationError("state file party count " + std::to_string(n) +
                            " outside [2, " + std::to_string(max_qubits()) +
                            "]");
    }
    const Eigen::Index d = Eigen::Index{1} << n;
    const auto& re = doc.at("real");
    const auto& im = doc.at("imag");
    if (!re.is_array() || !im.is_array() ||
        static_cast<Eigen::Index>(re.size()) != d * d ||
        static_cast<Eigen::Index>(im.size()) != d * d) {
      throw ParseError("dense state file: real/imag must be row-major arrays "
                       "of length d^2");
    }
    m = Matrix(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto idx = static_cast<std::size_t>(i * d + j);
        m(i, j) = Complex{re[idx].get<double>(), im[idx].get<double>()};
      }
    }
  } else if (kind == "pauli") {
    if (!doc.contains("coefficients") || !doc["coefficients"].is_object()) {
      throw ParseError("pauli state file: missing \"coefficients\" object");
    }
    const auto& coeffs = doc["coefficients"];
    std::map<MultiIndex, double> strings;
    for (const auto& [key, value] : coeffs.items()) {
      if (n == 0) {
        n = static_cast<int>(key.size());
        if (n < 2 || n > max_qubits()) {
          throw ValidationError("pauli state file: string length " +
                                std::to_string(n) + " outside [2, " +
                                std::to_string(max_qubits()) + "]");
        }
      } else if (static_cast<int>(key.size()) != n) {
        throw ParseError("pauli state file: inconsistent string lengths");
      }
      const MultiIndex a = MultiIndex::from_string(key);
      if (!value.is_number()) {
        throw ParseError("pauli state file: coefficient of \"" + key +
                         "\" is not a number");
      }
      const double t = value.get<double>();
      if (a.weight() == 0) {
        if (std::abs(t - 1.0) > 1e-12) {
          throw ValidationError(
              "pauli state file: identity coefficient must be 1 (trace "
              "normalization)");
        }
        continue;
      }
      strings.emplace(a, t);
    }
    if (n == 0) throw ParseError("pauli state file: no coefficients");
    const Eigen::Index d = Eigen::Index{1} << n;
    m = synthesize(strings, n);
    m += Matrix::Identity(d, d);
    m /= static_cast<double>(d);
  } else {
    throw ParseError("state file kind \"" + kind +
                     "\" is neither \"dense\" nor \"pauli\"");
  }

  // Loads tolerate small trace drift (1e-6) and renormalize; worse is an
  // error. Hermiticity/PSD run through the DensityMatrix validator.
  const Complex tr = m.trace();
  if (std::abs(tr - Complex{1.0, 0.0}) > 1e-6) {
    throw ValidationError("state file trace " + std::to_string(tr.real()) +
                          " deviates from 1 by more than 1e-6");
  }
  m /= tr.real();
  return DensityMatrix(std::move(m), SystemShape(n));
}

}  // namespace irrcorr
