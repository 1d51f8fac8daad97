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

#pragma once

#include <stdexcept>
#include <string>

namespace irrcorr {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A value failed its type invariants (Hermiticity, trace, positivity,
/// index ranges, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// S(rho||sigma) is infinite: rho carries weight outside sigma's support.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

/// An operation required a strictly positive definite state.
class NotFullRank : public Error {
 public:
  using Error::Error;
};

/// A matrix expected to be diagonal has significant off-diagonal entries.
class NotDiagonal : public Error {
 public:
  using Error::Error;
};

/// The eigenvalue spread of an exponent exceeds the overflow guard; the
/// iteration is diverging toward a rank-deficient boundary state.
class OverflowGuard : public Error {
 public:
  using Error::Error;
};

/// Malformed textual input (state specs, state files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Not enough converged data points to form an estimate.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// An iterative oracle (IPF) failed to reach its tolerance.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace irrcorr
