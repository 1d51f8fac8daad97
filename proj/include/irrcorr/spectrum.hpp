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

// Assembly of the correlation decomposition C_2..C_n and C_T for one state,
// and the depolarizing continuation sweep with per-level warm starts.
//
// The chain rho_1, rho_2, ..., rho_{n-1} consists of the information
// projections onto families with interactions of weight <= m. Levels 1 and
// n are closed forms: rho_1 is the product of the single-party marginals,
// and C_n = S(rho || rho_{n-1}). Each C_m is a relative entropy between
// consecutive chain members, which telescopes to the total C_T.

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irrcorr/errors.hpp"
#include "irrcorr/matrix.hpp"
#include "irrcorr/solver.hpp"
#include "irrcorr/states.hpp"

namespace irrcorr {

enum class LevelStatus {
  ClosedForm,     // no iteration needed (rho_1 product, C_n formula)
  Converged,      // residual at tolerance, certificate-grade
  MaxIterations,  // residual not reached
  Boundary,       // theta diverged toward a rank-deficient limit
  CheckFailed,    // converged but an identity cross-check disagreed
  Skipped,        // level not requested
};

inline const char* level_status_label(LevelStatus status) {
  switch (status) {
    case LevelStatus::ClosedForm: return "closed";
    case LevelStatus::Converged: return "ok";
    case LevelStatus::MaxIterations: return "maxiter";
    case LevelStatus::Boundary: return "boundary";
    case LevelStatus::CheckFailed: return "check";
    case LevelStatus::Skipped: return "skip";
  }
  return "?";
}

/// Options shared by the decomposition and sweep drivers.
struct SolveOptions {
  double tolerance = 1e-9;
  int max_iterations = 500;
  double theta_cap = 60.0;
  std::vector<int> levels;  // C_m values to report; empty means all of 2..n
};

/// Per-state decomposition record. level_bits[m-2] holds C_m in bits for
/// m = 2..n (NaN when skipped); values in [-1e-6, 0) are clamped to zero,
/// anything lower marks the level as failed.
struct CorrelationRecord {
  int k = 0;
  double p0 = 0.0;
  double entropy_bits = 0.0;
  double total_bits = 0.0;
  std::vector<double> level_bits;
  std::vector<LevelStatus> level_status;
  double max_residual = 0.0;
  int iterations_total = 0;

  bool all_converged() const {
    for (const LevelStatus s : level_status) {
      if (s != LevelStatus::Converged && s != LevelStatus::ClosedForm &&
          s != LevelStatus::Skipped) {
        return false;
      }
    }
    return true;
  }
};

/// Solve outcome of one chain level (2..n-1).
struct LevelProjection {
  int level = 0;
  LevelStatus status = LevelStatus::Skipped;
  SolverReport report;
  std::optional<ProjectionResult> result;
};

/// Full output of one decomposition: the record plus the chain states for
/// certification and reuse.
struct Decomposition {
  CorrelationRecord record;
  DensityMatrix product_state;  // rho_1
  std::vector<LevelProjection> chain;
};

/// Per-level warm-start thetas carried along a continuation sweep.
struct WarmStart {
  std::map<int, ThetaVector> theta;
};

/// Tensor product of the single-party marginals (rho_1 in closed form).
inline DensityMatrix product_of_marginals(const DensityMatrix& rho) {
  const int n = rho.parties();
  if (n == 1) return rho;
  Matrix acc = partial_trace(rho, {0}).mat();
  for (int party = 1; party < n; ++party) {
    acc = kron(acc, partial_trace(rho, {party}).mat());
  }
  return DensityMatrix(std::move(acc), rho.shape());
}

namespace detail {

/// Projection solve with a deterministic continuation fallback: when a cold
/// start exhausts its iterations, walk the targets in from the maximally
/// mixed point (scaled moments are exactly the moments of a depolarized
/// state) and warm-start each stage. Boundary divergence is returned as-is.
inline ProjectionResult solve_level(const ProjectionProblem& problem,
                                    const ThetaVector& init) {
  ProjectionResult result = solve_projection(problem, init);
  if (result.report.converged || result.report.boundary_flag) return result;

  static constexpr double kLadder[] = {0.5, 0.8, 0.95, 0.99, 0.999, 1.0};
  int iterations = result.report.iterations;
  ThetaVector warm{problem.level, {}};
  for (const double scale : kLadder) {
    ProjectionProblem staged = problem;
    for (auto& [index, value] : staged.targets.entries) value *= scale;
    result = solve_projection(staged, warm);
    iterations += result.report.iterations;
    if (result.report.boundary_flag) break;
    warm = result.theta;
  }
  result.report.iterations = iterations;
  return result;
}

inline double clamp_correlation(double bits, LevelStatus& status) {
  if (bits < -1e-6) {
    status = LevelStatus::CheckFailed;
    return 0.0;
  }
  return std::max(0.0, bits);
}

}  // namespace detail

/// Decompose one state: S, C_T, and the requested C_m with chain
/// projections solved at `options.tolerance`. `warm` (optional) supplies
/// per-level initial thetas and receives the solutions for the next
/// continuation step. Solver failures are reported through the per-level
/// status flags, never as exceptions.
inline Decomposition correlation_levels(const DensityMatrix& rho,
                                        WarmStart* warm,
                                        const SolveOptions& options) {
  const int n = rho.parties();
  if (n < 2) throw ValidationError("correlation_levels: need at least 2 parties");

  std::vector<bool> requested(static_cast<std::size_t>(n + 1), false);
  if (options.levels.empty()) {
    for (int m = 2; m <= n; ++m) requested[static_cast<std::size_t>(m)] = true;
  } else {
    for (const int m : options.levels) {
      if (m < 2 || m > n) {
        throw ValidationError("requested level " + std::to_string(m) +
                              " outside [2, n]");
      }
      requested[static_cast<std::size_t>(m)] = true;
    }
  }
  // C_m needs the chain states at m and m-1; level 1 is always closed form.
  std::vector<bool> solve(static_cast<std::size_t>(n), false);
  for (int m = 2; m <= n; ++m) {
    if (!requested[static_cast<std::size_t>(m)]) continue;
    for (const int lvl : {m - 1, m}) {
      if (lvl >= 2 && lvl <= n - 1) solve[static_cast<std::size_t>(lvl)] = true;
    }
  }

  Decomposition out{CorrelationRecord{}, product_of_marginals(rho), {}};
  CorrelationRecord& rec = out.record;
  rec.entropy_bits = vn_entropy(rho);
  rec.total_bits = rel_entropy(rho, out.product_state);
  rec.level_bits.assign(static_cast<std::size_t>(n - 1),
                        std::numeric_limits<double>::quiet_NaN());
  rec.level_status.assign(static_cast<std::size_t>(n - 1),
                          LevelStatus::Skipped);

  std::map<int, DensityMatrix> chain_states;
  std::map<int, LevelStatus> chain_status;
  chain_states.emplace(1, out.product_state);
  chain_status.emplace(1, LevelStatus::ClosedForm);

  for (int lvl = 2; lvl <= n - 1; ++lvl) {
    if (!solve[static_cast<std::size_t>(lvl)]) continue;
    ProjectionProblem problem{rho.shape(), lvl, moment_vector(rho, lvl),
                              options.tolerance, options.max_iterations,
                              options.theta_cap};
    ThetaVector init;
    if (warm != nullptr) {
      const auto it = warm->theta.find(lvl);
      if (it != warm->theta.end()) init = it->second;
    }
    ProjectionResult result = detail::solve_level(problem, init);
    LevelStatus status = result.report.converged ? LevelStatus::Converged
                         : result.report.boundary_flag
                             ? LevelStatus::Boundary
                             : LevelStatus::MaxIterations;
    rec.iterations_total += result.report.iterations;
    rec.max_residual = std::max(rec.max_residual, result.report.final_residual);
    if (warm != nullptr) warm->theta[lvl] = result.theta;
    chain_states.emplace(lvl, result.state);
    chain_status.emplace(lvl, status);
    out.chain.push_back(
        LevelProjection{lvl, status, result.report, std::move(result)});
  }

  for (int m = 2; m <= n; ++m) {
    if (!requested[static_cast<std::size_t>(m)]) continue;
    const DensityMatrix& hi = (m <= n - 1) ? chain_states.at(m) : rho;
    const DensityMatrix& lo = chain_states.at(m - 1);
    LevelStatus status;
    if (m <= n - 1) {
      status = chain_status.at(m);
    } else {
      const LevelStatus below = chain_status.at(n - 1);
      status = (below == LevelStatus::Converged ||
                below == LevelStatus::ClosedForm)
                   ? LevelStatus::ClosedForm
                   : below;
    }
    const bool lo_ok = chain_status.at(m - 1) == LevelStatus::Converged ||
                       chain_status.at(m - 1) == LevelStatus::ClosedForm;
    const bool hi_ok = status == LevelStatus::Converged ||
                       status == LevelStatus::ClosedForm;
    double bits;
    try {
      bits = rel_entropy(hi, lo);
      // entropy-difference identity: C_m = S(rho_{m-1}) - S(rho_m)
      if (lo_ok && hi_ok &&
          std::abs(bits - (vn_entropy(lo) - vn_entropy(hi))) > 1e-6) {
        status = LevelStatus::CheckFailed;
      }
    } catch (const SupportViolation&) {
      // A chain member this close to the family boundary cannot support the
      // direct relative-entropy route in finite precision. Moment matching
      // pins Tr(rho_m ln rho_{m-1}) to Tr(rho_{m-1} ln rho_{m-1}), so the
      // entropy difference evaluates the same quantity and stays
      // well conditioned.
      if (lo_ok && hi_ok) {
        bits = vn_entropy(lo) - vn_entropy(hi);
      } else {
        status = LevelStatus::CheckFailed;
        bits = std::numeric_limits<double>::quiet_NaN();
      }
    } catch (const Error&) {
      status = LevelStatus::CheckFailed;
      bits = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(bits)) bits = detail::clamp_correlation(bits, status);
    rec.level_bits[static_cast<std::size_t>(m - 2)] = bits;
    rec.level_status[static_cast<std::size_t>(m - 2)] = status;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Depolarizing continuation sweep

/// Grid p0(k) = 1 - k/N for k = 0..N: from the maximally mixed state, where
/// every theta vanishes, down to the target state.
struct SweepSchedule {
  int steps = 100;

  double p0(int k) const { return 1.0 - static_cast<double>(k) / steps; }
};

struct SweepResult {
  int parties = 0;
  SweepSchedule schedule;
  std::vector<int> levels;  // reported levels (ascending; all of 2..n if empty request)
  std::vector<CorrelationRecord> records;
};

/// Sweep the family rho(p0) = p0 I/d + (1-p0) rho from k = 0 (mixed) to
/// k = N (target), warm-starting every level's solve from the previous grid
/// point. Divergence at a level flags that level's record; the sweep always
/// completes.
inline SweepResult sweep(const DensityMatrix& rho_target,
                         const SweepSchedule& schedule,
                         const SolveOptions& options) {
  if (schedule.steps < 1) {
    throw ValidationError("sweep: step count must be positive");
  }
  SweepResult out;
  out.parties = rho_target.parties();
  out.schedule = schedule;
  if (options.levels.empty()) {
    for (int m = 2; m <= out.parties; ++m) out.levels.push_back(m);
  } else {
    out.levels = options.levels;
    std::sort(out.levels.begin(), out.levels.end());
  }
  WarmStart warm;
  out.records.reserve(static_cast<std::size_t>(schedule.steps) + 1);
  for (int k = 0; k <= schedule.steps; ++k) {
    const double p0 = schedule.p0(k);
    const DensityMatrix mixed = depolarize(rho_target, p0);
    Decomposition dec = correlation_levels(mixed, &warm, options);
    dec.record.k = k;
    dec.record.p0 = p0;
    out.records.push_back(std::move(dec.record));
  }
  return out;
}

/// Linear p0 -> 0 extrapolation of one level's correlation from the two
/// smallest-p0 converged records, reported alongside the raw endpoint.
struct LimitEstimate {
  int level = 0;
  double raw_p0 = 0.0;     // smallest converged grid point
  double raw_bits = 0.0;   // value there
  double limit_bits = 0.0; // linear extrapolation to p0 = 0
};

inline std::vector<LimitEstimate> extrapolate_limit(const SweepResult& result) {
  std::vector<LimitEstimate> out;
  for (const int m : result.levels) {
    std::vector<std::pair<double, double>> points;  // (p0, bits) descending k
    for (auto it = result.records.rbegin(); it != result.records.rend(); ++it) {
      const auto& status = it->level_status[static_cast<std::size_t>(m - 2)];
      if (status != LevelStatus::Converged && status != LevelStatus::ClosedForm)
        continue;
      points.emplace_back(it->p0, it->level_bits[static_cast<std::size_t>(m - 2)]);
      if (points.size() == 2) break;
    }
    if (points.size() < 2) continue;
    const auto [pa, va] = points[0];
    const auto [pb, vb] = points[1];
    const double slope = (vb - va) / (pb - pa);
    out.push_back(LimitEstimate{m, pa, va, va - slope * pa});
  }
  if (out.empty()) {
    throw InsufficientData(
        "extrapolate_limit: no level has two converged records");
  }
  return out;
}

}  // namespace irrcorr
