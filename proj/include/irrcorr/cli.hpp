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

// Command implementations behind the irrcorr CLI: state-spec parsing and the
// compute / sweep / verify commands with deterministic CSV and structured
// output. Identical configuration produces byte-identical output: fixed
// 12-significant-digit float formatting, ordered maps, no timestamps.

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "irrcorr/errors.hpp"
#include "irrcorr/oracle.hpp"
#include "irrcorr/spectrum.hpp"
#include "irrcorr/states.hpp"
#include "irrcorr/version.hpp"

namespace irrcorr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFlagged = 2;
inline constexpr int kExitInvalid = 3;

struct CommandConfig {
  enum class Command { Compute, Sweep, Verify };
  enum class Format { Csv, Structured };

  Command command = Command::Compute;
  std::string state_spec;
  int steps = 100;
  double tolerance = 1e-9;
  std::string levels = "all";  // "all" or comma-separated subset of 2..n
  std::string out_path;        // empty = stdout
  Format format = Format::Csv;
  bool extrapolate = false;
  double theta_cap = 60.0;
  int max_iterations = 500;
};

/// Fixed 12-significant-digit decimal formatting (locale-free).
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// State-spec grammar:
//   ghz:<n> | w:<n> | dicke:<n>:<k> | smolin | random:<n>:seed=<u64>
//   | file:<path>            with optional suffix @p0=<float>

namespace detail {

inline long long parse_integer(const std::string& text, std::size_t at) {
  long long value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError("state spec: expected an integer at position " +
                     std::to_string(at) + ", got \"" + text + "\"");
  }
  return value;
}

inline int parse_party_count(const std::string& text, std::size_t at) {
  const long long n = parse_integer(text, at);
  if (n < 2 || n > max_qubits()) {
    throw ParseError("state spec: party count " + std::to_string(n) +
                     " at position " + std::to_string(at) + " outside [2, " +
                     std::to_string(max_qubits()) + "]");
  }
  return static_cast<int>(n);
}

}  // namespace detail

inline StateDescriptor parse_state_spec(const std::string& spec) {
  StateDescriptor desc;
  desc.spec = spec;

  std::string head = spec;
  const std::size_t at = spec.find('@');
  if (at != std::string::npos) {
    head = spec.substr(0, at);
    const std::string suffix = spec.substr(at + 1);
    if (suffix.rfind("p0=", 0) != 0) {
      throw ParseError("state spec: expected p0=<float> at position " +
                       std::to_string(at + 1));
    }
    const std::string number = suffix.substr(3);
    try {
      std::size_t used = 0;
      const double p0 = std::stod(number, &used);
      if (used != number.size()) throw std::invalid_argument(number);
      desc.p0 = p0;
    } catch (const std::exception&) {
      throw ParseError("state spec: invalid p0 value at position " +
                       std::to_string(at + 4));
    }
    if (*desc.p0 < 0.0 || *desc.p0 > 1.0) {
      throw ParseError("state spec: p0 = " + number + " outside [0, 1]");
    }
  }

  std::vector<std::string> parts;
  std::vector<std::size_t> offsets;
  std::size_t begin = 0;
  // a file path may contain ':', so only the head keyword is split eagerly
  const std::size_t first_colon = head.find(':');
  const std::string keyword = head.substr(0, first_colon);
  if (keyword == "file") {
    if (first_colon == std::string::npos || first_colon + 1 >= head.size()) {
      throw ParseError("state spec: file needs a path (file:<path>)");
    }
    desc.kind = StateDescriptor::Kind::File;
    desc.path = head.substr(first_colon + 1);
    return desc;
  }
  while (true) {
    const std::size_t end = head.find(':', begin);
    parts.push_back(head.substr(begin, end - begin));
    offsets.push_back(begin);
    if (end == std::string::npos) break;
    begin = end + 1;
  }

  if (keyword == "smolin") {
    if (parts.size() != 1) {
      throw ParseError("state spec: smolin takes no arguments");
    }
    desc.kind = StateDescriptor::Kind::Smolin;
    desc.n = 4;
  } else if (keyword == "ghz" || keyword == "w") {
    if (parts.size() != 2) {
      throw ParseError("state spec: " + keyword + " needs exactly one " +
                       "argument (" + keyword + ":<n>)");
    }
    desc.kind = keyword == "ghz" ? StateDescriptor::Kind::Ghz
                                 : StateDescriptor::Kind::W;
    desc.n = detail::parse_party_count(parts[1], offsets[1]);
  } else if (keyword == "dicke") {
    if (parts.size() != 3) {
      throw ParseError("state spec: dicke needs two arguments (dicke:<n>:<k>)");
    }
    desc.kind = StateDescriptor::Kind::Dicke;
    desc.n = detail::parse_party_count(parts[1], offsets[1]);
    const long long k = detail::parse_integer(parts[2], offsets[2]);
    if (k < 0 || k > desc.n) {
      throw ParseError("state spec: excitation count " + std::to_string(k) +
                       " outside [0, n]");
    }
    desc.excitations = static_cast<int>(k);
  } else if (keyword == "random") {
    if (parts.size() != 3 || parts[2].rfind("seed=", 0) != 0) {
      throw ParseError(
          "state spec: random needs random:<n>:seed=<u64>");
    }
    desc.kind = StateDescriptor::Kind::Random;
    desc.n = detail::parse_party_count(parts[1], offsets[1]);
    const std::string seed_text = parts[2].substr(5);
    unsigned long long seed = 0;
    const auto [ptr, ec] = std::from_chars(
        seed_text.data(), seed_text.data() + seed_text.size(), seed);
    if (ec != std::errc{} || ptr != seed_text.data() + seed_text.size()) {
      throw ParseError("state spec: invalid seed at position " +
                       std::to_string(offsets[2] + 5));
    }
    desc.seed = seed;
  } else {
    throw ParseError("state spec: unknown kind \"" + keyword +
                     "\" at position 0 (expected ghz, w, dicke, smolin, "
                     "random, or file)");
  }
  return desc;
}

/// "all" or a comma-separated subset of 2..n; returns the resolved subset
/// (empty = all).
inline std::vector<int> parse_levels(const std::string& text, int parties) {
  if (text == "all" || text.empty()) return {};
  std::vector<int> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t end = text.find(',', begin);
    const std::string item = text.substr(begin, end - begin);
    const long long m = detail::parse_integer(item, begin);
    if (m < 2 || m > parties) {
      throw ParseError("level " + std::to_string(m) + " outside [2, " +
                       std::to_string(parties) + "]");
    }
    out.push_back(static_cast<int>(m));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Output assembly

namespace detail {

inline const char* command_name(CommandConfig::Command c) {
  switch (c) {
    case CommandConfig::Command::Compute: return "compute";
    case CommandConfig::Command::Sweep: return "sweep";
    case CommandConfig::Command::Verify: return "verify";
  }
  return "?";
}

inline std::string config_line(const CommandConfig& config, int parties) {
  std::ostringstream out;
  out << "command=" << command_name(config.command)
      << " state=" << config.state_spec << " n=" << parties
      << " steps=" << config.steps << " tol=" << format_double(config.tolerance)
      << " levels=" << (config.levels.empty() ? "all" : config.levels)
      << " theta_cap=" << format_double(config.theta_cap)
      << " max_iter=" << config.max_iterations << " format="
      << (config.format == CommandConfig::Format::Csv ? "csv" : "structured")
      << " extrapolate=" << (config.extrapolate ? 1 : 0);
  return out.str();
}

inline std::string flags_field(const CorrelationRecord& rec) {
  std::string out;
  for (std::size_t i = 0; i < rec.level_status.size(); ++i) {
    const LevelStatus s = rec.level_status[i];
    if (s == LevelStatus::Converged || s == LevelStatus::ClosedForm) continue;
    if (!out.empty()) out += ';';
    out += 'm' + std::to_string(i + 2) + ':' + level_status_label(s);
  }
  return out.empty() ? "ok" : out;
}

inline void csv_header(std::ostream& out, const CommandConfig& config,
                       int parties) {
  out << "# irrcorr " << kVersion << '\n';
  out << "# " << config_line(config, parties) << '\n';
  out << "k,p0,S_bits,C_T_bits";
  for (int m = 2; m <= parties; ++m) out << ",C_" << m << "_bits";
  out << ",max_residual,total_iterations,flags\n";
}

inline void csv_record(std::ostream& out, const CorrelationRecord& rec) {
  out << rec.k << ',' << format_double(rec.p0) << ','
      << format_double(rec.entropy_bits) << ','
      << format_double(rec.total_bits);
  for (const double c : rec.level_bits) out << ',' << format_double(c);
  out << ',' << format_double(rec.max_residual) << ',' << rec.iterations_total
      << ',' << flags_field(rec) << '\n';
}

inline nlohmann::json record_json(const CorrelationRecord& rec) {
  nlohmann::json j;
  j["k"] = rec.k;
  j["p0"] = rec.p0;
  j["S_bits"] = rec.entropy_bits;
  j["C_T_bits"] = rec.total_bits;
  nlohmann::json levels;
  nlohmann::json flags;
  for (std::size_t i = 0; i < rec.level_bits.size(); ++i) {
    const std::string key = std::to_string(i + 2);
    if (std::isnan(rec.level_bits[i])) {
      levels[key] = nullptr;
    } else {
      levels[key] = rec.level_bits[i];
    }
    flags[key] = level_status_label(rec.level_status[i]);
  }
  j["C_bits"] = levels;
  j["flags"] = flags;
  j["max_residual"] = rec.max_residual;
  j["total_iterations"] = rec.iterations_total;
  return j;
}

inline nlohmann::json config_json(const CommandConfig& config, int parties) {
  nlohmann::json j;
  j["command"] = command_name(config.command);
  j["state"] = config.state_spec;
  j["n"] = parties;
  j["steps"] = config.steps;
  j["tol"] = config.tolerance;
  j["levels"] = config.levels.empty() ? "all" : config.levels;
  j["theta_cap"] = config.theta_cap;
  j["max_iter"] = config.max_iterations;
  j["format"] =
      config.format == CommandConfig::Format::Csv ? "csv" : "structured";
  j["extrapolate"] = config.extrapolate;
  j["version"] = kVersion;
  return j;
}

struct LevelCertificate {
  int level = 0;
  bool computed = false;  // false: projection too close to the boundary
  CertificateReport report;
};

inline std::vector<LevelCertificate> run_certificates(
    const Decomposition& dec, const MomentVector& full_targets,
    double tolerance) {
  std::vector<LevelCertificate> out;
  for (const LevelProjection& lvl : dec.chain) {
    if (!lvl.result.has_value()) continue;
    LevelCertificate cert;
    cert.level = lvl.level;
    if (lvl.result->state.min_eigenvalue() >= tol::kFullRank) {
      cert.computed = true;
      cert.report = certify(*lvl.result, full_targets, tolerance);
    }
    out.push_back(cert);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// compute

inline int run_compute(const CommandConfig& config, std::ostream& out,
                       std::ostream& diag) {
  const StateDescriptor desc = parse_state_spec(config.state_spec);
  const DensityMatrix rho = build_state(desc);
  if (rho.min_eigenvalue() < tol::kFullRank) {
    diag << "compute: state is rank deficient (min eigenvalue "
         << format_double(rho.min_eigenvalue())
         << "); use `sweep`, which approaches such states through the "
            "depolarizing continuation\n";
    return kExitInvalid;
  }
  SolveOptions options{config.tolerance, config.max_iterations,
                       config.theta_cap,
                       parse_levels(config.levels, rho.parties())};
  const Decomposition dec = correlation_levels(rho, nullptr, options);
  CorrelationRecord rec = dec.record;
  rec.k = 0;
  rec.p0 = desc.p0.value_or(0.0);
  const auto certificates = detail::run_certificates(
      dec, moment_vector(rho, rho.parties()), config.tolerance);

  if (config.format == CommandConfig::Format::Csv) {
    detail::csv_header(out, config, rho.parties());
    detail::csv_record(out, rec);
    for (const auto& cert : certificates) {
      if (cert.computed) {
        out << "# certificate level=" << cert.level
            << " r7=" << format_double(cert.report.r7)
            << " r8=" << format_double(cert.report.r8)
            << " pass=" << (cert.report.pass ? 1 : 0) << '\n';
      } else {
        out << "# certificate level=" << cert.level
            << " skipped (projection near the family boundary)\n";
      }
    }
  } else {
    nlohmann::json j;
    j["config"] = detail::config_json(config, rho.parties());
    j["result"] = detail::record_json(rec);
    nlohmann::json certs = nlohmann::json::array();
    for (const auto& cert : certificates) {
      nlohmann::json c;
      c["level"] = cert.level;
      c["computed"] = cert.computed;
      if (cert.computed) {
        c["r7"] = cert.report.r7;
        c["r8"] = cert.report.r8;
        c["pass"] = cert.report.pass;
      }
      certs.push_back(c);
    }
    j["certificates"] = certs;
    out << j.dump(2) << '\n';
  }
  return rec.all_converged() ? kExitOk : kExitFlagged;
}

// ---------------------------------------------------------------------------
// sweep

inline int run_sweep(const CommandConfig& config, std::ostream& out,
                     std::ostream& diag) {
  (void)diag;
  const StateDescriptor desc = parse_state_spec(config.state_spec);
  const DensityMatrix rho = build_state(desc);
  SolveOptions options{config.tolerance, config.max_iterations,
                       config.theta_cap,
                       parse_levels(config.levels, rho.parties())};
  const SweepResult result = sweep(rho, SweepSchedule{config.steps}, options);

  if (config.format == CommandConfig::Format::Csv) {
    detail::csv_header(out, config, rho.parties());
    for (const CorrelationRecord& rec : result.records) {
      detail::csv_record(out, rec);
    }
    if (config.extrapolate) {
      try {
        for (const LimitEstimate& lim : extrapolate_limit(result)) {
          out << "# limit C_" << lim.level
              << ": raw(p0=" << format_double(lim.raw_p0)
              << ")=" << format_double(lim.raw_bits)
              << " linear(p0->0)=" << format_double(lim.limit_bits) << '\n';
        }
      } catch (const InsufficientData& e) {
        out << "# limit unavailable: " << e.what() << '\n';
      }
    }
  } else {
    nlohmann::json j;
    j["config"] = detail::config_json(config, rho.parties());
    nlohmann::json records = nlohmann::json::array();
    for (const CorrelationRecord& rec : result.records) {
      records.push_back(detail::record_json(rec));
    }
    j["records"] = records;
    if (config.extrapolate) {
      nlohmann::json limits = nlohmann::json::array();
      try {
        for (const LimitEstimate& lim : extrapolate_limit(result)) {
          nlohmann::json l;
          l["level"] = lim.level;
          l["raw_p0"] = lim.raw_p0;
          l["raw_bits"] = lim.raw_bits;
          l["limit_bits"] = lim.limit_bits;
          limits.push_back(l);
        }
      } catch (const InsufficientData&) {
        // leave the array as collected
      }
      j["limits"] = limits;
    }
    out << j.dump(2) << '\n';
  }
  return kExitOk;  // solver flags are data, not failures
}

// ---------------------------------------------------------------------------
// verify

namespace detail {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline bool is_diagonal(const DensityMatrix& rho) {
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    for (Eigen::Index j = 0; j < rho.dim(); ++j) {
      if (i != j && std::abs(rho.mat()(i, j)) > 1e-10) return false;
    }
  }
  return true;
}

}  // namespace detail

inline int run_verify(const CommandConfig& config, std::ostream& out,
                      std::ostream& diag) {
  (void)diag;
  const StateDescriptor desc = parse_state_spec(config.state_spec);
  const DensityMatrix rho = build_state(desc);
  const int n = rho.parties();
  std::vector<detail::VerifyCheck> checks;
  std::vector<std::string> notes;

  const bool full_rank = rho.min_eigenvalue() >= tol::kFullRank;
  if (!full_rank) {
    notes.push_back("rank-deficient state (min eigenvalue " +
                    format_double(rho.min_eigenvalue()) +
                    "): projection certificates need p0 > 0; boundary "
                    "behavior is handled by sweep warm starts and reported "
                    "through flags");
    // entropy identity route for C_T still applies
    const DensityMatrix product = product_of_marginals(rho);
    double marginal_sum = 0.0;
    for (int party = 0; party < n; ++party) {
      marginal_sum += vn_entropy(partial_trace(rho, {party}));
    }
    const double via_entropy = marginal_sum - vn_entropy(rho);
    const double via_rel = rel_entropy(rho, product);
    checks.push_back(
        {"total correlation via entropy identity",
         std::abs(via_entropy - via_rel) <= 1e-6,
         "C_T = " + format_double(via_entropy) + " bits; relative-entropy "
         "route differs by " + format_double(via_entropy - via_rel)});
  } else {
    SolveOptions options{config.tolerance, config.max_iterations,
                         config.theta_cap, {}};
    const Decomposition dec = correlation_levels(rho, nullptr, options);
    const CorrelationRecord& rec = dec.record;

    const auto certificates = detail::run_certificates(
        dec, moment_vector(rho, n), config.tolerance);
    for (const auto& cert : certificates) {
      if (!cert.computed) {
        notes.push_back("level-" + std::to_string(cert.level) +
                        " certificate skipped: projection near the family "
                        "boundary");
        continue;
      }
      checks.push_back({"level-" + std::to_string(cert.level) + " certificate",
                        cert.report.pass,
                        "r7=" + format_double(cert.report.r7) +
                            " r8=" + format_double(cert.report.r8) +
                            " (bound " +
                            format_double(10.0 * config.tolerance) + ")"});
    }

    double sum = 0.0;
    bool complete = true;
    for (const double c : rec.level_bits) {
      if (std::isnan(c)) {
        complete = false;
      } else {
        sum += c;
      }
    }
    if (complete) {
      checks.push_back({"sum rule",
                        std::abs(rec.total_bits - sum) <= 1e-6,
                        "|C_T - sum C_m| = " +
                            format_double(std::abs(rec.total_bits - sum))});
    }

    double marginal_sum = 0.0;
    for (int party = 0; party < n; ++party) {
      marginal_sum += vn_entropy(partial_trace(rho, {party}));
    }
    const double identity = marginal_sum - vn_entropy(rho);
    checks.push_back({"entropy identity",
                      std::abs(rec.total_bits - identity) <= 1e-6,
                      "|C_T - (sum S_i - S)| = " +
                          format_double(std::abs(rec.total_bits - identity))});

    // per-level entropy differences across the chain
    std::map<int, double> chain_entropy;
    chain_entropy[1] = vn_entropy(dec.product_state);
    bool chain_ok = true;
    for (const LevelProjection& lvl : dec.chain) {
      if (!lvl.result.has_value() ||
          (lvl.status != LevelStatus::Converged &&
           lvl.status != LevelStatus::ClosedForm)) {
        chain_ok = false;
        continue;
      }
      chain_entropy[lvl.level] = vn_entropy(lvl.result->state);
    }
    chain_entropy[n] = vn_entropy(rho);
    if (chain_ok && chain_entropy.size() == static_cast<std::size_t>(n)) {
      double worst = 0.0;
      for (int m = 2; m <= n; ++m) {
        if (!chain_entropy.count(m) || !chain_entropy.count(m - 1)) continue;
        const double expected = chain_entropy[m - 1] - chain_entropy[m];
        worst = std::max(
            worst, std::abs(rec.level_bits[static_cast<std::size_t>(m - 2)] -
                            expected));
      }
      checks.push_back({"per-level entropy identities", worst <= 1e-6,
                        "worst |C_m - (S_{m-1} - S_m)| = " +
                            format_double(worst)});
    }

    if (n == 2) {
      const double mi = mutual_information_check(rho);
      checks.push_back({"mutual information closed form",
                        std::abs(rec.level_bits[0] - mi) <= 1e-7,
                        "|C_2 - I(A:B)| = " +
                            format_double(std::abs(rec.level_bits[0] - mi))});
    }

    if (n <= 3 && detail::is_diagonal(rho)) {
      const JointDistribution p = diagonal_extraction(rho);
      for (const LevelProjection& lvl : dec.chain) {
        if (!lvl.result.has_value() || lvl.status != LevelStatus::Converged)
          continue;
        const JointDistribution fitted = ipf_maxent(p, lvl.level, 1e-12);
        const Vector diag_part = lvl.result->state.mat().diagonal().real();
        const double mismatch =
            (diag_part - fitted.probabilities).cwiseAbs().maxCoeff();
        double off = 0.0;
        for (Eigen::Index i = 0; i < rho.dim(); ++i) {
          for (Eigen::Index j = 0; j < rho.dim(); ++j) {
            if (i != j) {
              off = std::max(off, std::abs(lvl.result->state.mat()(i, j)));
            }
          }
        }
        checks.push_back(
            {"IPF cross-check level " + std::to_string(lvl.level),
             mismatch <= 1e-7 && off <= 1e-9,
             "max |diag(rho_m) - ipf| = " + format_double(mismatch) +
                 ", off-diagonal = " + format_double(off)});
      }
    }
  }

  bool all_pass = true;
  for (const auto& check : checks) all_pass = all_pass && check.pass;

  if (config.format == CommandConfig::Format::Csv) {
    out << "# irrcorr " << kVersion << '\n';
    out << "# " << detail::config_line(config, n) << '\n';
    for (const auto& note : notes) out << "[INFO] " << note << '\n';
    for (const auto& check : checks) {
      out << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << ": "
          << check.detail << '\n';
    }
    out << "verify: " << (all_pass ? "all checks passed" : "CHECKS FAILED")
        << " (" << checks.size() << " checks, " << notes.size() << " notes)\n";
  } else {
    nlohmann::json j;
    j["config"] = detail::config_json(config, n);
    nlohmann::json checks_json = nlohmann::json::array();
    for (const auto& check : checks) {
      nlohmann::json c;
      c["name"] = check.name;
      c["pass"] = check.pass;
      c["detail"] = check.detail;
      checks_json.push_back(c);
    }
    j["checks"] = checks_json;
    j["notes"] = notes;
    j["pass"] = all_pass;
    out << j.dump(2) << '\n';
  }
  return all_pass ? kExitOk : kExitFlagged;
}

inline int run_command(const CommandConfig& config, std::ostream& out,
                       std::ostream& diag) {
  switch (config.command) {
    case CommandConfig::Command::Compute: return run_compute(config, out, diag);
    case CommandConfig::Command::Sweep: return run_sweep(config, out, diag);
    case CommandConfig::Command::Verify: return run_verify(config, out, diag);
  }
  return kExitInvalid;
}

}  // namespace irrcorr
