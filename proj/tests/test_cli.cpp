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

#include <filesystem>
#include <random>
#include <sstream>

#include "irrcorr/cli.hpp"
#include "test_helpers.hpp"

using namespace irrcorr;
namespace th = irrcorr::testing;

namespace {

std::pair<int, std::string> run(const CommandConfig& config) {
  std::ostringstream out, diag;
  const int code = run_command(config, out, diag);
  return {code, out.str()};
}

CommandConfig make_config(CommandConfig::Command command,
                          const std::string& spec) {
  CommandConfig config;
  config.command = command;
  config.state_spec = spec;
  return config;
}

/// Last data row of a CSV body, split on commas.
std::vector<std::string> last_row(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  }
  REQUIRE(rows.size() >= 2);  // header + data
  std::vector<std::string> fields;
  std::istringstream row(rows.back());
  std::string field;
  while (std::getline(row, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

TEST_CASE("state specs parse to descriptors") {
  const StateDescriptor g = parse_state_spec("ghz:4");
  CHECK(g.kind == StateDescriptor::Kind::Ghz);
  CHECK(g.n == 4);
  CHECK_FALSE(g.p0.has_value());
  CHECK(g.str() == "ghz:4");

  const StateDescriptor r = parse_state_spec("random:3:seed=42@p0=0.1");
  CHECK(r.kind == StateDescriptor::Kind::Random);
  CHECK(r.n == 3);
  CHECK(r.seed == 42);
  CHECK(r.p0.value() == Catch::Approx(0.1));
  CHECK(th::max_abs_diff(build_state(r).mat(), build_state(r).mat()) == 0.0);

  const StateDescriptor s = parse_state_spec("smolin");
  CHECK(s.kind == StateDescriptor::Kind::Smolin);
  CHECK(s.n == 4);

  const StateDescriptor d = parse_state_spec("dicke:4:2");
  CHECK(d.kind == StateDescriptor::Kind::Dicke);
  CHECK(d.excitations == 2);

  const StateDescriptor f = parse_state_spec("file:/tmp/some:state.json");
  CHECK(f.kind == StateDescriptor::Kind::File);
  CHECK(f.path == "/tmp/some:state.json");
}

TEST_CASE("state spec errors carry positions") {
  CHECK_THROWS_AS(parse_state_spec("dicke:9:2"), ParseError);  // above the cap
  CHECK_THROWS_AS(parse_state_spec("ghz:1"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("ghz:four"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("bell:2"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("smolin:4"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("random:3"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("random:3:seed=abc"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("ghz:3@p0=1.5"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("ghz:3@p=0.1"), ParseError);
  CHECK_THROWS_AS(parse_state_spec("file:"), ParseError);
  CHECK_THROWS_WITH(parse_state_spec("ghz:four"),
                    Catch::Matchers::ContainsSubstring("position"));
}

TEST_CASE("level lists parse and validate") {
  CHECK(parse_levels("all", 4).empty());
  CHECK(parse_levels("2,4", 4) == std::vector<int>{2, 4});
  CHECK(parse_levels("4,2,2", 4) == std::vector<int>{2, 4});
  CHECK_THROWS_AS(parse_levels("1", 4), ParseError);
  CHECK_THROWS_AS(parse_levels("5", 4), ParseError);
  CHECK_THROWS_AS(parse_levels("2,x", 4), ParseError);
}

TEST_CASE("format_double is fixed-width significant digits") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1e-9) == "1e-09");
  CHECK(format_double(0.001) == "0.001");
  CHECK(format_double(3.9855551848312) == "3.98555518483");
}

TEST_CASE("compute on the depolarized Bell pair matches the closed form") {
  auto config = make_config(CommandConfig::Command::Compute, "ghz:2@p0=0.5");
  const auto [code, text] = run(config);
  CHECK(code == kExitOk);
  const auto fields = last_row(text);
  // k,p0,S,C_T,C_2,res,iters,flags
  CHECK(std::stod(fields[1]) == Catch::Approx(0.5));
  CHECK(std::stod(fields[3]) ==
        Catch::Approx(0.45120505930460153).margin(1e-9));
  CHECK(std::stod(fields[4]) ==
        Catch::Approx(0.45120505930460153).margin(1e-9));
  CHECK(fields.back() == "ok");
}

TEST_CASE("compute rejects rank-deficient states with advice") {
  auto config = make_config(CommandConfig::Command::Compute, "smolin");
  std::ostringstream out, diag;
  const int code = run_command(config, out, diag);
  CHECK(code == kExitInvalid);
  CHECK(diag.str().find("sweep") != std::string::npos);
}

TEST_CASE("compute flags unconverged levels through the exit code") {
  auto config = make_config(CommandConfig::Command::Compute, "ghz:4@p0=0.3");
  config.max_iterations = 0;
  const auto [code, text] = run(config);
  CHECK(code == kExitFlagged);
  CHECK(text.find("maxiter") != std::string::npos);
}

TEST_CASE("compute on a product-state file reports zero correlations") {
  const auto path =
      std::filesystem::temp_directory_path() / "irrcorr_cli_product.json";
  std::mt19937_64 rng(81);
  save_state(path.string(), th::random_product_state(3, rng));
  auto config = make_config(CommandConfig::Command::Compute,
                            "file:" + path.string());
  const auto [code, text] = run(config);
  CHECK(code == kExitOk);
  const auto fields = last_row(text);
  CHECK(std::stod(fields[3]) == Catch::Approx(0.0).margin(1e-6));  // C_T
  CHECK(std::stod(fields[4]) == Catch::Approx(0.0).margin(1e-6));  // C_2
  CHECK(std::stod(fields[5]) == Catch::Approx(0.0).margin(1e-6));  // C_3
  std::filesystem::remove(path);
}

TEST_CASE("sweep output is deterministic byte for byte") {
  auto config = make_config(CommandConfig::Command::Sweep, "ghz:3");
  config.steps = 6;
  config.extrapolate = true;
  const auto [code_a, text_a] = run(config);
  const auto [code_b, text_b] = run(config);
  CHECK(code_a == kExitOk);
  CHECK(code_a == code_b);
  CHECK(text_a == text_b);
  CHECK(text_a.find("# limit C_2:") != std::string::npos);

  auto structured = config;
  structured.format = CommandConfig::Format::Structured;
  const auto [code_c, text_c] = run(structured);
  const auto [code_d, text_d] = run(structured);
  CHECK(code_c == kExitOk);
  CHECK(text_c == text_d);
  const auto parsed = nlohmann::json::parse(text_c);
  CHECK(parsed["records"].size() == 7);
  CHECK(parsed["config"]["state"] == "ghz:3");
}

TEST_CASE("sweep reports every level column for the requested subset") {
  auto config = make_config(CommandConfig::Command::Sweep, "ghz:4@p0=0.2");
  config.steps = 2;
  config.levels = "2";
  const auto [code, text] = run(config);
  CHECK(code == kExitOk);
  const auto fields = last_row(text);
  CHECK(fields.size() == 10);  // k,p0,S,C_T,C2,C3,C4,res,iters,flags
  CHECK(fields[5] == "nan");   // C_3 skipped
  CHECK(fields[6] == "nan");   // C_4 skipped
  CHECK(text.find("m3:skip") != std::string::npos);
}

TEST_CASE("verify passes its oracle suite on reference states") {
  for (const char* spec : {"ghz:2@p0=0.5", "random:3:seed=7@p0=0.2"}) {
    auto config = make_config(CommandConfig::Command::Verify, spec);
    const auto [code, text] = run(config);
    INFO(text);
    CHECK(code == kExitOk);
    CHECK(text.find("[FAIL]") == std::string::npos);
  }
}

TEST_CASE("verify cross-checks diagonal states against IPF") {
  // a diagonal 3-qubit state through the file interface
  const auto path =
      std::filesystem::temp_directory_path() / "irrcorr_cli_diag.json";
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Vector p(8);
  for (int i = 0; i < 8; ++i) p[i] = unif(rng);
  p /= p.sum();
  save_state(path.string(), diagonal_embedding(JointDistribution(3, p)));

  auto config =
      make_config(CommandConfig::Command::Verify, "file:" + path.string());
  const auto [code, text] = run(config);
  INFO(text);
  CHECK(code == kExitOk);
  CHECK(text.find("IPF cross-check level 2") != std::string::npos);
  CHECK(text.find("[FAIL]") == std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("verify handles rank-deficient input via the entropy identity") {
  auto config = make_config(CommandConfig::Command::Verify, "smolin");
  const auto [code, text] = run(config);
  CHECK(code == kExitOk);
  CHECK(text.find("rank-deficient") != std::string::npos);
  CHECK(text.find("C_T = 2 bits") != std::string::npos);
}
