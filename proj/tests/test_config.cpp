#include <doctest.h>

#include "freespectra/config.hpp"
#include "freespectra/error.hpp"

using namespace fsp;

namespace {

constexpr const char* kMinimal = R"([run]
command = density

[model]
poly = x1
r = 1
t = 0
)";

// Line and column of the ParseError raised by text, or {-1, -1}.
std::pair<int, int> error_at(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return {e.line(), e.column()};
  }
  return {-1, -1};
}

std::string error_text(std::string_view text) {
  try {
    parse_config(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal config takes every default") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.command == "density");
  CHECK(cfg.polynomial == "x1");
  CHECK(cfg.r == 1);
  CHECK(cfg.t == 0);
  CHECK(cfg.eps == Defaults::eps);
  CHECK(cfg.threshold == Defaults::threshold);
  CHECK(cfg.trials == Defaults::trials);
  CHECK(cfg.solver.tol == Defaults::solver_tol);
  CHECK(cfg.ns == std::vector<int>{Defaults::n});
  CHECK(cfg.law == EntryLaw::gaussian());
  CHECK_FALSE(cfg.truncation.has_value());
  CHECK(Defaults::table().at("trials") == 20);
}

TEST_CASE("full config") {
  const auto cfg = parse_config(R"(# gap experiment
[run]
command = verify-gap
eps = 0.002
delta = 0.15
gap = -0.5, 0.5   # tested interval
output = gap_run

[model]
poly = x1 + a1
r = 1
t = 1
model_n = 64

[det.a1]
kind = diag
values = 2, -2

[wigner]
law = uniform
truncation = 12
convolution = 0.1
n = 128, 256
trials = 4
seed = 77

; solver knobs
[solver]
tol = 1e-10
max_iter = 500
damping_min = 0.1
newton = false
)");
  CHECK(cfg.command == "verify-gap");
  CHECK(cfg.eps == 0.002);
  CHECK(cfg.delta == 0.15);
  REQUIRE(cfg.gap.has_value());
  CHECK(cfg.gap->first == -0.5);
  CHECK(cfg.output == "gap_run");
  CHECK(cfg.model_n == 64);
  REQUIRE(cfg.dets.size() == 1);
  CHECK(cfg.dets[0] == DetSpec::diag({2.0, -2.0}));
  CHECK(cfg.law == EntryLaw::uniform());
  CHECK(cfg.truncation == 12.0);
  CHECK(cfg.convolution == 0.1);
  CHECK(cfg.ns == std::vector<int>{128, 256});
  CHECK(cfg.trials == 4);
  CHECK(cfg.seed == 77);
  CHECK(cfg.solver.tol == 1e-10);
  CHECK(cfg.solver.max_iter == 500);
  CHECK_FALSE(cfg.solver.use_newton);
}

TEST_CASE("deterministic generator kinds") {
  const auto cfg = parse_config(R"([run]
command = simulate
[model]
poly = a1 + a2 + a3 + a4
r = 0
t = 4
[det.a1]
kind = diag
values = 1, -1
[det.a2]
kind = projection
fraction = 0.25
[det.a3]
kind = toeplitz
values = 0, 1
[det.a4]
kind = file
path = a4.csv
)");
  REQUIRE(cfg.dets.size() == 4);
  CHECK(cfg.dets[1] == DetSpec::projection(0.25));
  CHECK(cfg.dets[2] == DetSpec::toeplitz({0.0, 1.0}));
  CHECK(cfg.dets[3] == DetSpec::file("a4.csv"));
}

TEST_CASE("errors point at the offending line and column") {
  SUBCASE("undeclared generator") {
    const auto [line, col] = error_at("[run]\ncommand = density\n[model]\nr = 2\npoly = x1 + x3\n");
    CHECK(line == 5);
    CHECK(col == 13);
    CHECK(error_text("[run]\ncommand = density\n[model]\nr = 2\npoly = x1 + x3\n").find("x3") != std::string::npos);
  }
  SUBCASE("duplicate key") {
    const std::string text = "[run]\ncommand = density\n[model]\npoly = x1\npoly = x1\n";
    CHECK(error_at(text) == std::pair{5, 1});
    CHECK(error_text(text).find("duplicate key 'poly'") != std::string::npos);
  }
  SUBCASE("unknown key") {
    const std::string text = std::string(kMinimal) + "colour = blue\n";
    CHECK(error_at(text).first == 8);
    CHECK(error_text(text).find("unknown key 'colour'") != std::string::npos);
  }
  SUBCASE("missing required keys") {
    CHECK(error_text("[model]\npoly = x1\n").find("'command'") != std::string::npos);
    CHECK(error_at("[run]\ncommand = density\n[model]\nr = 1\n") == std::pair{3, 1});
    CHECK(error_text("[run]\ncommand = density\n[model]\npoly = a1\nr = 0\nt = 1\n").find("[det.a1]") !=
          std::string::npos);
    CHECK(error_text("[run]\ncommand = density\n[model]\npoly = a1\nr = 0\nt = 1\n[det.a1]\nkind = diag\n")
              .find("'values'") != std::string::npos);
  }
  SUBCASE("bad values") {
    CHECK(error_at("[run]\ncommand = fly\n[model]\npoly = x1\n") == std::pair{2, 11});
    CHECK(error_at("[run]\ncommand = density\neps = -1\n[model]\npoly = x1\n").first == 3);
    CHECK(error_at("[run]\ncommand = density\n[model]\npoly = x1\n[wigner]\ntrials = many\n").first == 6);
    CHECK(error_at("[run]\ncommand = density\n[model]\npoly = x1\n[wigner]\nlaw = cauchy\n").first == 6);
    CHECK(error_at("[run]\ncommand = density\n[mode]\n").first == 3);
    CHECK(error_at("[run]\ncommand = density\n[run]\n").first == 3);
    CHECK(error_at("command = density\n").first == 1);
    CHECK(error_at("[run]\ncommand density\n").first == 2);
    CHECK(error_at("[run]\ncommand = density\n[model]\npoly = x1\nr = 1\nt = 0\n[det.a1]\nkind = diag\n").first == 7);
  }
}

TEST_CASE("echo-back round trip") {
  const std::vector<std::string> texts{kMinimal, R"([run]
command = verify-norm
tolerance = 0.05
grid = -3, 3, 0.01
[model]
poly = x1*a1 + a1*x1 + 0.5*x1^2 - 1
r = 1
t = 1
[det.a1]
kind = toeplitz
values = 0.1, 0.7, 0.3
[wigner]
law = student_t(5)
truncation = 20
convolution = 0.25
n = 100, 200, 400
seed = 18446744073709551615
[solver]
tol = 3.3e-12
continuation_start = 2
)"};
  for (const auto& text : texts) {
    const auto cfg = parse_config(text);
    const std::string echo = to_text(cfg);
    CHECK(parse_config(echo) == cfg);
    CHECK(to_text(parse_config(echo)) == echo);
    CHECK(echo.find("tol = ") != std::string::npos);
    CHECK(echo.find("trials = ") != std::string::npos);
  }
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);
}
