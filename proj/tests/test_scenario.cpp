#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "mip/scenario.hpp"

using namespace mip;

namespace {

std::string fixture(const std::string& name) { return std::string(MIP_SCENARIO_DIR) + "/" + name; }

ErrorCode code_of(const std::string& text) {
  try {
    parse_scenario_text(text, "test");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure");
  return ErrorCode::internal;
}

std::string message_of(const std::string& text) {
  try {
    parse_scenario_text(text, "test");
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* kMinimal = R"({
  "name": "minimal",
  "dim": 2,
  "f": {"type": "gaussian", "sigma_inv": 1.0},
  "g": {"type": "indicator", "body": {"type": "ball", "radius": 1.0}}
})";

}  // namespace

TEST_SUITE("scenario_parse") {
  TEST_CASE("minimal text fills the defaults") {
    auto s = parse_scenario_text(kMinimal, "inline");
    CHECK(s.name == "minimal");
    CHECK(s.dim == 2);
    CHECK(s.budget == (1 << 16));
    CHECK(s.seed == 1);
    CHECK(s.mode == DetMode::unit_det);
    CHECK(!s.flags.even_symmetry);
    CHECK(s.f.dim() == 2);
    CHECK(s.g.is_indicator());
  }

  TEST_CASE("echo is normalized and stable under reparsing") {
    auto s = parse_scenario_text(kMinimal, "inline");
    CHECK(s.echo.find("\"mean\"") != std::string::npos);
    CHECK(s.echo.find("\"budget\"") != std::string::npos);
    auto again = parse_scenario_text(s.echo, "echo");
    CHECK(again.echo == s.echo);
    CHECK(again.budget == s.budget);
    CHECK(again.mode == s.mode);
  }

  TEST_CASE("scalar sigma expands to the matrix form in the echo") {
    auto s = parse_scenario_text(kMinimal, "inline");
    CHECK(s.echo.find("sigma_inv") != std::string::npos);
    CHECK(s.echo.find("[") != std::string::npos);
  }

  TEST_CASE("fixture files parse with their declared settings") {
    auto pair = parse_scenario(fixture("gauss_pair.json"));
    CHECK(pair.name == "gaussian-pair");
    CHECK(pair.budget == 16384);
    CHECK(pair.seed == 3);
    CHECK(pair.flags.even_symmetry);
    CHECK(pair.f.even());
    CHECK(pair.g.even());

    auto fixed = parse_scenario(fixture("gauss_cube.json"));
    CHECK(fixed.mode == DetMode::fixed_det);
    CHECK(fixed.det_target == doctest::Approx(1.0));
    CHECK(fixed.f.support().kind() != BodyKind::all_space);

    auto displaced = parse_scenario(fixture("displaced_box.json"));
    CHECK(!displaced.f.even());
    Vec p(2);
    p << 1.5, 0.0;
    CHECK(displaced.f.support().classify(p, 1e-9) == Region::interior);
  }

  TEST_CASE("mode accepts the three spellings") {
    std::string free_text = kMinimal;
    free_text.insert(free_text.rfind('}'), ", \"mode\": \"free\"");
    CHECK(parse_scenario_text(free_text, "t").mode == DetMode::free_det);
    std::string fixed_text = kMinimal;
    fixed_text.insert(fixed_text.rfind('}'), ", \"mode\": {\"type\": \"fixed\", \"target\": 2.5}");
    auto s = parse_scenario_text(fixed_text, "t");
    CHECK(s.mode == DetMode::fixed_det);
    CHECK(s.det_target == doctest::Approx(2.5));
  }
}

TEST_SUITE("scenario_errors") {
  TEST_CASE("truncated json is a parse error naming the origin") {
    CHECK(code_of("{\"name\": \"x\", ") == ErrorCode::parse);
    try {
      parse_scenario(fixture("bad_truncated.json"));
      FAIL("expected a parse failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
      CHECK(std::string(e.what()).find("bad_truncated.json") != std::string::npos);
    }
  }

  TEST_CASE("missing file is reported") {
    CHECK_THROWS_AS(parse_scenario(fixture("no_such_file.json")), Error);
  }

  TEST_CASE("unknown keys are rejected at every level") {
    std::string top = kMinimal;
    top.insert(top.rfind('}'), ", \"extra\": 1");
    CHECK(code_of(top) == ErrorCode::parse);
    CHECK(message_of(top).find("extra") != std::string::npos);

    std::string inner = R"({
      "name": "x", "dim": 2,
      "f": {"type": "gaussian", "sigma_inv": 1.0, "spare": true},
      "g": {"type": "gaussian", "sigma_inv": 1.0}
    })";
    CHECK(code_of(inner) == ErrorCode::parse);
  }

  TEST_CASE("dimension conflicts name the field") {
    std::string bad = R"({
      "name": "x", "dim": 2,
      "f": {"type": "gaussian", "sigma_inv": 1.0, "mean": [1.0, 0.0, 0.0]},
      "g": {"type": "gaussian", "sigma_inv": 1.0}
    })";
    CHECK(code_of(bad) == ErrorCode::invalid_argument);
    CHECK(message_of(bad).find("mean") != std::string::npos);
  }

  TEST_CASE("declared even symmetry must match the functions") {
    std::string bad = R"({
      "name": "x", "dim": 2,
      "f": {"type": "gaussian", "sigma_inv": 1.0, "mean": [0.5, 0.0]},
      "g": {"type": "gaussian", "sigma_inv": 1.0},
      "declared_flags": {"even_symmetry": true}
    })";
    CHECK(code_of(bad) == ErrorCode::invalid_argument);
    CHECK(message_of(bad).find("even_symmetry") != std::string::npos);
  }

  TEST_CASE("invalid numeric fields are rejected") {
    std::string neg_radius = R"({
      "name": "x", "dim": 2,
      "f": {"type": "indicator", "body": {"type": "ball", "radius": -1.0}},
      "g": {"type": "gaussian", "sigma_inv": 1.0}
    })";
    CHECK_THROWS_AS(parse_scenario_text(neg_radius, "t"), Error);

    std::string zero_budget = kMinimal;
    zero_budget.insert(zero_budget.rfind('}'), ", \"budget\": 0");
    CHECK(code_of(zero_budget) == ErrorCode::invalid_argument);

    std::string big_dim = R"({
      "name": "x", "dim": 40,
      "f": {"type": "gaussian", "sigma_inv": 1.0},
      "g": {"type": "gaussian", "sigma_inv": 1.0}
    })";
    CHECK(code_of(big_dim) == ErrorCode::invalid_argument);

    std::string bad_target = kMinimal;
    bad_target.insert(bad_target.rfind('}'), ", \"mode\": {\"type\": \"fixed\", \"target\": 0.0}");
    CHECK(code_of(bad_target) == ErrorCode::invalid_argument);
  }

  TEST_CASE("polytope rows and offsets must agree") {
    std::string bad = R"({
      "name": "x", "dim": 2,
      "f": {"type": "indicator", "body": {"type": "hpolytope",
            "rows": [[1.0, 0.0], [-1.0, 0.0]], "offsets": [1.0]}},
      "g": {"type": "gaussian", "sigma_inv": 1.0}
    })";
    CHECK_THROWS_AS(parse_scenario_text(bad, "t"), Error);
  }

  TEST_CASE("unknown mode and function types are named") {
    std::string bad_mode = kMinimal;
    bad_mode.insert(bad_mode.rfind('}'), ", \"mode\": \"loose\"");
    CHECK(code_of(bad_mode) == ErrorCode::parse);

    std::string bad_type = R"({
      "name": "x", "dim": 2,
      "f": {"type": "mystery"},
      "g": {"type": "gaussian", "sigma_inv": 1.0}
    })";
    CHECK(code_of(bad_type) == ErrorCode::parse);
  }
}
