#include <doctest.h>

#include <cmath>

#include "thermoshift/config.hpp"
#include "thermoshift/json_io.hpp"
#include "thermoshift/runner.hpp"

using namespace thermoshift;

namespace {

ordered_json base_cf_config() {
  ordered_json j;
  j["config_version"] = 1;
  j["system"] = {{"family", "cf"},
                 {"digits", {1, 2}},
                 {"domain", {1.0 / 3.0, 1.0}},
                 {"s_param", 0.5313}};
  return j;
}

}  // namespace

TEST_CASE("parse_config defaults and validation") {
  SUBCASE("defaults fill in") {
    ordered_json j;
    j["system"] = {{"family", "bernoulli"}, {"weights", {0.5, 0.5}}};
    const SystemConfig cfg = parse_config(j);
    CHECK(cfg.numerics.cutoff == 50);
    CHECK(cfg.numerics.grid == 2048);
    CHECK(cfg.pressure.n_max == 10);
    CHECK(cfg.numerics.tol == doctest::Approx(1e-10));
    const Model m = build_model(cfg);
    CHECK(m.dist.Q == 1.0);
    CHECK(m.separated);
  }

  SUBCASE("cf on [0,1] is rejected naming the offending map") {
    ordered_json j = base_cf_config();
    j["system"]["domain"] = {0.0, 1.0};
    const SystemConfig cfg = parse_config(j);
    CHECK_THROWS_WITH_AS(build_model(cfg),
                         doctest::Contains("cf(digit=1)"), ConfigError);
  }

  SUBCASE("cf on [1/3,1] verifies with s = 9/16") {
    const SystemConfig cfg = parse_config(base_cf_config());
    const Model m = build_model(cfg);
    CHECK(m.contraction.contractive);
    CHECK(m.contraction.s_estimate == doctest::Approx(9.0 / 16.0).epsilon(1e-12));
    CHECK(m.separated);
  }

  SUBCASE("digit range strings") {
    ordered_json j;
    j["system"] = {{"family", "cf"},
                   {"digits", "2..6"},
                   {"domain", {0.0, 0.5}},
                   {"s_param", 1.0}};
    const SystemConfig cfg = parse_config(j);
    CHECK(cfg.digits.list.size() == 5);
    CHECK(cfg.digits.list.front() == 2);
    CHECK_NOTHROW(build_model(cfg));
  }

  SUBCASE("missing family errors") {
    ordered_json j;
    j["system"] = ordered_json::object();
    CHECK_THROWS_AS(parse_config(j), ConfigError);
  }
}

TEST_CASE("apply_override") {
  ordered_json j = base_cf_config();
  apply_override(j, "system.s_param=0.6");
  CHECK(parse_config(j).s_param == doctest::Approx(0.6));
  apply_override(j, "numerics.grid=512");
  CHECK(parse_config(j).numerics.grid == 512);
  apply_override(j, "system.digits=[1,2]");
  CHECK(parse_config(j).digits.list.size() == 2);
  CHECK_THROWS_AS(apply_override(j, "nonsense"), ConfigError);
}

TEST_CASE("deterministic JSON dump") {
  ordered_json j;
  j["b"] = 1.0 / 3.0;
  j["a"] = ordered_json::array({1.5, 2u, true, "x"});
  const std::string once = dump_deterministic(j, 17, 2);
  const std::string twice = dump_deterministic(j, 17, 2);
  CHECK(once == twice);
  CHECK(once.find("0.33333333333333331") != std::string::npos);
  // insertion order preserved, not alphabetical
  CHECK(once.find("\"b\"") < once.find("\"a\""));
}

TEST_CASE("run_command pressure on bernoulli") {
  ordered_json j;
  j["system"] = {{"family", "bernoulli"}, {"weights", {0.5, 0.5}}};
  j["pressure"] = {{"n_max", 10}};
  const SystemConfig cfg = parse_config(j);
  RunOptions opt;
  opt.threads = 1;
  const RunOutcome out = run_command("pressure", cfg, opt);
  CHECK(out.exit_code == 0);
  CHECK(out.report.at("pass").get<bool>());
  const auto& pres = out.report.at("results").at("pressure");
  CHECK(std::abs(pres.at("point").get<double>()) < 1e-10);
  CHECK(pres.at("upper").get<double>() - pres.at("lower").get<double>() <= 1e-9);
}

TEST_CASE("run_command verify-all on weighted bernoulli passes everything") {
  ordered_json j;
  j["system"] = {{"family", "bernoulli"}, {"weights", {2.0, 3.0}}};
  j["gibbs"] = {{"depth", 5}};
  j["pressure"] = {{"n_max", 8}};
  const SystemConfig cfg = parse_config(j);
  RunOptions opt;
  opt.threads = 1;
  const RunOutcome out = run_command("verify-all", cfg, opt);
  CHECK(out.exit_code == 0);
  CHECK(!out.tables_jsonl.empty());
  // every check row carries a pass flag
  for (const auto& row : out.report.at("checks")) CHECK(row.contains("pass"));
}

TEST_CASE("reports are byte-identical across thread counts") {
  ordered_json j = base_cf_config();
  j["gibbs"] = {{"depth", 4}};
  j["pressure"] = {{"n_max", 8}};
  j["numerics"] = {{"grid", 512}, {"z_grid", 128}};
  const SystemConfig cfg = parse_config(j);
  RunOptions a, b;
  a.threads = 1;
  b.threads = 8;
  const RunOutcome ra = run_command("verify-all", cfg, a);
  const RunOutcome rb = run_command("verify-all", cfg, b);
  CHECK(dump_deterministic(ra.report, 17, 2) == dump_deterministic(rb.report, 17, 2));
  CHECK(ra.tables_jsonl == rb.tables_jsonl);
}

TEST_CASE("gibbs command on an unseparated system is a config error") {
  ordered_json j;
  j["system"] = {{"family", "affine"},
                 {"maps", {{0.5, 0.0}, {0.5, 0.5}}},
                 {"domain", {0.0, 1.0}},
                 {"weights", {0.5, 0.5}}};
  const SystemConfig cfg = parse_config(j);
  CHECK_THROWS_AS(run_command("gibbs", cfg, {}), ConfigError);
  // pressure still runs fine on the same system
  CHECK_NOTHROW(run_command("pressure", cfg, {}));
}

TEST_CASE("solve_dimension degenerate closed forms") {
  SUBCASE("single branch: root at s = 0") {
    ordered_json j;
    j["system"] = {{"family", "affine"},
                   {"maps", {{0.5, 0.25}}},
                   {"domain", {0.0, 1.0}},
                   {"weights", {1.0}}};
    j["dimension"] = {{"s_lo", -0.5}, {"s_hi", 0.5}, {"tol_s", 1e-4}, {"n", 6}};
    j["numerics"] = {{"grid", 256}, {"z_grid", 64}};
    const SystemConfig cfg = parse_config(j);
    const Model m = build_model(cfg);
    const DimensionResult r = solve_dimension(cfg, m, 1);
    CHECK(r.valid);
    CHECK(std::abs(r.s_star) < 1e-3);
  }

  SUBCASE("two equal halves: root at s = 1") {
    ordered_json j;
    j["system"] = {{"family", "affine"},
                   {"maps", {{0.5, 0.0}, {0.5, 0.5}}},
                   {"domain", {0.0, 1.0}},
                   {"weights", {0.5, 0.5}}};
    j["dimension"] = {{"s_lo", 0.5}, {"s_hi", 1.5}, {"tol_s", 1e-4}, {"n", 6}};
    j["numerics"] = {{"grid", 256}, {"z_grid", 64}};
    const SystemConfig cfg = parse_config(j);
    const Model m = build_model(cfg);
    const DimensionResult r = solve_dimension(cfg, m, 1);
    CHECK(r.valid);
    CHECK(r.s_star == doctest::Approx(1.0).epsilon(1e-3));
  }

  SUBCASE("invalid bracket raises") {
    ordered_json j;
    j["system"] = {{"family", "affine"},
                   {"maps", {{0.5, 0.0}, {0.5, 0.5}}},
                   {"domain", {0.0, 1.0}},
                   {"weights", {0.5, 0.5}}};
    j["dimension"] = {{"s_lo", 1.2}, {"s_hi", 1.5}, {"tol_s", 1e-4}, {"n", 6}};
    j["numerics"] = {{"grid", 256}, {"z_grid", 64}};
    const SystemConfig cfg = parse_config(j);
    const Model m = build_model(cfg);
    CHECK_THROWS_AS(solve_dimension(cfg, m, 1), PreconditionError);
  }
}

TEST_CASE("unknown command") {
  ordered_json j;
  j["system"] = {{"family", "bernoulli"}, {"weights", {0.5, 0.5}}};
  CHECK_THROWS_AS(run_command("frobnicate", parse_config(j), {}), ConfigError);
}
