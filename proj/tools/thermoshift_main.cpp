// thermoshift command-line runner.
//
// Subcommands: pressure, eigen, gibbs, recurrence, equilibrium, dimension,
// verify-all. Reports go to stdout as one JSON document; diagnostics to
// stderr. Exit codes: 0 pass, 1 invariant failure, 2 usage/config error,
// 3 resource cap.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermoshift/thermoshift.hpp"

namespace ts = thermoshift;

namespace {

ts::ordered_json builtin_config(const std::string& tag) {
  ts::ordered_json j;
  j["config_version"] = 1;
  if (tag == "bernoulli") {
    j["system"] = {{"family", "bernoulli"}, {"weights", {0.5, 0.5}}};
  } else if (tag == "affine") {
    j["system"] = {{"family", "affine"},
                   {"maps", {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}}},
                   {"domain", {0.0, 1.0}},
                   {"weights", {0.5, 0.5}}};
  } else if (tag == "geometric") {
    j["system"] = {{"family", "geometric"}, {"symbols", 40}};
  } else if (tag == "cf") {
    j["system"] = {{"family", "cf"},
                   {"digits", {1, 2}},
                   {"domain", {1.0 / 3.0, 1.0}},
                   {"s_param", 0.5313}};
  } else {
    throw ts::ConfigError("unknown --system tag: " + tag +
                          " (expected bernoulli|affine|geometric|cf)");
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermoshift: transfer-operator thermodynamics for contractive IFS"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, system_tag, out_path, tables_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool timing = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--system", system_tag, "built-in system tag (bernoulli|affine|geometric|cf)");
  app.add_option("--set", overrides, "config override key.path=value (repeatable)");
  app.add_option("--seed", seed, "random seed")->each([&](const std::string&) { seed_given = true; });
  app.add_option("--out", out_path, "write the JSON report here instead of stdout");
  app.add_option("--tables", tables_path, "write cylinder tables (JSON lines) here");
  app.add_option("--threads", threads, "worker threads (default: machine parallelism)");
  app.add_flag("--timing", timing, "include wall time in the report");

  const std::vector<std::string> commands = {"pressure",   "eigen",       "gibbs",
                                             "recurrence", "equilibrium", "dimension",
                                             "verify-all"};
  for (const auto& c : commands) app.add_subcommand(c);

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    ts::ordered_json raw;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ts::ConfigError("config file not found: " + config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      raw = ts::ordered_json::parse(ss.str(), nullptr, true);
    } else if (!system_tag.empty()) {
      raw = builtin_config(system_tag);
    } else {
      throw ts::ConfigError("need --config FILE or --system TAG");
    }
    for (const auto& kv : overrides) ts::apply_override(raw, kv);
    if (seed_given) raw["seed"] = seed;

    ts::SystemConfig cfg = ts::parse_config(raw);
    ts::RunOptions opt;
    opt.threads = threads;
    opt.timing = timing;

    const auto t0 = std::chrono::steady_clock::now();
    ts::RunOutcome outcome = ts::run_command(cmd, cfg, opt);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

    const std::string text = ts::dump_deterministic(outcome.report, 17, 2);
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream of(out_path);
      if (!of) throw ts::ConfigError("cannot write report to " + out_path);
      of << text;
    }
    if (!tables_path.empty() && !outcome.tables_jsonl.empty()) {
      std::ofstream tf(tables_path);
      if (!tf) throw ts::ConfigError("cannot write tables to " + tables_path);
      tf << outcome.tables_jsonl;
    }
    std::cerr << "thermoshift " << cmd << ": "
              << (outcome.exit_code == 0 ? "PASS" : "FAIL") << " in " << ms << " ms\n";
    return outcome.exit_code;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "config parse error: " << e.what() << '\n';
    return 2;
  } catch (const ts::CapExceededError& e) {
    std::cerr << "resource cap: " << e.what() << '\n';
    return 3;
  } catch (const ts::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
