#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "thermoshift/common.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/json_io.hpp"
#include "thermoshift/potential.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

inline constexpr int kConfigVersion = 1;

struct NumericsConfig {
  Symbol cutoff = 50;            // alphabet truncation
  std::size_t grid = 2048;       // function-grid cells
  std::size_t z_grid = 512;      // partition-sup grid cells
  double tol = 1e-10;
  std::size_t max_iter = 2000;
  std::size_t atom_cap = 16384;
  std::uint64_t word_cap = 0;    // 0 -> environment / default
};

struct PressureConfig {
  std::size_t n_max = 10;
  std::vector<Symbol> probe_symbols = {1, 2};
};

struct GibbsConfig {
  std::size_t depth = 6;
  std::size_t mix_shift = 2;
  std::size_t table_budget = 4096;  // max words per depth before clamping
};

struct RecurrenceConfig {
  std::vector<Symbol> symbols = {1};
  std::size_t n_lo = 1;
  std::size_t n_hi = 12;
};

struct DimensionConfig {
  double s_lo = 0.4;
  double s_hi = 0.9;
  double tol_s = 5e-4;
  std::size_t n = 14;
};

struct SystemConfig {
  std::string family;  // bernoulli | affine | geometric | cf
  std::vector<double> weights;
  std::vector<std::pair<double, double>> maps;
  Interval domain{0.0, 1.0};
  bool domain_given = false;
  Symbol symbols = 40;
  DigitSet digits;
  double s_param = 1.0;

  NumericsConfig numerics;
  PressureConfig pressure;
  GibbsConfig gibbs;
  RecurrenceConfig recurrence;
  DimensionConfig dimension;
  std::uint64_t seed = 1;

  ordered_json echo;  // round-trippable form for reports

  std::uint64_t word_cap() const {
    return numerics.word_cap != 0 ? numerics.word_cap : word_cap_from_env();
  }
};

// A configured system with its certified potential.
struct Model {
  IfsSystem sys;
  PotentialFamily pot;
  DistortionData dist;
  bool separated = false;
  ContractionCheck contraction;
  std::string name;
};

namespace detail {

inline DigitSet parse_digits(const ordered_json& j) {
  DigitSet d;
  if (j.is_array()) {
    for (const auto& v : j) d.list.push_back(v.get<Symbol>());
    return d;
  }
  if (j.is_string()) {
    // "a..b" finite range, "a.." unbounded
    const std::string s = j.get<std::string>();
    const auto dots = s.find("..");
    if (dots == std::string::npos) throw ConfigError("digits: expected array or \"a..b\"");
    const Symbol lo = static_cast<Symbol>(std::stol(s.substr(0, dots)));
    const std::string rest = s.substr(dots + 2);
    if (rest.empty()) {
      d.unbounded = true;
      d.first = lo;
      return d;
    }
    const Symbol hi = static_cast<Symbol>(std::stol(rest));
    if (hi < lo) throw ConfigError("digits: empty range " + s);
    for (Symbol v = lo; v <= hi; ++v) d.list.push_back(v);
    return d;
  }
  throw ConfigError("digits: expected array or range string");
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

inline SystemConfig parse_config(const ordered_json& j) {
  SystemConfig cfg;
  if (j.contains("config_version") && j.at("config_version").get<int>() != kConfigVersion)
    throw ConfigError("unsupported config_version");
  if (!j.contains("system") || !j.at("system").is_object())
    throw ConfigError("config: missing \"system\" object");
  const auto& sys = j.at("system");
  cfg.family = detail::get_or<std::string>(sys, "family", "");
  if (cfg.family.empty()) throw ConfigError("system.family: required");

  if (sys.contains("weights"))
    cfg.weights = sys.at("weights").get<std::vector<double>>();
  if (sys.contains("maps")) {
    for (const auto& m : sys.at("maps")) {
      if (!m.is_array() || m.size() != 2)
        throw ConfigError("system.maps: each entry must be [slope, offset]");
      cfg.maps.emplace_back(m.at(0).get<double>(), m.at(1).get<double>());
    }
  }
  if (sys.contains("domain")) {
    const auto& d = sys.at("domain");
    if (!d.is_array() || d.size() != 2) throw ConfigError("system.domain: expected [lo, hi]");
    cfg.domain = {d.at(0).get<double>(), d.at(1).get<double>()};
    cfg.domain_given = true;
  }
  cfg.symbols = detail::get_or<Symbol>(sys, "symbols", 40);
  if (sys.contains("digits")) cfg.digits = detail::parse_digits(sys.at("digits"));
  cfg.s_param = detail::get_or<double>(sys, "s_param", 1.0);

  if (j.contains("numerics")) {
    const auto& n = j.at("numerics");
    cfg.numerics.cutoff = detail::get_or<Symbol>(n, "cutoff", cfg.numerics.cutoff);
    cfg.numerics.grid = detail::get_or<std::size_t>(n, "grid", cfg.numerics.grid);
    cfg.numerics.z_grid = detail::get_or<std::size_t>(n, "z_grid", cfg.numerics.z_grid);
    cfg.numerics.tol = detail::get_or<double>(n, "tol", cfg.numerics.tol);
    cfg.numerics.max_iter = detail::get_or<std::size_t>(n, "max_iter", cfg.numerics.max_iter);
    cfg.numerics.atom_cap = detail::get_or<std::size_t>(n, "atom_cap", cfg.numerics.atom_cap);
    cfg.numerics.word_cap = detail::get_or<std::uint64_t>(n, "word_cap", 0);
  }
  if (j.contains("pressure")) {
    const auto& p = j.at("pressure");
    cfg.pressure.n_max = detail::get_or<std::size_t>(p, "n_max", cfg.pressure.n_max);
    if (p.contains("probe_symbols"))
      cfg.pressure.probe_symbols = p.at("probe_symbols").get<std::vector<Symbol>>();
  }
  if (j.contains("gibbs")) {
    const auto& g = j.at("gibbs");
    cfg.gibbs.depth = detail::get_or<std::size_t>(g, "depth", cfg.gibbs.depth);
    cfg.gibbs.mix_shift = detail::get_or<std::size_t>(g, "mix_shift", cfg.gibbs.mix_shift);
    cfg.gibbs.table_budget =
        detail::get_or<std::size_t>(g, "table_budget", cfg.gibbs.table_budget);
  }
  if (j.contains("recurrence")) {
    const auto& r = j.at("recurrence");
    if (r.contains("symbols")) cfg.recurrence.symbols = r.at("symbols").get<std::vector<Symbol>>();
    cfg.recurrence.n_lo = detail::get_or<std::size_t>(r, "n_lo", cfg.recurrence.n_lo);
    cfg.recurrence.n_hi = detail::get_or<std::size_t>(r, "n_hi", cfg.recurrence.n_hi);
  }
  if (j.contains("dimension")) {
    const auto& d = j.at("dimension");
    cfg.dimension.s_lo = detail::get_or<double>(d, "s_lo", cfg.dimension.s_lo);
    cfg.dimension.s_hi = detail::get_or<double>(d, "s_hi", cfg.dimension.s_hi);
    cfg.dimension.tol_s = detail::get_or<double>(d, "tol_s", cfg.dimension.tol_s);
    cfg.dimension.n = detail::get_or<std::size_t>(d, "n", cfg.dimension.n);
  }
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
  cfg.echo = j;
  return cfg;
}

inline SystemConfig load_config_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str());
}

// --set key.path=value override on the raw JSON document.
inline void apply_override(ordered_json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (...) {
    value = raw;  // plain strings may come unquoted
  }
  ordered_json* node = &j;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (key.empty()) throw ConfigError("--set: empty key segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

// Built-in registry. Every entry yields a validated system plus a certified
// potential family.
inline Model build_model(const SystemConfig& cfg) {
  Model m;
  m.name = cfg.family;
  if (cfg.family == "bernoulli") {
    if (cfg.weights.size() < 1) throw ConfigError("bernoulli: weights required");
    const std::size_t k = cfg.weights.size();
    std::vector<std::pair<double, double>> maps;
    const double denom = static_cast<double>(2 * k - 1);
    for (std::size_t i = 0; i < k; ++i)
      maps.emplace_back(1.0 / denom, 2.0 * static_cast<double>(i) / denom);
    m.sys = make_affine_system(cfg.domain_given ? cfg.domain : Interval{0.0, 1.0}, maps);
    PotentialFamily::Constant c;
    for (double w : cfg.weights) {
      if (!(w > 0.0)) throw ConfigError("bernoulli: weights must be positive");
      c.values.push_back(std::log(w));
    }
    m.pot.fam = c;
  } else if (cfg.family == "affine") {
    if (cfg.maps.empty()) throw ConfigError("affine: maps required");
    m.sys = make_affine_system(cfg.domain, cfg.maps);
    PotentialFamily::Constant c;
    if (cfg.weights.empty()) {
      c.values.assign(cfg.maps.size(), std::log(1.0 / static_cast<double>(cfg.maps.size())));
    } else {
      if (cfg.weights.size() != cfg.maps.size())
        throw ConfigError("affine: weights must match maps");
      for (double w : cfg.weights) {
        if (!(w > 0.0)) throw ConfigError("affine: weights must be positive");
        c.values.push_back(std::log(w));
      }
    }
    m.pot.fam = c;
  } else if (cfg.family == "geometric") {
    if (cfg.symbols < 1) throw ConfigError("geometric: symbols >= 1");
    const std::size_t k = static_cast<std::size_t>(cfg.symbols);
    std::vector<std::pair<double, double>> maps;
    const double denom = static_cast<double>(2 * k - 1);
    for (std::size_t i = 0; i < k; ++i)
      maps.emplace_back(1.0 / denom, 2.0 * static_cast<double>(i) / denom);
    m.sys = make_affine_system(Interval{0.0, 1.0}, maps);
    m.pot.fam = PotentialFamily::GeometricTail{std::log(2.0)};
  } else if (cfg.family == "cf") {
    if (cfg.digits.list.empty() && !cfg.digits.unbounded)
      throw ConfigError("cf: digits required");
    if (!(cfg.s_param > 0.0)) throw ConfigError("cf: s_param must be positive");
    m.sys = make_cf_system(cfg.domain, cfg.digits);
    m.pot.fam = PotentialFamily::CfGeometric{cfg.s_param, cfg.digits};
  } else {
    throw ConfigError("unknown system family: " + cfg.family);
  }
  m.pot = certify_potential(m.pot, m.sys, std::max<Symbol>(cfg.numerics.cutoff, 8));
  m.dist = distortion_constant(m.pot);
  m.contraction = verify_contraction(m.sys, {cfg.numerics.cutoff});
  if (!m.contraction.contractive)
    throw ConfigError("system failed contraction verification: sup|phi'| = " +
                      std::to_string(m.contraction.s_estimate));
  m.separated = verify_separation(m.sys, {cfg.numerics.cutoff});
  return m;
}

// Geometric potential |phi'|^s for the dimension solver: constants s*log|a_i|
// for affine branches, -2 s log(d_i + x) for cf branches.
inline PotentialFamily geometric_potential(const IfsSystem& sys, double s, Symbol cutoff) {
  PotentialFamily pf;
  if (const auto* aff = std::get_if<IfsSystem::AffineFamily>(&sys.family)) {
    PotentialFamily::Constant c;
    for (const auto& map : aff->maps) c.values.push_back(s * std::log(std::abs(map.a)));
    pf.fam = c;
  } else {
    pf.fam = PotentialFamily::CfGeometric{s, std::get<IfsSystem::CfFamily>(sys.family).digits};
  }
  return certify_potential(pf, sys, cutoff);
}

}  // namespace thermoshift
