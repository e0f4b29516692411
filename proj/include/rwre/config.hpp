#pragma once

// Flat key=value run configuration: parse, validate everything up front,
// and report *all* errors with line numbers rather than the first one.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/group.hpp"
#include "rwre/prf.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/walk.hpp"

namespace rwre {

struct ParseError {
  int line = 0;  // 0 when not tied to a specific line
  std::string message;
};

struct RunConfig {
  int k = 0;
  int r = 0;
  EnvironmentLaw law;
  std::uint64_t master_seed = 0;
  std::uint64_t n_steps = 0;
  std::uint64_t n_traj = 0;
  Sampler sampler = Sampler::categorical;
  RegenMode mode = RegenMode::strict;
  int delta = 200;
  bool include_first_block = true;
  int psi = 2;
  int mc_samples = 100;
  std::string output_dir = "out";
  bool dump_trajectory = false;
  int workers = 0;  // 0 = auto

  int degree() const { return 2 * k + r; }
  std::string law_name() const {
    return law.is_dirichlet() ? "dirichlet_mixture" : "finite_support";
  }

  /// Canonical text used for the provenance hash: sorted key=value lines.
  std::string canonical_text() const;
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<ParseError> errors;
  bool ok() const { return errors.empty(); }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, b - a + 1);
}

struct KeyValue {
  std::string value;
  int line = 0;
};

}  // namespace detail

/// Parse flat key=value text ('#' comments, UTF-8). Returns either a fully
/// validated config or the complete list of errors.
inline ParseResult parse_config(const std::string& text) {
  ParseResult result;
  auto fail = [&result](int line, std::string msg) {
    result.errors.push_back({line, std::move(msg)});
  };

  static const std::vector<std::string> known = {
      "group.k",       "group.r",        "env.kind",
      "env.epsilon",   "env.alpha",      "env.vectors",
      "env.weights",   "seed.master",    "walk.n_steps",
      "walk.n_traj",   "walk.sampler",   "regen.mode",
      "regen.delta",   "regen.include_first_block",
      "branching.psi", "branching.mc_samples",
      "output.dir",    "output.dump_trajectory",
      "parallel.workers"};

  std::map<std::string, detail::KeyValue> kv;
  {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = raw;
      if (auto pos = line.find('#'); pos != std::string::npos)
        line = line.substr(0, pos);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail(lineno, "expected key=value: '" + line + "'");
        continue;
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail(lineno, "unknown key '" + key + "'");
        continue;
      }
      if (auto it = kv.find(key); it != kv.end()) {
        fail(lineno, "duplicate-key '" + key + "' (first at line " +
                         std::to_string(it->second.line) + ")");
        continue;
      }
      kv[key] = {value, lineno};
    }
  }

  auto get = [&kv](const std::string& key) -> const detail::KeyValue* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto require = [&](const std::string& key) -> const detail::KeyValue* {
    const auto* v = get(key);
    if (!v) fail(0, "missing required key '" + key + "'");
    return v;
  };

  auto parse_u64 = [&](const detail::KeyValue* f, const std::string& key,
                       std::uint64_t& out) {
    if (!f) return false;
    try {
      std::size_t used = 0;
      out = std::stoull(f->value, &used);
      if (used != f->value.size()) throw std::invalid_argument("");
      return true;
    } catch (...) {
      fail(f->line, "type mismatch for '" + key + "': expected unsigned integer");
      return false;
    }
  };
  auto parse_int = [&](const detail::KeyValue* f, const std::string& key, int& out) {
    std::uint64_t u = 0;
    if (!parse_u64(f, key, u)) return false;
    out = static_cast<int>(u);
    return true;
  };
  auto parse_double = [&](const detail::KeyValue* f, const std::string& key,
                          double& out) {
    if (!f) return false;
    try {
      std::size_t used = 0;
      out = std::stod(f->value, &used);
      if (used != f->value.size()) throw std::invalid_argument("");
      return true;
    } catch (...) {
      fail(f->line, "type mismatch for '" + key + "': expected number");
      return false;
    }
  };
  auto parse_bool = [&](const detail::KeyValue* f, const std::string& key,
                        bool& out) {
    if (!f) return false;
    if (f->value == "true" || f->value == "1") { out = true; return true; }
    if (f->value == "false" || f->value == "0") { out = false; return true; }
    fail(f->line, "type mismatch for '" + key + "': expected true/false");
    return false;
  };
  auto parse_double_list = [&](const detail::KeyValue* f, const std::string& key,
                               std::vector<double>& out) {
    if (!f) return false;
    out.clear();
    for (const auto& tok : detail::split(f->value, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(detail::trim(tok), &used));
        if (used != detail::trim(tok).size()) throw std::invalid_argument("");
      } catch (...) {
        fail(f->line, "type mismatch for '" + key + "': expected comma list of numbers");
        return false;
      }
    }
    return true;
  };

  RunConfig cfg;
  bool group_ok = parse_int(require("group.k"), "group.k", cfg.k) &
                  parse_int(require("group.r"), "group.r", cfg.r);
  if (group_ok && cfg.degree() < 3) {
    fail(0, "group: d = 2k + r must be >= 3");
    group_ok = false;
  }

  double epsilon = 0.0;
  const bool eps_ok = parse_double(require("env.epsilon"), "env.epsilon", epsilon);
  const auto* kind = require("env.kind");
  if (kind && group_ok && eps_ok) {
    const int d = cfg.degree();
    try {
      if (kind->value == "dirichlet_mixture") {
        std::vector<double> alpha;
        if (parse_double_list(require("env.alpha"), "env.alpha", alpha))
          cfg.law = make_dirichlet_law(d, epsilon, std::move(alpha));
      } else if (kind->value == "finite_support") {
        std::vector<double> weights;
        const auto* vecs = require("env.vectors");
        if (parse_double_list(require("env.weights"), "env.weights", weights) &&
            vecs) {
          std::vector<TransitionVector> vectors;
          for (const auto& part : detail::split(vecs->value, ';')) {
            TransitionVector tv;
            for (const auto& tok : detail::split(part, ','))
              tv.p.push_back(std::stod(detail::trim(tok)));
            vectors.push_back(std::move(tv));
          }
          cfg.law = make_finite_support_law(d, epsilon, std::move(vectors),
                                            std::move(weights));
        }
      } else {
        fail(kind->line, "env.kind must be dirichlet_mixture or finite_support");
      }
    } catch (const std::exception& e) {
      fail(kind->line, e.what());
    }
  }

  parse_u64(require("seed.master"), "seed.master", cfg.master_seed);
  parse_u64(require("walk.n_steps"), "walk.n_steps", cfg.n_steps);
  parse_u64(require("walk.n_traj"), "walk.n_traj", cfg.n_traj);

  if (const auto* f = get("walk.sampler")) {
    if (f->value == "categorical")
      cfg.sampler = Sampler::categorical;
    else if (f->value == "exponential_race")
      cfg.sampler = Sampler::exponential_race;
    else
      fail(f->line, "walk.sampler must be categorical or exponential_race");
  }
  if (const auto* f = get("regen.mode")) {
    if (f->value == "strict")
      cfg.mode = RegenMode::strict;
    else if (f->value == "literal")
      cfg.mode = RegenMode::literal;
    else
      fail(f->line, "regen.mode must be strict or literal");
  }
  if (const auto* f = get("regen.delta")) {
    parse_int(f, "regen.delta", cfg.delta);
    if (cfg.delta < 1) fail(f->line, "invalid-margin: regen.delta >= 1");
  }
  if (const auto* f = get("regen.include_first_block"))
    parse_bool(f, "regen.include_first_block", cfg.include_first_block);
  if (const auto* f = get("branching.psi")) {
    parse_int(f, "branching.psi", cfg.psi);
    if (cfg.psi < 1) fail(f->line, "branching.psi >= 1");
  }
  if (const auto* f = get("branching.mc_samples")) {
    parse_int(f, "branching.mc_samples", cfg.mc_samples);
    if (cfg.mc_samples < 1) fail(f->line, "branching.mc_samples >= 1");
  }
  if (const auto* f = get("output.dir")) cfg.output_dir = f->value;
  if (const auto* f = get("output.dump_trajectory"))
    parse_bool(f, "output.dump_trajectory", cfg.dump_trajectory);
  if (const auto* f = get("parallel.workers"))
    parse_int(f, "parallel.workers", cfg.workers);

  if (!result.errors.empty()) return result;
  result.config = std::move(cfg);
  return result;
}

inline std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "branching.mc_samples=" << mc_samples << '\n'
      << "branching.psi=" << psi << '\n';
  out.precision(17);
  out << "env.epsilon=" << law.epsilon << '\n';
  if (const auto* dm = std::get_if<DirichletMixtureLaw>(&law.kind)) {
    out << "env.alpha=";
    for (std::size_t i = 0; i < dm->alpha.size(); ++i)
      out << (i ? "," : "") << dm->alpha[i];
    out << '\n' << "env.kind=dirichlet_mixture\n";
  } else {
    const auto& fs = std::get<FiniteSupportLaw>(law.kind);
    out << "env.kind=finite_support\nenv.vectors=";
    for (std::size_t v = 0; v < fs.vectors.size(); ++v) {
      if (v) out << ';';
      for (std::size_t i = 0; i < fs.vectors[v].p.size(); ++i)
        out << (i ? "," : "") << fs.vectors[v].p[i];
    }
    out << '\n' << "env.weights=";
    for (std::size_t i = 0; i < fs.weights.size(); ++i)
      out << (i ? "," : "") << fs.weights[i];
    out << '\n';
  }
  out << "group.k=" << k << '\n'
      << "group.r=" << r << '\n'
      << "regen.delta=" << delta << '\n'
      << "regen.include_first_block=" << (include_first_block ? "true" : "false")
      << '\n'
      << "regen.mode=" << (mode == RegenMode::strict ? "strict" : "literal") << '\n'
      << "seed.master=" << master_seed << '\n'
      << "walk.n_steps=" << n_steps << '\n'
      << "walk.n_traj=" << n_traj << '\n'
      << "walk.sampler="
      << (sampler == Sampler::categorical ? "categorical" : "exponential_race")
      << '\n';
  return out.str();
}

/// Provenance hash over the canonical config text. Worker count and output
/// directory are deliberately excluded: they must not change results.
inline std::string config_hash(const RunConfig& cfg) {
  const std::string text = cfg.canonical_text();
  const std::uint64_t h = fnv1a64(text.data(), text.size());
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace rwre
