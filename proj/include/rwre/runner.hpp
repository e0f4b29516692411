#pragma once

// Experiment pipelines behind the CLI commands. All randomness is indexed
// by trajectory id (never by worker), and reductions run in trajectory-id
// order, so results are byte-identical for any worker count.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwre/branching.hpp"
#include "rwre/config.hpp"
#include "rwre/environment.hpp"
#include "rwre/group.hpp"
#include "rwre/oracle.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/stats.hpp"
#include "rwre/walk.hpp"

namespace rwre {

inline constexpr const char* kVersion = "rwre 0.1.0";

// stream-id tags keeping environment, walk and auxiliary streams disjoint
inline constexpr std::uint64_t kTagEnv = 0xE27Aull << 32;
inline constexpr std::uint64_t kTagWalk = 0x3A1Bull << 32;

namespace detail {

/// Run fn(i) for i in [0, n) on `workers` threads. Indices are claimed from
/// a shared counter; determinism comes from fn writing only to slot i.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 0) {
    if (const char* env = std::getenv("RWRE_THREADS"))
      workers = std::max(1, std::atoi(env));
    else
      workers =
          static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  workers = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(workers), std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Per-trajectory simulation product consumed by the estimators.
struct TrajectoryResult {
  std::vector<RegenEntry> entries;
  std::vector<RegenBlock> blocks;  // confirmed blocks, with occupation stats
  int final_level = 0;
  std::optional<int> l1;           // first confirmed regeneration level
  std::optional<Trajectory> traj;  // kept only when dumping
};

/// Simulate trajectory `id` under the annealed law: a fresh environment
/// seed and a fresh walk stream, both derived from (master seed, id).
inline TrajectoryResult run_trajectory(const RunConfig& cfg, std::uint64_t id,
                                       bool keep_trajectory = false) {
  const GeneratorSet gs(cfg.k, cfg.r);
  CounterRng env_mix(cfg.master_seed, id, kTagEnv);
  Environment env(gs, cfg.law, env_mix.next_u64());
  CounterRng walk_rng(cfg.master_seed, id, kTagWalk);
  Trajectory traj =
      simulate_walk(env, Vertex{}, cfg.n_steps, walk_rng, cfg.sampler);
  traj.rng_stream_id = id;

  TrajectoryResult res;
  res.final_level = traj.levels(gs).back();
  auto rec = detect_regenerations(traj, gs, cfg.mode, cfg.delta);
  if (!rec.blocks.empty())
    res.l1 = rec.blocks.front().z + rec.start_level;
  res.entries = std::move(rec.entries);
  res.blocks = std::move(rec.blocks);
  if (keep_trajectory) res.traj = std::move(traj);
  return res;
}

/// All per-trajectory results, computed in parallel, merged in id order.
inline std::vector<TrajectoryResult> run_all_trajectories(
    const RunConfig& cfg, bool keep_trajectories = false) {
  std::vector<TrajectoryResult> results(cfg.n_traj);
  detail::parallel_for(cfg.n_traj, cfg.workers, [&](std::size_t id) {
    results[id] = run_trajectory(cfg, id, keep_trajectories);
  });
  return results;
}

/// Concatenate block rows across trajectories, honoring the
/// include_first_block setting, in trajectory-id order.
inline std::vector<BlockRow> merge_blocks(
    const std::vector<TrajectoryResult>& results, bool include_first_block) {
  std::vector<BlockRow> all;
  for (const auto& r : results)
    for (const auto& b : r.blocks) {
      if (!include_first_block && b.index == 1) continue;
      all.push_back({b.index, b.y, b.z, b.type});
    }
  return all;
}

namespace detail {

inline nlohmann::ordered_json base_summary(const RunConfig& cfg,
                                           const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  j["d"] = cfg.degree();
  j["k"] = cfg.k;
  j["r"] = cfg.r;
  j["epsilon"] = cfg.law.epsilon;
  j["law"] = cfg.law_name();
  j["seed"] = cfg.master_seed;
  j["n_steps"] = cfg.n_steps;
  j["n_traj"] = cfg.n_traj;
  j["mode"] = cfg.mode == RegenMode::strict ? "strict" : "literal";
  j["delta"] = cfg.delta;
  j["v_hat"] = nullptr;
  j["v_ci"] = nullptr;
  j["sigma2_hat"] = nullptr;
  j["Etau_hat"] = nullptr;
  j["ks_distance"] = nullptr;
  j["ks_pass"] = nullptr;
  j["gamma_hat"] = nullptr;
  return j;
}

inline std::ofstream open_artifact(const RunConfig& cfg,
                                   const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream out(std::filesystem::path(cfg.output_dir) / name,
                    std::ios::binary);  // binary: LF line endings everywhere
  if (!out) throw std::runtime_error("cannot open output file " + name);
  return out;
}

inline void provenance_line(std::ofstream& out, const RunConfig& cfg) {
  out << "# config_hash=" << config_hash(cfg) << " version=" << kVersion
      << "\n";
}

inline void append_summary(const RunConfig& cfg,
                           const nlohmann::ordered_json& record) {
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream out(std::filesystem::path(cfg.output_dir) / "summary.jsonl",
                    std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open output file summary.jsonl");
  out << record.dump() << "\n";
}

/// One row per regeneration entry; block columns filled for confirmed
/// entries (confirmations form a prefix, and block i ends at the i-th
/// confirmed entry).
inline void write_blocks_csv(const RunConfig& cfg,
                             const std::vector<TrajectoryResult>& results) {
  auto out = open_artifact(cfg, "blocks.csv");
  provenance_line(out, cfg);
  out << "traj_id,i,tau,level,type,Y,Z,L_block,D_block,confirmed\n";
  for (std::size_t id = 0; id < results.size(); ++id) {
    const auto& r = results[id];
    std::size_t next_block = 0;
    for (const auto& e : r.entries) {
      out << id << ',' << e.index << ',' << e.tau << ',' << e.level << ','
          << e.type << ',';
      if (e.confirmed && next_block < r.blocks.size()) {
        const auto& b = r.blocks[next_block++];
        out << b.y << ',' << b.z << ',' << b.l_block << ',' << b.d_block
            << ",1\n";
      } else {
        out << ",,,,0\n";
      }
    }
  }
}

inline void write_trajectory_csv(const RunConfig& cfg, std::size_t id,
                                 const Trajectory& traj,
                                 const GeneratorSet& gs) {
  auto out =
      open_artifact(cfg, "trajectory_" + std::to_string(id) + ".csv");
  provenance_line(out, cfg);
  out << "step,level,vertex\n";
  VertexBuilder cur(gs, traj.start);
  out << 0 << ',' << cur.level() << ',' << cur.vertex().text() << "\n";
  for (std::size_t n = 0; n < traj.n_steps(); ++n) {
    cur.apply(traj.steps[n]);
    out << (n + 1) << ',' << cur.level() << ',' << cur.vertex().text()
        << "\n";
  }
}

}  // namespace detail

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 statistical-check failure, 2 usage error
  nlohmann::ordered_json summary;
};

/// simulate: trajectories (optional per-trajectory CSV) + blocks.csv.
inline RunOutcome run_simulate(const RunConfig& cfg) {
  const GeneratorSet gs(cfg.k, cfg.r);
  auto results = run_all_trajectories(cfg, cfg.dump_trajectory);
  detail::write_blocks_csv(cfg, results);
  if (cfg.dump_trajectory)
    for (std::size_t id = 0; id < results.size(); ++id)
      detail::write_trajectory_csv(cfg, id, *results[id].traj, gs);
  auto summary = detail::base_summary(cfg, "simulate");
  std::size_t total_blocks = 0;
  for (const auto& r : results) total_blocks += r.blocks.size();
  summary["n_blocks"] = total_blocks;
  detail::append_summary(cfg, summary);
  return {0, summary};
}

/// speed: blocks + endpoint speed estimators, summary record.
inline RunOutcome run_speed(const RunConfig& cfg) {
  auto results = run_all_trajectories(cfg);
  detail::write_blocks_csv(cfg, results);
  const auto blocks = merge_blocks(results, cfg.include_first_block);
  const auto est = estimate_speed(blocks);
  double endpoint = 0.0;
  for (const auto& r : results)
    endpoint += static_cast<double>(r.final_level) /
                static_cast<double>(cfg.n_steps);
  endpoint /= static_cast<double>(cfg.n_traj);
  double sy = 0.0;
  for (const auto& b : blocks) sy += static_cast<double>(b.y);

  auto summary = detail::base_summary(cfg, "speed");
  summary["v_hat"] = est.v_hat;
  summary["v_ci"] = est.ci95;
  summary["v_endpoint"] = endpoint;
  summary["Etau_hat"] = sy / static_cast<double>(blocks.size());
  summary["n_blocks"] = est.n_blocks;
  detail::append_summary(cfg, summary);
  const bool ok = est.v_hat > 0.0 && est.v_hat - est.ci95 > 0.0;
  return {ok ? 0 : 1, summary};
}

/// clt: speed + sigma^2 + Kolmogorov normality of the standardized
/// endpoint statistic; writes standardized.csv alongside the summary.
inline RunOutcome run_clt(const RunConfig& cfg) {
  auto results = run_all_trajectories(cfg);
  detail::write_blocks_csv(cfg, results);
  const auto blocks = merge_blocks(results, cfg.include_first_block);
  const auto speed = estimate_speed(blocks);
  const auto clt = estimate_sigma2(blocks, speed.v_hat, cfg.degree());

  std::vector<double> standardized;
  standardized.reserve(results.size());
  const double sqrt_n = std::sqrt(static_cast<double>(cfg.n_steps));
  const double sd = std::sqrt(clt.sigma2_hat);
  for (const auto& r : results) {
    const double ratio = static_cast<double>(r.final_level) /
                         static_cast<double>(cfg.n_steps);
    standardized.push_back(sqrt_n * (ratio - speed.v_hat) / sd);
  }
  const auto ks = normality_check(standardized, 0.0, 1.0,
                                  /*estimated_params=*/true);

  {
    auto out = detail::open_artifact(cfg, "standardized.csv");
    detail::provenance_line(out, cfg);
    out << "traj_id,standardized\n";
    char buf[40];
    for (std::size_t id = 0; id < standardized.size(); ++id) {
      std::snprintf(buf, sizeof(buf), "%.17g", standardized[id]);
      out << id << ',' << buf << "\n";
    }
  }

  auto summary = detail::base_summary(cfg, "clt");
  summary["v_hat"] = speed.v_hat;
  summary["v_ci"] = speed.ci95;
  summary["sigma2_hat"] = clt.sigma2_hat;
  summary["Etau_hat"] = clt.etau_hat;
  summary["ks_distance"] = ks.ks_distance;
  summary["ks_pass"] = ks.pass;
  summary["n_blocks"] = clt.n_blocks;
  detail::append_summary(cfg, summary);
  return {ks.pass ? 0 : 1, summary};
}

/// branching: offspring matrix CSV + Perron report record.
inline RunOutcome run_branching(const RunConfig& cfg) {
  const GeneratorSet gs(cfg.k, cfg.r);
  const auto M = estimate_offspring_matrix(gs, cfg.law, cfg.psi,
                                           cfg.mc_samples, cfg.master_seed);
  const auto perron = perron_root(M);
  {
    auto out = detail::open_artifact(cfg, "matrix.csv");
    detail::provenance_line(out, cfg);
    out << "type";
    for (int u = 0; u < gs.degree(); ++u) out << ',' << gs.label(u);
    out << "\n";
    char buf[40];
    for (int s = 0; s < gs.degree(); ++s) {
      out << gs.label(s);
      for (int u = 0; u < gs.degree(); ++u) {
        std::snprintf(buf, sizeof(buf), "%.17g", M.at(s, u));
        out << ',' << buf;
      }
      out << "\n";
    }
  }
  auto summary = detail::base_summary(cfg, "branching");
  summary["psi"] = cfg.psi;
  summary["mc_samples"] = cfg.mc_samples;
  summary["rho"] = perron.rho;
  summary["min_row_sum"] = M.min_row_sum();
  summary["stderr_max"] = M.max_stderr();
  summary["perron_converged"] = perron.converged;
  detail::append_summary(cfg, summary);
  return {0, summary};
}

/// l1-tail: survival CSV of the first regeneration level + geometric fit.
inline RunOutcome run_l1_tail(const RunConfig& cfg) {
  auto results = run_all_trajectories(cfg);
  std::vector<double> l1;
  std::size_t censored = 0;
  for (const auto& r : results) {
    if (r.l1)
      l1.push_back(static_cast<double>(*r.l1));
    else
      ++censored;
  }
  const auto fit = l1_tail_fit(l1, 1);
  {
    auto out = detail::open_artifact(cfg, "survival.csv");
    detail::provenance_line(out, cfg);
    out << "level,survival\n";
    char buf[40];
    for (const auto& [t, s] : fit.points) {
      std::snprintf(buf, sizeof(buf), "%.17g", s);
      out << t << ',' << buf << "\n";
    }
  }
  auto summary = detail::base_summary(cfg, "l1-tail");
  summary["gamma_hat"] = fit.degenerate ? nlohmann::ordered_json(nullptr)
                                        : nlohmann::ordered_json(fit.gamma_hat);
  summary["tail_slope"] = fit.slope;
  summary["tail_slope_stderr"] = fit.slope_stderr;
  summary["n_l1_samples"] = l1.size();
  summary["n_censored"] = censored;
  detail::append_summary(cfg, summary);
  const bool ok = !fit.degenerate && fit.slope < 0.0;
  return {ok ? 0 : 1, summary};
}

/// oracle-check: ruin formula vs exact linear solve on random elliptic
/// paths (lengths 1..8); prints one row per length, fails above 1e-10.
inline RunOutcome run_oracle_check(const RunConfig& cfg,
                                   std::ostream& os = std::cout) {
  const GeneratorSet gs(cfg.k, cfg.r);
  const int paths_per_length = 125;
  double worst = 0.0;
  os << "length  paths  max|formula - solver|\n";
  for (int len = 1; len <= 8; ++len) {
    double worst_len = 0.0;
    for (int trial = 0; trial < paths_per_length; ++trial) {
      CounterRng mix(cfg.master_seed,
                     static_cast<std::uint64_t>(len * 1000 + trial), kTagEnv);
      Environment env(gs, cfg.law, mix.next_u64());
      // random descending path from the root
      CounterRng pick(cfg.master_seed,
                      static_cast<std::uint64_t>(len * 1000 + trial),
                      kTagWalk);
      std::vector<int> letters;
      int last = -1;
      for (int j = 0; j < len; ++j) {
        int g;
        do {
          g = static_cast<int>(pick.uniform_below(
              static_cast<std::uint64_t>(gs.degree())));
        } while (last >= 0 && g == gs.inv(last));
        letters.push_back(g);
        last = g;
      }
      const auto path = build_path_environment(env, Vertex{}, letters);
      const double formula = escape_probability_path(path);
      const auto chain = path_chain(path.backward, path.forward);
      const double exact = len == 1 ? 1.0 : exact_hitting_probability(chain, 1);
      worst_len = std::max(worst_len, std::abs(formula - exact));
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3e", worst_len);
    os << len << "       " << paths_per_length << "    " << buf << "\n";
    worst = std::max(worst, worst_len);
  }
  const bool ok = worst <= 1e-10;
  os << (ok ? "PASS" : "FAIL") << ": max difference "
     << (ok ? "<=" : ">") << " 1e-10\n";
  auto summary = detail::base_summary(cfg, "oracle-check");
  summary["max_abs_diff"] = worst;
  summary["oracle_pass"] = ok;
  detail::append_summary(cfg, summary);
  return {ok ? 0 : 1, summary};
}

/// Dispatch by command name; unknown command is a usage error (exit 2).
inline RunOutcome run_command(const std::string& command,
                              const RunConfig& cfg) {
  if (command == "simulate") return run_simulate(cfg);
  if (command == "speed") return run_speed(cfg);
  if (command == "clt") return run_clt(cfg);
  if (command == "branching") return run_branching(cfg);
  if (command == "l1-tail") return run_l1_tail(cfg);
  if (command == "oracle-check") return run_oracle_check(cfg);
  RunOutcome out;
  out.exit_code = 2;
  out.summary["error"] = "unknown command '" + command + "'";
  return out;
}

}  // namespace rwre
