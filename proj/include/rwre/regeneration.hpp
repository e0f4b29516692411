#pragma once

// Regeneration detection on simulated trajectories and extraction of the
// typed block statistics feeding the speed and CLT estimators.
//
// Two detection modes are exposed:
//   * literal — level k regenerates if the walk never re-enters X_{T_k}
//     from its own subtree (the text-book R(X_{T_k}) = infinity event;
//     exits through the parent are allowed);
//   * strict  — level k regenerates if after T_k the walk stays strictly
//     inside the subtree of X_{T_k} and never revisits it, i.e. the level
//     process never returns to k. Strict levels are always a subset of
//     literal levels.
//
// Horizons are finite, so a qualifying level is only *confirmed* once the
// walk has pushed Delta levels past it without violating the condition;
// the unconfirmed tail is excluded from block statistics.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rwre/group.hpp"
#include "rwre/walk.hpp"

namespace rwre {

enum class RegenMode { literal, strict };

struct RegenEntry {
  int index = 0;           // i, 1-based
  std::size_t tau = 0;     // regeneration time tau_i
  int level = 0;           // regeneration level l_i
  int type = 0;            // generator type of X_{tau_i}
  bool confirmed = false;  // walk reached level l_i + Delta afterwards
};

struct RegenBlock {
  int index = 0;           // block i (1-based; block 1 runs from time 0)
  std::uint64_t y = 0;     // tau_i - tau_{i-1}
  std::int64_t z = 0;      // l_i - l_{i-1}
  int type = 0;            // type of X_{tau_i}
  std::uint64_t l_block = 0;  // visits to the block's first vertex within it
  std::uint64_t d_block = 0;  // distinct vertices visited within the block
};

struct RegenerationRecord {
  RegenMode mode = RegenMode::strict;
  int delta = 0;
  int start_level = 0;
  std::vector<RegenEntry> entries;  // all qualifying levels, in order
  std::vector<RegenBlock> blocks;   // from consecutive confirmed entries

  std::size_t confirmed_count() const {
    std::size_t n = 0;
    for (const auto& e : entries)
      if (e.confirmed) ++n;
    return n;
  }
};

namespace detail {

/// Replay of a trajectory assigning a dense integer id to every distinct
/// visited vertex. O(1) amortized per step; identity is exact (tree paths
/// are tracked with a stack, not hashes).
struct TrajectoryReplay {
  std::vector<int> id_at;             // vertex id at each time 0..N
  std::vector<int> level_at;          // |X_n|
  std::vector<bool> down_entered;     // per id: some down-step arrived here
  std::vector<std::size_t> first_hit; // per id
  std::vector<int> arrival_type;      // per id: generator of the up-step that
                                      // first created it (-1 for the start)
  int start_level = 0;
};

inline TrajectoryReplay replay(const Trajectory& traj, const GeneratorSet& gs) {
  TrajectoryReplay rep;
  const std::size_t n = traj.n_steps();
  rep.id_at.reserve(n + 1);
  rep.level_at.reserve(n + 1);
  rep.start_level = traj.start.level();

  // The stack tracks the path of visited vertices from the start; an edge
  // is popped exactly when the step inverts the generator that created it.
  // This is exact vertex identity on a tree, including excursions past the
  // start's parent when the start is not the root.
  struct Frame {
    int id;
    int in_gen;  // generator that created the edge into this frame
  };
  std::vector<Frame> stack = {{0, -1}};
  std::unordered_map<std::uint64_t, int> child;  // (id << 8) | gen -> id
  int next_id = 1;
  rep.down_entered.push_back(false);
  rep.first_hit.push_back(0);
  rep.arrival_type.push_back(-1);
  rep.id_at.push_back(0);
  rep.level_at.push_back(rep.start_level);

  int level = rep.start_level;
  VertexBuilder cur(gs, traj.start);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = traj.steps[i];
    level += cur.apply(g);
    if (stack.size() > 1 && stack.back().in_gen == gs.inv(g)) {
      stack.pop_back();
      rep.down_entered[static_cast<std::size_t>(stack.back().id)] = true;
    } else {
      const std::uint64_t key =
          (static_cast<std::uint64_t>(stack.back().id) << 8) |
          static_cast<std::uint64_t>(g);
      auto it = child.find(key);
      int id;
      if (it == child.end()) {
        id = next_id++;
        child.emplace(key, id);
        rep.down_entered.push_back(false);
        rep.first_hit.push_back(i + 1);
        rep.arrival_type.push_back(g);
      } else {
        id = it->second;
      }
      stack.push_back({id, g});
    }
    rep.id_at.push_back(stack.back().id);
    rep.level_at.push_back(level);
  }
  return rep;
}

}  // namespace detail

/// Scan a trajectory for regeneration levels in the given mode, confirming
/// each only after the walk has advanced `delta` further levels.
inline RegenerationRecord detect_regenerations(const Trajectory& traj,
                                               const GeneratorSet& gs,
                                               RegenMode mode, int delta) {
  if (delta < 1) throw std::invalid_argument("invalid-margin: delta >= 1");
  const auto rep = detail::replay(traj, gs);
  const std::size_t n = traj.n_steps();

  RegenerationRecord rec;
  rec.mode = mode;
  rec.delta = delta;
  rec.start_level = rep.start_level;

  // suffix minima / maxima of the level process
  std::vector<int> suffix_min(n + 2), suffix_max(n + 2);
  suffix_min[n + 1] = std::numeric_limits<int>::max();
  suffix_max[n + 1] = std::numeric_limits<int>::min();
  for (std::size_t m = n + 1; m-- > 0;) {
    suffix_min[m] = std::min(rep.level_at[m], suffix_min[m + 1]);
    suffix_max[m] = std::max(rep.level_at[m], suffix_max[m + 1]);
  }

  // first hitting time of each level above the start
  const int max_level = suffix_max[0];
  std::vector<std::size_t> level_hit(
      static_cast<std::size_t>(std::max(max_level - rep.start_level, 0)) + 1, n + 1);
  for (std::size_t m = 0; m <= n; ++m) {
    const int rel = rep.level_at[m] - rep.start_level;
    if (rel >= 0 && level_hit[static_cast<std::size_t>(rel)] == n + 1)
      level_hit[static_cast<std::size_t>(rel)] = m;
  }

  int idx = 0;
  for (int k = rep.start_level + 1; k <= max_level; ++k) {
    const std::size_t tk = level_hit[static_cast<std::size_t>(k - rep.start_level)];
    if (tk > n) continue;  // level reached only below the start side
    const int vid = rep.id_at[tk];
    bool qualifies;
    if (mode == RegenMode::strict) {
      qualifies = suffix_min[tk + 1] > k;
    } else {
      qualifies = !rep.down_entered[static_cast<std::size_t>(vid)];
    }
    if (!qualifies) continue;
    RegenEntry e;
    e.index = ++idx;
    e.tau = tk;
    e.level = k;
    e.type = rep.arrival_type[static_cast<std::size_t>(vid)];
    e.confirmed = suffix_max[tk] >= k + delta;
    rec.entries.push_back(e);
  }

  // Blocks between consecutive confirmed entries, plus block 1 from time 0.
  // Confirmations always form a prefix of the entry list.
  std::vector<std::size_t> boundaries = {0};
  std::vector<const RegenEntry*> confirmed;
  for (const auto& e : rec.entries)
    if (e.confirmed) {
      confirmed.push_back(&e);
      boundaries.push_back(e.tau);
    }
  if (!confirmed.empty()) {
    // single pass over time computing per-block occupation statistics;
    // block b covers [boundaries[b], boundaries[b+1])
    std::vector<std::uint64_t> l_block(confirmed.size(), 0);
    std::vector<std::uint64_t> d_block(confirmed.size(), 0);
    std::vector<int> stamp(rep.down_entered.size(), -1);
    std::size_t b = 0;
    for (std::size_t m = 0; m < boundaries.back(); ++m) {
      while (b + 1 < boundaries.size() && m >= boundaries[b + 1]) ++b;
      const int vid = rep.id_at[m];
      if (stamp[static_cast<std::size_t>(vid)] != static_cast<int>(b)) {
        stamp[static_cast<std::size_t>(vid)] = static_cast<int>(b);
        d_block[b]++;
      }
      if (vid == rep.id_at[boundaries[b]]) l_block[b]++;
    }
    std::size_t prev_tau = 0;
    int prev_level = rep.start_level;
    for (std::size_t i = 0; i < confirmed.size(); ++i) {
      const RegenEntry& e = *confirmed[i];
      RegenBlock blk;
      blk.index = static_cast<int>(i) + 1;
      blk.y = e.tau - prev_tau;
      blk.z = e.level - prev_level;
      blk.type = e.type;
      blk.l_block = l_block[i];
      blk.d_block = d_block[i];
      rec.blocks.push_back(blk);
      prev_tau = e.tau;
      prev_level = e.level;
    }
  }
  return rec;
}

struct BlockRow {
  int index;
  std::uint64_t y;
  std::int64_t z;
  int type;
};

/// The typed block table (Y_i, Z_i, type) used by the estimators.
/// Optionally drops block 1, whose law differs from the later blocks'
/// in general.
inline std::vector<BlockRow> block_statistics(const RegenerationRecord& rec,
                                              bool include_first_block = true) {
  if (rec.confirmed_count() < 2)
    throw std::runtime_error(
        "insufficient-blocks: need at least 2 confirmed regenerations");
  std::vector<BlockRow> rows;
  for (const auto& b : rec.blocks) {
    if (!include_first_block && b.index == 1) continue;
    rows.push_back({b.index, b.y, b.z, b.type});
  }
  return rows;
}

struct OccupationStats {
  std::uint64_t l_start = 0;       // visits to the start vertex (whole horizon)
  std::uint64_t distinct_before_tau1 = 0;  // |{x : T(x) < tau_1}|
  std::vector<RegenBlock> per_block;
};

/// L(start) and the number of distinct vertices visited strictly before
/// tau_1, plus the per-block analogues already attached to the record.
inline OccupationStats occupation_stats(const Trajectory& traj,
                                        const GeneratorSet& gs,
                                        const RegenerationRecord& rec) {
  if (rec.blocks.empty())
    throw std::runtime_error("insufficient-blocks: tau_1 unconfirmed");
  const auto rep = detail::replay(traj, gs);
  OccupationStats out;
  out.per_block = rec.blocks;
  const std::size_t tau1 = rec.entries.front().confirmed
                               ? rec.entries.front().tau
                               : 0;  // entries.front() is confirmed here
  std::vector<bool> seen(rep.down_entered.size(), false);
  for (std::size_t m = 0; m < rep.id_at.size(); ++m) {
    if (rep.id_at[m] == 0) out.l_start++;
    if (m < tau1 && !seen[static_cast<std::size_t>(rep.id_at[m])]) {
      seen[static_cast<std::size_t>(rep.id_at[m])] = true;
      out.distinct_before_tau1++;
    }
  }
  return out;
}

}  // namespace rwre
