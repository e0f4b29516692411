#pragma once

// Quenched walk simulation: the categorical one-step sampler, the
// exponential-race sampler it is coupled to, full trajectories, the
// restricted chain on a geodesic, and the hitting/return functionals.
//
// A trajectory stores one generator index per step; vertices and levels
// are re-derived on demand.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/group.hpp"
#include "rwre/prf.hpp"

namespace rwre {

enum class Sampler { categorical, exponential_race };

/// Sample a generator index from p with one uniform and a linear scan.
inline int sample_categorical(const TransitionVector& p, CounterRng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  const int d = p.degree();
  for (int s = 0; s < d; ++s) {
    acc += p.p[static_cast<std::size_t>(s)];
    if (u < acc) return s;
  }
  return d - 1;  // guard against rounding in the final partial sum
}

/// Sample by the exponential race: argmin_s h_s / p_s with h_s unit-rate
/// exponentials. Distributionally identical to sample_categorical.
/// Ties (probability zero) break to the smallest index.
inline int sample_exponential_race(const TransitionVector& p, CounterRng& rng) {
  const int d = p.degree();
  int best = 0;
  double best_time = std::numeric_limits<double>::infinity();
  for (int s = 0; s < d; ++s) {
    const double h = rng.exponential();
    const double ps = p.p[static_cast<std::size_t>(s)];
    const double t = ps > 0.0 ? h / ps : std::numeric_limits<double>::infinity();
    if (t < best_time) {
      best_time = t;
      best = s;
    }
  }
  return best;
}

inline Vertex step_categorical(const Environment& env, const Vertex& x,
                               CounterRng& rng) {
  const int s = sample_categorical(env.transition_at(x), rng);
  return left_multiply(s, x, env.generators());
}

inline Vertex step_exponential_race(const Environment& env, const Vertex& x,
                                    CounterRng& rng) {
  const int s = sample_exponential_race(env.transition_at(x), rng);
  return left_multiply(s, x, env.generators());
}

/// A simulated path X_0..X_n in compressed form: start vertex plus the
/// generator applied at each step.
struct Trajectory {
  Vertex start;
  std::vector<std::uint8_t> steps;
  std::uint64_t rng_stream_id = 0;

  std::size_t n_steps() const { return steps.size(); }

  /// Level process |X_0|, |X_1|, ..., |X_n|.
  std::vector<int> levels(const GeneratorSet& gs) const {
    std::vector<int> out;
    out.reserve(steps.size() + 1);
    VertexBuilder b(gs, start);
    out.push_back(b.level());
    for (std::uint8_t s : steps) {
      b.apply(s);
      out.push_back(b.level());
    }
    return out;
  }

  /// Vertex at step n (O(n); use VertexBuilder replay for whole-path scans).
  Vertex vertex_at(std::size_t n, const GeneratorSet& gs) const {
    VertexBuilder b(gs, start);
    for (std::size_t i = 0; i < n; ++i) b.apply(steps[i]);
    return b.vertex();
  }
};

/// Per-trajectory memo of transition vectors. The walk revisits vertices
/// constantly; caching keeps Dirichlet sampling off the hot path. Strictly
/// worker-local, so no synchronization.
class TransitionCache {
 public:
  const TransitionVector& get(const Environment& env, const VertexKey& key) {
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, env.transition_from_key(key)).first;
    return it->second;
  }

 private:
  std::unordered_map<VertexKey, TransitionVector, VertexKeyHash> cache_;
};

/// Run the quenched chain for n_steps from start.
inline Trajectory simulate_walk(const Environment& env, const Vertex& start,
                                std::size_t n_steps, CounterRng& rng,
                                Sampler sampler = Sampler::categorical,
                                TransitionCache* cache = nullptr) {
  Trajectory traj;
  traj.start = start;
  traj.steps.reserve(n_steps);
  VertexBuilder cur(env.generators(), start);
  TransitionCache local;
  TransitionCache& memo = cache ? *cache : local;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const TransitionVector& p = memo.get(env, cur.key());
    const int s = sampler == Sampler::categorical
                      ? sample_categorical(p, rng)
                      : sample_exponential_race(p, rng);
    cur.apply(s);
    traj.steps.push_back(static_cast<std::uint8_t>(s));
  }
  return traj;
}

/// A geodesic x_0..x_n with the quenched forward/backward probabilities at
/// its interior vertices — everything the restricted chain and the ruin
/// formula need.
struct PathEnvironment {
  std::vector<Vertex> vertices;          // x_0 .. x_n
  std::vector<double> backward;          // backward[j] = omega(x_j, x_{j-1}), j = 1..n-1
  std::vector<double> forward;           // forward[j]  = omega(x_j, x_{j+1}), j = 1..n-1

  std::size_t length() const { return vertices.size() - 1; }
};

/// Build the path environment along the descending path from base through
/// the given letters (each letter must extend the word, no backtracking).
inline PathEnvironment build_path_environment(const Environment& env,
                                              const Vertex& base,
                                              const std::vector<int>& letters) {
  if (letters.empty())
    throw std::invalid_argument("path must have length >= 1");
  PathEnvironment path;
  path.vertices.push_back(base);
  Vertex cur = base;
  for (int s : letters) {
    Vertex next = left_multiply(s, cur, env.generators());
    if (next.level() != cur.level() + 1)
      throw std::invalid_argument("path letters must descend (no backtracking)");
    path.vertices.push_back(next);
    cur = next;
  }
  const std::size_t n = path.length();
  path.backward.assign(n, 0.0);
  path.forward.assign(n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    const TransitionVector p = env.transition_at(path.vertices[j]);
    // the generator from x_j to x_{j-1} is the inverse of letters[j-1];
    // to x_{j+1} it is letters[j]
    const int back_gen = env.generators().inv(letters[j - 1]);
    path.backward[j] = p.p[static_cast<std::size_t>(back_gen)];
    path.forward[j] = p.p[static_cast<std::size_t>(letters[j])];
  }
  return path;
}

enum class RestrictedOutcome { hit_far_end, returned_to_start };

struct RestrictedWalkResult {
  RestrictedOutcome outcome;
  std::vector<std::uint64_t> visit_counts;  // per path vertex, including endpoints
};

/// The chain Y^C restricted to the geodesic: from x_0 the first step is
/// forced to x_1; at interior x_j the walk moves to x_{j+-1} with the
/// renormalized probabilities. Stops on hitting x_n or returning to x_0.
inline RestrictedWalkResult simulate_restricted_walk(const PathEnvironment& path,
                                                     CounterRng& rng) {
  const std::size_t n = path.length();
  if (n < 1) throw std::invalid_argument("path must have length >= 1");
  RestrictedWalkResult res;
  res.visit_counts.assign(n + 1, 0);
  std::size_t pos = 0;
  res.visit_counts[0]++;
  pos = 1;  // forced step
  for (;;) {
    res.visit_counts[pos]++;
    if (pos == n) {
      res.outcome = RestrictedOutcome::hit_far_end;
      return res;
    }
    if (pos == 0) {
      res.outcome = RestrictedOutcome::returned_to_start;
      return res;
    }
    const double back = path.backward[pos];
    const double fwd = path.forward[pos];
    const double up = fwd / (fwd + back);
    pos = rng.uniform01() < up ? pos + 1 : pos - 1;
  }
}

/// Hitting/return functionals of a finite trajectory. Events that do not
/// occur within the horizon are reported as empty optionals, never as
/// sentinel numbers.
struct HittingReport {
  /// T(y): first index with X = y, for every visited y (keyed by text form).
  std::unordered_map<std::string, std::size_t> first_hit;
  /// T_n: first index with |X| = n, for every reached level.
  std::vector<std::optional<std::size_t>> level_hit;
  /// R: first return index to X_0 (any direction).
  std::optional<std::size_t> return_to_start;
  /// R(y): first index n >= 1 with X_{n-1} in subtree(y) and X_n = y.
  std::unordered_map<std::string, std::optional<std::size_t>> subtree_return;
};

inline HittingReport hitting_and_return_times(const Trajectory& traj,
                                              const GeneratorSet& gs) {
  HittingReport rep;
  VertexBuilder cur(gs, traj.start);
  int max_level = cur.level();
  rep.level_hit.assign(static_cast<std::size_t>(max_level) + 1, std::nullopt);
  rep.level_hit[static_cast<std::size_t>(cur.level())] = 0;
  rep.first_hit[cur.vertex().text()] = 0;
  rep.subtree_return[cur.vertex().text()] = std::nullopt;
  Vertex prev = cur.vertex();
  for (std::size_t n = 1; n <= traj.n_steps(); ++n) {
    const int delta = cur.apply(traj.steps[n - 1]);
    const Vertex& x = cur.vertex();
    const std::string key = x.text();
    if (!rep.first_hit.count(key)) {
      rep.first_hit[key] = n;
      rep.subtree_return[key] = std::nullopt;
    }
    const int lv = cur.level();
    if (lv > max_level) {
      max_level = lv;
      rep.level_hit.resize(static_cast<std::size_t>(max_level) + 1, std::nullopt);
    }
    auto& slot = rep.level_hit[static_cast<std::size_t>(lv)];
    if (!slot) slot = n;
    if (!rep.return_to_start && x == traj.start && n >= 1)
      rep.return_to_start = n;
    // a subtree return into x happens exactly on a down-step whose source
    // lies in subtree(x); on a tree that source is then a child of x
    if (delta < 0 && x.is_ancestor_of(prev)) {
      auto& r = rep.subtree_return[key];
      if (!r) r = n;
    }
    prev = x;
  }
  return rep;
}

}  // namespace rwre
