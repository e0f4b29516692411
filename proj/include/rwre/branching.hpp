#pragma once

// The colouring-scheme branching process behind the regeneration tail
// bound: gambler's-ruin escape probabilities along geodesics, Monte Carlo
// estimation of the expected offspring matrix M over environments, and
// its Perron root for the supercriticality check.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/group.hpp"
#include "rwre/walk.hpp"

namespace rwre {

/// P(restricted walk on the path hits the far end before returning to the
/// start): the classical ruin formula
///   ( sum_{m=0}^{n-1} prod_{j=1}^{m} omega(x_j,x_{j-1}) / omega(x_j,x_{j+1}) )^-1
/// with the empty product equal to 1. Always in (0, 1]; 1 for n = 1.
inline double escape_probability_path(const PathEnvironment& path) {
  const std::size_t n = path.length();
  if (n < 1) throw std::invalid_argument("path must have length >= 1");
  double sum = 1.0;   // m = 0 term
  double prod = 1.0;  // running product of ratios
  for (std::size_t j = 1; j < n; ++j) {
    if (path.forward[j] <= 0.0)
      throw std::domain_error("ellipticity-violation: zero forward probability");
    prod *= path.backward[j] / path.forward[j];
    sum += prod;
  }
  return 1.0 / sum;
}

/// Which descendant paths count as offspring of a type-s vertex.
/// descendant_subtree admits every non-backtracking first step
/// (s_{x_1} != inv(s)); first_step_equals_type pins s_{x_1} = s.
enum class PathConvention { descendant_subtree, first_step_equals_type };

struct OffspringMatrix {
  int psi = 1;
  int degree = 0;
  std::vector<double> m;       // d*d, row-major, (parent type s, end type u)
  std::vector<double> stderr_; // matching standard errors
  int mc_samples = 0;

  double at(int s, int u) const {
    return m[static_cast<std::size_t>(s * degree + u)];
  }
  double stderr_at(int s, int u) const {
    return stderr_[static_cast<std::size_t>(s * degree + u)];
  }
  double row_sum(int s) const {
    double t = 0.0;
    for (int u = 0; u < degree; ++u) t += at(s, u);
    return t;
  }
  double min_row_sum() const {
    double lo = row_sum(0);
    for (int s = 1; s < degree; ++s) lo = std::min(lo, row_sum(s));
    return lo;
  }
  double max_row_sum() const {
    double hi = row_sum(0);
    for (int s = 1; s < degree; ++s) hi = std::max(hi, row_sum(s));
    return hi;
  }
  double max_stderr() const {
    double hi = 0.0;
    for (double v : stderr_) hi = std::max(hi, v);
    return hi;
  }
};

namespace detail {

// DFS over non-backtracking descendant paths of length psi below `base`,
// accumulating per-end-type escape probabilities. The ruin denominator is
// carried incrementally along the path.
inline void offspring_dfs(const Environment& env, TransitionCache& cache,
                          const GeneratorSet& gs, VertexBuilder& cur,
                          int depth, int psi, int last_gen, double sum,
                          double prod, std::vector<double>& acc) {
  if (depth == psi) {
    acc[static_cast<std::size_t>(last_gen)] += 1.0 / sum;
    return;
  }
  // interior vertex: its forward/backward probabilities extend the ruin sum
  const TransitionVector* p = depth > 0 ? &cache.get(env, cur.key()) : nullptr;
  for (int g = 0; g < gs.degree(); ++g) {
    if (g == gs.inv(last_gen)) continue;
    double next_sum = sum;
    double next_prod = prod;
    if (depth > 0) {
      const double back = p->p[static_cast<std::size_t>(gs.inv(last_gen))];
      const double fwd = p->p[static_cast<std::size_t>(g)];
      next_prod = prod * back / fwd;
      next_sum = sum + next_prod;
    }
    cur.apply(g);
    offspring_dfs(env, cache, gs, cur, depth + 1, psi, g, next_sum, next_prod,
                  acc);
    cur.apply(gs.inv(g));
  }
}

}  // namespace detail

/// Monte Carlo estimate of the expected offspring matrix: m_su = average
/// over environments of the summed escape probabilities of the depth-psi
/// descendant paths from a type-s vertex ending in type u.
inline OffspringMatrix estimate_offspring_matrix(
    const GeneratorSet& gs, const EnvironmentLaw& law, int psi, int mc_samples,
    std::uint64_t seed,
    PathConvention convention = PathConvention::descendant_subtree) {
  if (psi < 1) throw std::invalid_argument("invalid-parameter: psi >= 1");
  if (mc_samples < 1)
    throw std::invalid_argument("invalid-parameter: mc_samples >= 1");
  const int d = gs.degree();
  if (std::pow(static_cast<double>(d - 1), psi) > 1e5)
    throw std::invalid_argument("too-large-psi: (d-1)^psi exceeds path cap");

  OffspringMatrix out;
  out.psi = psi;
  out.degree = d;
  out.mc_samples = mc_samples;
  const std::size_t cells = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
  std::vector<double> sum(cells, 0.0), sumsq(cells, 0.0);

  for (int sample = 0; sample < mc_samples; ++sample) {
    // fresh environment per sample, indexed by sample id
    CounterRng mix(seed, static_cast<std::uint64_t>(sample), 0x0FF5u);
    Environment env(gs, law, mix.next_u64());
    TransitionCache cache;
    for (int s = 0; s < d; ++s) {
      std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
      // place the type-s parent at the level-1 vertex [s]; the environment
      // is i.i.d. so the placement is immaterial
      Vertex base = left_multiply(s, Vertex{}, gs);
      VertexBuilder cur(gs, base);
      if (convention == PathConvention::descendant_subtree) {
        detail::offspring_dfs(env, cache, gs, cur, 0, psi, s, 1.0, 1.0, acc);
      } else {
        // pinned variant: the first step must repeat s itself
        cur.apply(s);
        detail::offspring_dfs(env, cache, gs, cur, 1, psi, s, 1.0, 1.0, acc);
        cur.apply(gs.inv(s));
      }
      for (int u = 0; u < d; ++u) {
        const std::size_t cell = static_cast<std::size_t>(s * d + u);
        sum[cell] += acc[static_cast<std::size_t>(u)];
        sumsq[cell] += acc[static_cast<std::size_t>(u)] * acc[static_cast<std::size_t>(u)];
      }
    }
  }

  out.m.resize(cells);
  out.stderr_.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double mean = sum[c] / mc_samples;
    out.m[c] = mean;
    if (mc_samples > 1) {
      const double var =
          std::max(0.0, (sumsq[c] - mc_samples * mean * mean) / (mc_samples - 1));
      out.stderr_[c] = std::sqrt(var / mc_samples);
    } else {
      out.stderr_[c] = 0.0;
    }
  }
  return out;
}

struct PerronReport {
  double rho = 0.0;
  double min_row_sum = 0.0;  // cheap lower-bound certificate for rho
  double max_row_sum = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_shift = false;
};

/// Spectral radius of a nonnegative matrix by power iteration, tolerance
/// 1e-12 on successive Rayleigh quotients. On non-convergence (possible
/// with equal-modulus complex eigenvalues) restarts on M + I and
/// subtracts 1.
inline PerronReport perron_root(const OffspringMatrix& M) {
  const int d = M.degree;
  PerronReport rep;
  rep.min_row_sum = M.min_row_sum();
  rep.max_row_sum = M.max_row_sum();

  auto iterate = [&](double shift, double& rho_out, int& iters) -> bool {
    std::vector<double> v(static_cast<std::size_t>(d), 1.0 / d), w(static_cast<std::size_t>(d));
    double prev = 0.0;
    for (int it = 1; it <= 100000; ++it) {
      double norm = 0.0;
      for (int i = 0; i < d; ++i) {
        double acc = shift * v[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j)
          acc += M.at(i, j) * v[static_cast<std::size_t>(j)];
        w[static_cast<std::size_t>(i)] = acc;
        norm += acc * acc;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) {  // nilpotent: spectral radius 0
        rho_out = 0.0;
        iters = it;
        return true;
      }
      double rayleigh = 0.0, vv = 0.0;
      for (int i = 0; i < d; ++i) {
        rayleigh += v[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
        vv += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
      }
      rayleigh /= vv;
      for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] /= norm;
      v = w;
      if (it > 1 && std::abs(rayleigh - prev) <= 1e-12 * std::max(1.0, std::abs(rayleigh))) {
        rho_out = rayleigh;
        iters = it;
        return true;
      }
      prev = rayleigh;
    }
    rho_out = prev;
    iters = 100000;
    return false;
  };

  double rho = 0.0;
  int iters = 0;
  if (iterate(0.0, rho, iters)) {
    rep.rho = rho;
    rep.iterations = iters;
    rep.converged = true;
    return rep;
  }
  rep.used_shift = true;
  rep.converged = iterate(1.0, rho, iters);
  rep.rho = rho - 1.0;
  rep.iterations = iters;
  return rep;
}

}  // namespace rwre
