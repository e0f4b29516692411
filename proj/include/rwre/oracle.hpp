#pragma once

// Exact absorbing-chain computations on finite state spaces: the ground
// truth that every closed-form probability in the project is checked
// against. Dense Gaussian elimination with partial pivoting; desk-scale
// by design (<= 2000 states).

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/group.hpp"

namespace rwre {

enum class StateRole { interior, target, taboo };  // target = A, taboo = B

/// Row-stochastic chain on an explicit state list with designated
/// absorbing sets A (targets) and B (taboo).
struct FiniteChain {
  int n_states = 0;
  std::vector<double> transition;  // n*n row-major
  std::vector<StateRole> roles;

  double at(int i, int j) const {
    return transition[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_states) +
                      static_cast<std::size_t>(j)];
  }
  double& at(int i, int j) {
    return transition[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_states) +
                      static_cast<std::size_t>(j)];
  }

  void validate() const {
    if (n_states <= 0 || roles.size() != static_cast<std::size_t>(n_states) ||
        transition.size() !=
            static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_states))
      throw std::invalid_argument("FiniteChain: inconsistent sizes");
    if (n_states > 2000)
      throw std::invalid_argument("FiniteChain: more than 2000 states rejected");
    for (int i = 0; i < n_states; ++i) {
      if (roles[static_cast<std::size_t>(i)] != StateRole::interior) continue;
      double total = 0.0;
      for (int j = 0; j < n_states; ++j) total += at(i, j);
      if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("FiniteChain: interior row " +
                                    std::to_string(i) + " does not sum to 1");
    }
    // every interior state must reach A or B
    std::vector<bool> reaches(static_cast<std::size_t>(n_states), false);
    for (int i = 0; i < n_states; ++i)
      if (roles[static_cast<std::size_t>(i)] != StateRole::interior)
        reaches[static_cast<std::size_t>(i)] = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < n_states; ++i) {
        if (reaches[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < n_states; ++j)
          if (at(i, j) > 0.0 && reaches[static_cast<std::size_t>(j)]) {
            reaches[static_cast<std::size_t>(i)] = true;
            changed = true;
            break;
          }
      }
    }
    for (int i = 0; i < n_states; ++i)
      if (!reaches[static_cast<std::size_t>(i)])
        throw std::invalid_argument(
            "absorbing-structure: interior state cannot reach A or B");
  }
};

namespace detail {

/// Solve A x = b by Gaussian elimination with partial pivoting (in place
/// copies). Throws on singular systems.
inline std::vector<double> solve_dense(std::vector<double> a,
                                       std::vector<double> b, int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int row = col + 1; row < n; ++row) {
      const double v = std::abs(a[static_cast<std::size_t>(row) * n + col]);
      if (v > best) {
        best = v;
        pivot = row;
      }
    }
    if (best < 1e-14)
      throw std::runtime_error("absorbing-structure: singular interior block");
    if (pivot != col) {
      for (int j = 0; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(col) * n + j],
                  a[static_cast<std::size_t>(pivot) * n + j]);
      std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
    }
    const double inv_p = 1.0 / a[static_cast<std::size_t>(col) * n + col];
    for (int row = col + 1; row < n; ++row) {
      const double f = a[static_cast<std::size_t>(row) * n + col] * inv_p;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j)
        a[static_cast<std::size_t>(row) * n + j] -=
            f * a[static_cast<std::size_t>(col) * n + j];
      b[static_cast<std::size_t>(row)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[static_cast<std::size_t>(row)];
    for (int j = row + 1; j < n; ++j)
      acc -= a[static_cast<std::size_t>(row) * n + j] * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(row)] = acc / a[static_cast<std::size_t>(row) * n + row];
  }
  return x;
}

struct InteriorSystem {
  std::vector<int> interior;       // chain index per interior slot
  std::vector<int> slot_of;        // -1 for absorbing states
  std::vector<double> i_minus_q;   // (I - Q), row-major over interior slots
};

inline InteriorSystem build_interior(const FiniteChain& chain) {
  InteriorSystem sys;
  sys.slot_of.assign(static_cast<std::size_t>(chain.n_states), -1);
  for (int i = 0; i < chain.n_states; ++i)
    if (chain.roles[static_cast<std::size_t>(i)] == StateRole::interior) {
      sys.slot_of[static_cast<std::size_t>(i)] =
          static_cast<int>(sys.interior.size());
      sys.interior.push_back(i);
    }
  const int m = static_cast<int>(sys.interior.size());
  sys.i_minus_q.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b)
      sys.i_minus_q[static_cast<std::size_t>(a) * m + b] =
          (a == b ? 1.0 : 0.0) - chain.at(sys.interior[static_cast<std::size_t>(a)],
                                          sys.interior[static_cast<std::size_t>(b)]);
  }
  return sys;
}

inline void check_residual(const std::vector<double>& a,
                           const std::vector<double>& x,
                           const std::vector<double>& b, int n) {
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double acc = -b[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      acc += a[static_cast<std::size_t>(i) * n + j] * x[static_cast<std::size_t>(j)];
    worst = std::max(worst, std::abs(acc));
  }
  if (worst > 1e-10)
    throw std::runtime_error("oracle solve residual exceeds 1e-10");
}

}  // namespace detail

/// P(reach A before B | start at `from`) by first-step analysis:
/// (I - Q) h = r with r the one-step-to-A probabilities.
inline double exact_hitting_probability(const FiniteChain& chain, int from) {
  chain.validate();
  if (from < 0 || from >= chain.n_states)
    throw std::out_of_range("state out of range");
  if (chain.roles[static_cast<std::size_t>(from)] == StateRole::target) return 1.0;
  if (chain.roles[static_cast<std::size_t>(from)] == StateRole::taboo) return 0.0;

  auto sys = detail::build_interior(chain);
  const int m = static_cast<int>(sys.interior.size());
  std::vector<double> r(static_cast<std::size_t>(m), 0.0);
  for (int a = 0; a < m; ++a)
    for (int j = 0; j < chain.n_states; ++j)
      if (chain.roles[static_cast<std::size_t>(j)] == StateRole::target)
        r[static_cast<std::size_t>(a)] +=
            chain.at(sys.interior[static_cast<std::size_t>(a)], j);
  auto h = detail::solve_dense(sys.i_minus_q, r, m);
  detail::check_residual(sys.i_minus_q, h, r, m);
  const double v = h[static_cast<std::size_t>(
      sys.slot_of[static_cast<std::size_t>(from)])];
  return std::min(1.0, std::max(0.0, v));
}

/// E[steps to absorption in A or B | start at `from`]: (I - Q) t = 1.
inline double exact_expected_hitting_time(const FiniteChain& chain, int from) {
  chain.validate();
  if (from < 0 || from >= chain.n_states)
    throw std::out_of_range("state out of range");
  if (chain.roles[static_cast<std::size_t>(from)] != StateRole::interior)
    return 0.0;
  auto sys = detail::build_interior(chain);
  const int m = static_cast<int>(sys.interior.size());
  std::vector<double> ones(static_cast<std::size_t>(m), 1.0);
  auto t = detail::solve_dense(sys.i_minus_q, ones, m);
  detail::check_residual(sys.i_minus_q, t, ones, m);
  return t[static_cast<std::size_t>(sys.slot_of[static_cast<std::size_t>(from)])];
}

/// Chain on the geodesic x_0..x_n of a PathEnvironment, with x_0 taboo and
/// x_n the target and the forced first step encoded by conditioning the
/// start at x_1. Used to cross-check escape_probability_path: the escape
/// probability equals exact_hitting_probability(chain, 1).
inline FiniteChain path_chain(const std::vector<double>& backward,
                              const std::vector<double>& forward) {
  const int n = static_cast<int>(backward.size());  // interior indices 1..n-1
  FiniteChain chain;
  chain.n_states = n + 1;
  chain.roles.assign(static_cast<std::size_t>(n + 1), StateRole::interior);
  chain.roles.front() = StateRole::taboo;
  chain.roles.back() = StateRole::target;
  chain.transition.assign(
      static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1), 0.0);
  for (int j = 1; j < n; ++j) {
    const double b = backward[static_cast<std::size_t>(j)];
    const double f = forward[static_cast<std::size_t>(j)];
    chain.at(j, j - 1) = b / (b + f);
    chain.at(j, j + 1) = f / (b + f);
  }
  return chain;
}

/// Depth-D ball around the root as a FiniteChain under a fixed environment;
/// boundary vertices are split into target/taboo by the predicate
/// (default: whole frontier is the target, root interior).
inline FiniteChain truncated_tree_chain(
    const Environment& env, int depth,
    const std::function<StateRole(const Vertex&)>& boundary_role =
        [](const Vertex&) { return StateRole::target; }) {
  if (depth < 1) throw std::invalid_argument("depth >= 1 required");
  const GeneratorSet& gs = env.generators();
  std::vector<Vertex> states = {Vertex{}};
  std::vector<std::vector<int>> neighbor_idx;  // per state, per generator
  // breadth-first enumeration; index vertices by text form
  std::unordered_map<std::string, int> index = {{std::string{}, 0}};
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Vertex v = states[i];
    if (v.level() >= depth) {
      neighbor_idx.emplace_back();  // boundary: neighbors unused
      continue;
    }
    std::vector<int> nbrs;
    for (int s = 0; s < gs.degree(); ++s) {
      Vertex w = left_multiply(s, v, gs);
      auto [it, inserted] = index.emplace(w.text(), static_cast<int>(states.size()));
      if (inserted) states.push_back(std::move(w));
      nbrs.push_back(it->second);
    }
    neighbor_idx.push_back(std::move(nbrs));
  }
  FiniteChain chain;
  chain.n_states = static_cast<int>(states.size());
  if (chain.n_states > 2000)
    throw std::invalid_argument("FiniteChain: more than 2000 states rejected");
  chain.roles.resize(static_cast<std::size_t>(chain.n_states));
  chain.transition.assign(static_cast<std::size_t>(chain.n_states) *
                              static_cast<std::size_t>(chain.n_states),
                          0.0);
  for (int i = 0; i < chain.n_states; ++i) {
    const Vertex& v = states[static_cast<std::size_t>(i)];
    if (v.level() >= depth) {
      chain.roles[static_cast<std::size_t>(i)] = boundary_role(v);
      continue;
    }
    chain.roles[static_cast<std::size_t>(i)] = StateRole::interior;
    const TransitionVector p = env.transition_at(v);
    for (int s = 0; s < gs.degree(); ++s)
      chain.at(i, neighbor_idx[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]) +=
          p.p[static_cast<std::size_t>(s)];
  }
  return chain;
}

}  // namespace rwre
