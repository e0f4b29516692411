#pragma once

// The i.i.d. uniformly elliptic random environment: one transition vector
// per vertex, generated lazily and reproducibly as a pure function of
// (law, master seed, vertex). No storage is ever allocated for the tree;
// each vertex owns a private counter-based stream keyed by its canonical
// 128-bit word hash.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rwre/group.hpp"
#include "rwre/prf.hpp"

namespace rwre {

/// Quenched one-step law at a vertex: p[s] = probability of stepping to s*x.
struct TransitionVector {
  std::vector<double> p;

  int degree() const { return static_cast<int>(p.size()); }

  void validate(double epsilon) const {
    double total = 0.0;
    for (double v : p) {
      if (v < epsilon)
        throw std::domain_error("ellipticity-violation: entry below epsilon");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::domain_error("transition vector does not sum to 1");
  }
};

struct DirichletMixtureLaw {
  std::vector<double> alpha;  // length d, all > 0
};

struct FiniteSupportLaw {
  std::vector<TransitionVector> vectors;
  std::vector<double> weights;  // same count, sums to 1
};

/// Marginal law of omega(x,.) — identical at every vertex by construction.
struct EnvironmentLaw {
  double epsilon = 0.0;  // ellipticity floor, in (0, 1/d)
  std::variant<DirichletMixtureLaw, FiniteSupportLaw> kind;

  bool is_dirichlet() const {
    return std::holds_alternative<DirichletMixtureLaw>(kind);
  }
};

/// Validating constructor for a Dirichlet-mixture law: draws are
/// epsilon*1 + (1 - d*epsilon)*Dirichlet(alpha), elliptic by construction.
inline EnvironmentLaw make_dirichlet_law(int d, double epsilon,
                                         std::vector<double> alpha) {
  if (d < 3) throw std::invalid_argument("invalid-parameter: d >= 3 required");
  if (!(epsilon > 0.0) || epsilon >= 1.0 / d)
    throw std::invalid_argument(
        "infeasible-ellipticity: epsilon must lie in (0, 1/d)");
  if (static_cast<int>(alpha.size()) != d)
    throw std::invalid_argument("invalid-parameter: alpha must have length d");
  for (double a : alpha)
    if (!(a > 0.0))
      throw std::invalid_argument("invalid-parameter: alpha entries must be > 0");
  return EnvironmentLaw{epsilon, DirichletMixtureLaw{std::move(alpha)}};
}

/// Validating constructor for a finite-support law. Each support vector
/// must already satisfy the floor.
inline EnvironmentLaw make_finite_support_law(
    int d, double epsilon, std::vector<TransitionVector> vectors,
    std::vector<double> weights) {
  if (d < 3) throw std::invalid_argument("invalid-parameter: d >= 3 required");
  if (!(epsilon > 0.0) || epsilon >= 1.0 / d)
    throw std::invalid_argument(
        "infeasible-ellipticity: epsilon must lie in (0, 1/d)");
  if (vectors.empty() || vectors.size() != weights.size())
    throw std::invalid_argument(
        "invalid-parameter: need matching nonempty vectors/weights");
  for (const auto& v : vectors) {
    if (v.degree() != d)
      throw std::invalid_argument("invalid-parameter: support vector length != d");
    v.validate(epsilon);
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("invalid-parameter: negative weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("invalid-parameter: weights must sum to 1");
  return EnvironmentLaw{epsilon,
                        FiniteSupportLaw{std::move(vectors), std::move(weights)}};
}

/// The environment omega: law + master seed. Value type, freely shared
/// read-only across threads; transition_at is pure and reentrant.
class Environment {
 public:
  Environment(GeneratorSet gs, EnvironmentLaw law, std::uint64_t master_seed)
      : gs_(gs), law_(std::move(law)), master_seed_(master_seed) {
    if (const auto* dm = std::get_if<DirichletMixtureLaw>(&law_.kind)) {
      if (static_cast<int>(dm->alpha.size()) != gs_.degree())
        throw std::invalid_argument("invalid-parameter: alpha length != d");
    } else {
      const auto& fs = std::get<FiniteSupportLaw>(law_.kind);
      if (fs.vectors.front().degree() != gs_.degree())
        throw std::invalid_argument("invalid-parameter: vector length != d");
    }
  }

  const GeneratorSet& generators() const { return gs_; }
  const EnvironmentLaw& law() const { return law_; }
  std::uint64_t master_seed() const { return master_seed_; }
  double epsilon() const { return law_.epsilon; }

  /// omega(x, .) — deterministic in (law, master_seed, x).
  TransitionVector transition_at(const Vertex& x) const {
    return transition_from_key(x.key());
  }

  /// Same draw addressed by the canonical vertex key; the walker hot path
  /// maintains the key incrementally and calls this directly.
  TransitionVector transition_from_key(const VertexKey& key) const {
    CounterRng rng(master_seed_, key.h1, key.h2);
    const int d = gs_.degree();
    TransitionVector out;
    if (const auto* dm = std::get_if<DirichletMixtureLaw>(&law_.kind)) {
      const auto dir = rng.dirichlet(dm->alpha);
      out.p.resize(static_cast<std::size_t>(d));
      const double scale = 1.0 - d * law_.epsilon;
      for (int s = 0; s < d; ++s)
        out.p[static_cast<std::size_t>(s)] =
            law_.epsilon + scale * dir[static_cast<std::size_t>(s)];
    } else {
      const auto& fs = std::get<FiniteSupportLaw>(law_.kind);
      const double u = rng.uniform01();
      double acc = 0.0;
      std::size_t pick = fs.vectors.size() - 1;
      for (std::size_t i = 0; i < fs.weights.size(); ++i) {
        acc += fs.weights[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      out = fs.vectors[pick];
    }
    return out;
  }

 private:
  GeneratorSet gs_;
  EnvironmentLaw law_;
  std::uint64_t master_seed_;
};

}  // namespace rwre
