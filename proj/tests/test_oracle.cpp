#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/oracle.hpp"
#include "rwre/walk.hpp"

using namespace rwre;

namespace {

const GeneratorSet kG4(2, 0);

FiniteChain three_state(double up) {
  FiniteChain c;
  c.n_states = 3;
  c.roles = {StateRole::taboo, StateRole::interior, StateRole::target};
  c.transition.assign(9, 0.0);
  c.at(1, 0) = 1.0 - up;
  c.at(1, 2) = up;
  return c;
}

}  // namespace

TEST_CASE("three-state chain: hit probability equals the up weight") {
  const auto c = three_state(0.7);
  CHECK_THAT(exact_hitting_probability(c, 1),
             Catch::Matchers::WithinAbs(0.7, 1e-14));
  CHECK(exact_hitting_probability(c, 2) == 1.0);
  CHECK(exact_hitting_probability(c, 0) == 0.0);
  CHECK_THAT(exact_expected_hitting_time(c, 1),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK(exact_expected_hitting_time(c, 2) == 0.0);
  CHECK_THROWS_AS(exact_hitting_probability(c, 3), std::out_of_range);
}

TEST_CASE("symmetric path of length 4: escape 1/4, absorption time k(n-k)") {
  const std::vector<double> half(4, 0.5);
  const auto c = path_chain(half, half);
  CHECK_THAT(exact_hitting_probability(c, 1),
             Catch::Matchers::WithinAbs(0.25, 1e-12));
  for (int k = 1; k <= 3; ++k)
    CHECK_THAT(exact_expected_hitting_time(c, k),
               Catch::Matchers::WithinAbs(k * (4.0 - k), 1e-10));
}

TEST_CASE("biased path chain agrees with the closed-form ruin value") {
  // constant up probability p: escape = (1 - q/p) / (1 - (q/p)^n)
  const double p = 0.6, q = 0.4;
  const int n = 6;
  const std::vector<double> back(static_cast<std::size_t>(n), q);
  const std::vector<double> fwd(static_cast<std::size_t>(n), p);
  const auto c = path_chain(back, fwd);
  const double r = q / p;
  const double expect = (1 - r) / (1 - std::pow(r, n));
  CHECK_THAT(exact_hitting_probability(c, 1),
             Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("truncated tree chain matches a direct simulation") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  Environment env(kG4, law, 314159);
  // split the depth-3 frontier: type-0 subtree is the target
  const auto chain = truncated_tree_chain(env, 3, [](const Vertex& v) {
    return v.type() == 0 ? StateRole::target : StateRole::taboo;
  });
  const double exact = exact_hitting_probability(chain, 0);

  CounterRng rng(271828, 0);
  const int trials = 40000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    VertexBuilder cur(kG4);
    TransitionCache cache;
    while (cur.level() < 3) {
      const int s = sample_categorical(cache.get(env, cur.key()), rng);
      cur.apply(s);
    }
    if (cur.vertex().type() == 0) ++hits;
  }
  const double sigma = std::sqrt(exact * (1 - exact) / trials);
  CHECK_THAT(static_cast<double>(hits) / trials,
             Catch::Matchers::WithinAbs(exact, 3 * sigma));
}

TEST_CASE("expected absorption time on the tree matches simulation") {
  Environment env(
      kG4,
      make_finite_support_law(4, 0.2,
                              {TransitionVector{{0.25, 0.25, 0.25, 0.25}}},
                              {1.0}),
      1);
  const auto chain = truncated_tree_chain(env, 4);
  const double exact = exact_expected_hitting_time(chain, 0);
  CounterRng rng(999, 0);
  const int trials = 20000;
  double total = 0;
  for (int t = 0; t < trials; ++t) {
    VertexBuilder cur(kG4);
    int steps = 0;
    while (cur.level() < 4) {
      cur.apply(static_cast<int>(rng.uniform_below(4)));
      ++steps;
    }
    total += steps;
  }
  const double mean = total / trials;
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(exact, 0.15));
}

TEST_CASE("validation rejects malformed chains") {
  auto c = three_state(0.7);
  c.at(1, 2) = 0.6;  // row sums to 1.3
  CHECK_THROWS_WITH(exact_hitting_probability(c, 1),
                    Catch::Matchers::ContainsSubstring("does not sum to 1"));

  // interior state that can never reach an absorbing state
  FiniteChain trap;
  trap.n_states = 4;
  trap.roles = {StateRole::taboo, StateRole::interior, StateRole::interior,
                StateRole::target};
  trap.transition.assign(16, 0.0);
  trap.at(1, 2) = 1.0;
  trap.at(2, 1) = 1.0;
  CHECK_THROWS_WITH(exact_hitting_probability(trap, 1),
                    Catch::Matchers::ContainsSubstring("absorbing-structure"));

  FiniteChain huge;
  huge.n_states = 2001;
  huge.roles.assign(2001, StateRole::target);
  huge.transition.assign(2001ull * 2001ull, 0.0);
  CHECK_THROWS_WITH(exact_hitting_probability(huge, 0),
                    Catch::Matchers::ContainsSubstring("2000"));

  // d = 4 at depth 7 exceeds the state cap (4373 vertices)
  Environment env(
      kG4,
      make_finite_support_law(4, 0.2,
                              {TransitionVector{{0.25, 0.25, 0.25, 0.25}}},
                              {1.0}),
      1);
  CHECK_THROWS_WITH(truncated_tree_chain(env, 7),
                    Catch::Matchers::ContainsSubstring("2000"));
}
