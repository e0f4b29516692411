#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rwre/branching.hpp"
#include "rwre/environment.hpp"
#include "rwre/oracle.hpp"

using namespace rwre;

namespace {

const GeneratorSet kG4(2, 0);

EnvironmentLaw uniform_law() {
  return make_finite_support_law(
      4, 0.2, {TransitionVector{{0.25, 0.25, 0.25, 0.25}}}, {1.0});
}

std::vector<int> random_descending_letters(CounterRng& rng, int len) {
  std::vector<int> out;
  int last = -1;
  for (int i = 0; i < len; ++i) {
    int g;
    do {
      g = static_cast<int>(rng.uniform_below(4));
    } while (last >= 0 && g == kG4.inv(last));
    out.push_back(g);
    last = g;
  }
  return out;
}

}  // namespace

TEST_CASE("length-1 path escapes with probability 1") {
  Environment env(kG4, uniform_law(), 1);
  const auto path = build_path_environment(env, Vertex{}, {0});
  CHECK(escape_probability_path(path) == 1.0);
}

TEST_CASE("symmetric path of length n escapes with probability 1/n") {
  Environment env(kG4, uniform_law(), 1);
  for (int n = 2; n <= 8; ++n) {
    const auto path =
        build_path_environment(env, Vertex{}, std::vector<int>(n, 0));
    CHECK_THAT(escape_probability_path(path),
               Catch::Matchers::WithinAbs(1.0 / n, 1e-14));
  }
}

TEST_CASE("ruin formula matches the linear-solve oracle on random paths") {
  const auto law = make_dirichlet_law(4, 0.05, {1, 1, 1, 1});
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 300; ++trial) {
    CounterRng mix(55, trial, 0);
    Environment env(kG4, law, mix.next_u64());
    CounterRng rng(55, trial, 1);
    const int len = 2 + static_cast<int>(rng.uniform_below(7));
    const auto letters = random_descending_letters(rng, len);
    const auto path = build_path_environment(env, Vertex{}, letters);
    const double formula = escape_probability_path(path);
    const double exact =
        exact_hitting_probability(path_chain(path.backward, path.forward), 1);
    worst = std::max(worst, std::abs(formula - exact));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("extending a path can only lower the escape probability") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  Environment env(kG4, law, 77);
  CounterRng rng(78, 0);
  const auto letters = random_descending_letters(rng, 10);
  double prev = 1.0;
  for (int len = 1; len <= 10; ++len) {
    const std::vector<int> prefix(letters.begin(), letters.begin() + len);
    const double p =
        escape_probability_path(build_path_environment(env, Vertex{}, prefix));
    CHECK(p <= prev + 1e-15);
    CHECK(p > 0.0);
    prev = p;
  }
}

TEST_CASE("psi = 1 offspring matrix is the non-backtracking indicator") {
  const auto M = estimate_offspring_matrix(kG4, uniform_law(), 1, 5, 9);
  for (int s = 0; s < 4; ++s)
    for (int u = 0; u < 4; ++u) {
      CHECK(M.at(s, u) == (u == kG4.inv(s) ? 0.0 : 1.0));
      CHECK(M.stderr_at(s, u) == 0.0);
    }
  CHECK(M.min_row_sum() == 3.0);
}

TEST_CASE("psi = 1 with the pinned-first-step convention") {
  const auto M = estimate_offspring_matrix(
      kG4, uniform_law(), 1, 5, 9, PathConvention::first_step_equals_type);
  for (int s = 0; s < 4; ++s)
    for (int u = 0; u < 4; ++u) CHECK(M.at(s, u) == (u == s ? 1.0 : 0.0));
}

TEST_CASE("uniform point mass, d = 4, psi = 2: M = J + I/2, rho = 4.5") {
  const auto M = estimate_offspring_matrix(kG4, uniform_law(), 2, 10, 123);
  for (int s = 0; s < 4; ++s)
    for (int u = 0; u < 4; ++u)
      CHECK_THAT(M.at(s, u),
                 Catch::Matchers::WithinAbs(u == s ? 1.5 : 1.0, 1e-12));
  const auto rep = perron_root(M);
  CHECK(rep.converged);
  CHECK_THAT(rep.rho, Catch::Matchers::WithinAbs(4.5, 1e-9));
  CHECK_THAT(rep.min_row_sum, Catch::Matchers::WithinAbs(4.5, 1e-12));
}

TEST_CASE("perron root of the identity is 1 and bounds hold in general") {
  OffspringMatrix id;
  id.degree = 3;
  id.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  id.stderr_.assign(9, 0.0);
  const auto rep = perron_root(id);
  CHECK_THAT(rep.rho, Catch::Matchers::WithinAbs(1.0, 1e-9));

  const auto law = make_dirichlet_law(4, 0.1, {0.5, 1, 2, 3});
  const auto M = estimate_offspring_matrix(kG4, law, 3, 50, 17);
  const auto r = perron_root(M);
  CHECK(r.converged);
  CHECK(r.rho >= r.min_row_sum - 1e-9);
  CHECK(r.rho <= r.max_row_sum + 1e-9);
}

TEST_CASE("monte carlo standard errors shrink like 1/sqrt(samples)") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  const auto small = estimate_offspring_matrix(kG4, law, 2, 100, 31);
  const auto big = estimate_offspring_matrix(kG4, law, 2, 400, 31);
  REQUIRE(small.max_stderr() > 0.0);
  const double ratio = big.max_stderr() / small.max_stderr();
  CHECK(ratio > 0.3);
  CHECK(ratio < 0.8);  // ideal ratio 0.5
}

TEST_CASE("supercriticality certificate for d = 4, eps = 0.1, flat Dirichlet") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  bool found = false;
  for (int psi = 1; psi <= 6 && !found; ++psi) {
    const auto M = estimate_offspring_matrix(kG4, law, psi, 400, 2024);
    const auto rep = perron_root(M);
    if (M.min_row_sum() - 3 * M.max_stderr() * M.degree > 1.0 && rep.rho > 1.0)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("offspring matrix estimation rejects bad parameters") {
  CHECK_THROWS_WITH(estimate_offspring_matrix(kG4, uniform_law(), 0, 10, 1),
                    Catch::Matchers::ContainsSubstring("invalid-parameter"));
  CHECK_THROWS_WITH(estimate_offspring_matrix(kG4, uniform_law(), 2, 0, 1),
                    Catch::Matchers::ContainsSubstring("invalid-parameter"));
  CHECK_THROWS_WITH(estimate_offspring_matrix(kG4, uniform_law(), 30, 10, 1),
                    Catch::Matchers::ContainsSubstring("too-large-psi"));
}
