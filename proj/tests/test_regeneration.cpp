#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/walk.hpp"

using namespace rwre;

namespace {

const GeneratorSet kG4(2, 0);

Trajectory make_traj(std::vector<int> steps) {
  Trajectory t;
  for (int s : steps) t.steps.push_back(static_cast<std::uint8_t>(s));
  return t;
}

Trajectory random_traj(std::uint64_t id, std::size_t n_steps,
                       const EnvironmentLaw& law) {
  CounterRng mix(101, id, 1);
  Environment env(kG4, law, mix.next_u64());
  CounterRng rng(101, id, 2);
  return simulate_walk(env, Vertex{}, n_steps, rng);
}

std::set<int> entry_levels(const RegenerationRecord& rec) {
  std::set<int> out;
  for (const auto& e : rec.entries) out.insert(e.level);
  return out;
}

}  // namespace

TEST_CASE("monotone outward trajectory regenerates at every level") {
  const auto traj = make_traj(std::vector<int>(50, 0));
  for (auto mode : {RegenMode::literal, RegenMode::strict}) {
    const auto rec = detect_regenerations(traj, kG4, mode, 10);
    REQUIRE(rec.entries.size() == 50);
    for (const auto& e : rec.entries) {
      CHECK(e.tau == static_cast<std::size_t>(e.level));
      CHECK(e.type == 0);
      CHECK(e.confirmed == (e.level <= 40));  // level 50 - delta
    }
    REQUIRE(rec.blocks.size() == 40);
    for (const auto& b : rec.blocks) {
      CHECK(b.y == 1);
      CHECK(b.z == 1);
      CHECK(b.l_block == 1);
      CHECK(b.d_block == 1);
    }
  }
}

TEST_CASE("literal vs strict on a hand-built excursion") {
  // e, a, e, b, ab, aab, ... : the level-1 visit at a is abandoned through
  // the parent, which the literal condition forgives and strict does not
  std::vector<int> steps = {0, 1, 2};
  for (int i = 0; i < 20; ++i) steps.push_back(0);
  const auto traj = make_traj(steps);

  const auto lit = detect_regenerations(traj, kG4, RegenMode::literal, 3);
  REQUIRE_FALSE(lit.entries.empty());
  CHECK(lit.entries.front().tau == 1);
  CHECK(lit.entries.front().level == 1);
  CHECK(lit.entries.front().type == 0);

  const auto str = detect_regenerations(traj, kG4, RegenMode::strict, 3);
  REQUIRE_FALSE(str.entries.empty());
  CHECK(str.entries.front().tau == 4);
  CHECK(str.entries.front().level == 2);
  CHECK(str.entries.front().type == 0);  // entered a b-rooted branch via a1

  // occupation up to tau_1 = 4: e, a, e, b -> 3 distinct vertices
  const auto occ = occupation_stats(traj, kG4, str);
  CHECK(occ.distinct_before_tau1 == 3);
  CHECK(occ.l_start == 2);
}

TEST_CASE("strict regeneration levels are a subset of literal ones") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  for (std::uint64_t id = 0; id < 20; ++id) {
    const auto traj = random_traj(id, 5000, law);
    const auto lit = detect_regenerations(traj, kG4, RegenMode::literal, 50);
    const auto str = detect_regenerations(traj, kG4, RegenMode::strict, 50);
    const auto lit_levels = entry_levels(lit);
    for (int lv : entry_levels(str)) CHECK(lit_levels.count(lv) == 1);
    CHECK(str.entries.size() <= lit.entries.size());
  }
}

TEST_CASE("strict entries satisfy the suffix-level invariant") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  const auto traj = random_traj(7, 20000, law);
  const auto rec = detect_regenerations(traj, kG4, RegenMode::strict, 100);
  const auto levels = traj.levels(kG4);
  std::vector<int> suffix_min(levels.size() + 1, 1 << 30);
  for (std::size_t m = levels.size(); m-- > 0;)
    suffix_min[m] = std::min(levels[m], suffix_min[m + 1]);
  for (const auto& e : rec.entries) {
    CHECK(levels[e.tau] == e.level);
    CHECK(suffix_min[e.tau + 1] > e.level);
  }
  // confirmations form a prefix of the entry list
  bool in_prefix = true;
  for (const auto& e : rec.entries) {
    if (!e.confirmed) in_prefix = false;
    CHECK(e.confirmed == in_prefix);
  }
}

TEST_CASE("larger delta confirms fewer entries, same entry list") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  const auto traj = random_traj(3, 20000, law);
  const auto lo = detect_regenerations(traj, kG4, RegenMode::strict, 50);
  const auto hi = detect_regenerations(traj, kG4, RegenMode::strict, 200);
  REQUIRE(lo.entries.size() == hi.entries.size());
  for (std::size_t i = 0; i < lo.entries.size(); ++i) {
    CHECK(lo.entries[i].tau == hi.entries[i].tau);
    if (hi.entries[i].confirmed) CHECK(lo.entries[i].confirmed);
  }
  CHECK(hi.confirmed_count() <= lo.confirmed_count());
}

TEST_CASE("blocks telescope to the confirmed horizon") {
  const auto law = make_dirichlet_law(4, 0.1, {1, 1, 1, 1});
  const auto traj = random_traj(11, 20000, law);
  const auto rec = detect_regenerations(traj, kG4, RegenMode::strict, 100);
  REQUIRE(rec.blocks.size() >= 2);
  std::uint64_t sum_y = 0;
  std::int64_t sum_z = 0;
  for (const auto& b : rec.blocks) {
    sum_y += b.y;
    sum_z += b.z;
    CHECK(b.y >= 1);
    CHECK(b.z >= 1);
    CHECK(b.d_block >= 1);
    CHECK(b.l_block >= 1);
  }
  const RegenEntry* last = nullptr;
  for (const auto& e : rec.entries)
    if (e.confirmed) last = &e;
  REQUIRE(last != nullptr);
  CHECK(sum_y == last->tau);
  CHECK(sum_z == last->level);
}

TEST_CASE("uniform d=4 blocks average Z/Y near the known speed 1/2") {
  const auto law = make_finite_support_law(
      4, 0.2, {TransitionVector{{0.25, 0.25, 0.25, 0.25}}}, {1.0});
  double sum_y = 0, sum_z = 0;
  for (std::uint64_t id = 0; id < 20; ++id) {
    const auto traj = random_traj(100 + id, 20000, law);
    const auto rec = detect_regenerations(traj, kG4, RegenMode::strict, 100);
    for (const auto& row : block_statistics(rec)) {
      sum_y += static_cast<double>(row.y);
      sum_z += static_cast<double>(row.z);
    }
  }
  CHECK_THAT(sum_z / sum_y, Catch::Matchers::WithinAbs(0.5, 0.02));
}

TEST_CASE("block_statistics can drop the first block") {
  const auto traj = make_traj(std::vector<int>(30, 0));
  const auto rec = detect_regenerations(traj, kG4, RegenMode::strict, 5);
  const auto all = block_statistics(rec, true);
  const auto tail = block_statistics(rec, false);
  REQUIRE(all.size() == tail.size() + 1);
  CHECK(all.front().index == 1);
  CHECK(tail.front().index == 2);
}

TEST_CASE("error paths") {
  const auto traj = make_traj({0, 1, 0, 1});  // oscillates, never regenerates
  CHECK_THROWS_WITH(detect_regenerations(traj, kG4, RegenMode::strict, 0),
                    Catch::Matchers::ContainsSubstring("invalid-margin"));
  const auto rec = detect_regenerations(traj, kG4, RegenMode::strict, 5);
  CHECK(rec.entries.empty());
  CHECK_THROWS_WITH(block_statistics(rec),
                    Catch::Matchers::ContainsSubstring("insufficient-blocks"));
  CHECK_THROWS_WITH(occupation_stats(traj, kG4, rec),
                    Catch::Matchers::ContainsSubstring("insufficient-blocks"));
}
