#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "rwre/group.hpp"
#include "rwre/prf.hpp"

using namespace rwre;

namespace {

// generators for k=2, r=0: 0 = a1, 1 = a1^-1, 2 = a2, 3 = a2^-1
// for k=1, r=2: 0 = a1, 1 = a1^-1, 2 = b1, 3 = b2

std::vector<int> random_letters(CounterRng& rng, const GeneratorSet& gs,
                                int max_len) {
  const int len = static_cast<int>(rng.uniform_below(max_len + 1));
  std::vector<int> out;
  for (int i = 0; i < len; ++i)
    out.push_back(static_cast<int>(rng.uniform_below(gs.degree())));
  return out;
}

std::size_t count_at_depth(const GeneratorSet& gs, int depth,
                           std::set<std::string>* seen = nullptr) {
  std::vector<Vertex> frontier = {Vertex{}};
  for (int level = 1; level <= depth; ++level) {
    std::vector<Vertex> next;
    for (const auto& v : frontier)
      for (int s = 0; s < gs.degree(); ++s) {
        Vertex w = left_multiply(s, v, gs);
        if (w.level() == level) next.push_back(std::move(w));
      }
    frontier = std::move(next);
  }
  if (seen)
    for (const auto& v : frontier) seen->insert(v.text());
  return frontier.size();
}

}  // namespace

TEST_CASE("generator set validates degree and involution") {
  CHECK_THROWS_AS(GeneratorSet(1, 0), std::invalid_argument);  // d = 2
  CHECK_THROWS_AS(GeneratorSet(0, 2), std::invalid_argument);
  GeneratorSet gs(2, 1);  // d = 5
  CHECK(gs.degree() == 5);
  int fixed = 0;
  for (int s = 0; s < gs.degree(); ++s) {
    CHECK(gs.inv(gs.inv(s)) == s);
    if (gs.inv(s) == s) ++fixed;
  }
  CHECK(fixed == 1);
  CHECK_THROWS_AS(gs.inv(5), std::out_of_range);
}

TEST_CASE("reduce_word cancels inverse pairs") {
  GeneratorSet gs(2, 0);
  CHECK(reduce_word({0, 1}, gs).is_root());  // a1 a1^-1 = e
  GeneratorSet gsb(1, 2);
  CHECK(reduce_word({2, 2}, gsb).is_root());  // b1 b1 = e
  // inner pair cancels, outer letters concatenate: a1 b1 b1 a1 -> a1 a1
  const Vertex v = reduce_word({0, 2, 2, 0}, gsb);
  CHECK(v.level() == 2);
  CHECK(v.text() == "0.0");
  CHECK_THROWS_AS(reduce_word({7}, gs), std::out_of_range);
}

TEST_CASE("reduce_word idempotent on reduced input") {
  GeneratorSet gs(2, 1);
  CounterRng rng(11, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vertex v = reduce_word(random_letters(rng, gs, 12), gs);
    std::vector<int> letters;
    for (int i = 0; i < v.level(); ++i) letters.push_back(v.letter(i));
    CHECK(reduce_word(letters, gs) == v);
  }
}

TEST_CASE("left_multiply changes level by exactly one") {
  GeneratorSet gs(2, 0);
  const Vertex e;
  CHECK(left_multiply(0, e, gs).text() == "0");
  // cancellation: a1^-1 * (a1 b1-ish word)
  const Vertex ab = reduce_word({0, 2}, gs);
  CHECK(left_multiply(1, ab, gs).text() == "2");
  CHECK(left_multiply(0, ab, gs).text() == "0.0.2");
  CHECK(left_multiply(0, ab, gs).level() == 3);
}

TEST_CASE("neighbors of the root are the generators") {
  GeneratorSet gs(2, 0);
  const auto nbrs = neighbors(Vertex{}, gs);
  REQUIRE(nbrs.size() == 4);
  for (int s = 0; s < 4; ++s) {
    CHECK(nbrs[s].level() == 1);
    CHECK(nbrs[s].type() == s);
  }
}

TEST_CASE("neighbors of a level-1 vertex, k=2 r=0") {
  GeneratorSet gs(2, 0);
  const Vertex a1 = reduce_word({0}, gs);
  const auto nbrs = neighbors(a1, gs);
  std::set<std::string> texts;
  for (const auto& n : nbrs) texts.insert(n.text());
  CHECK(texts == std::set<std::string>{"", "0.0", "2.0", "3.0"});
}

TEST_CASE("neighbors are d distinct vertices with one parent") {
  GeneratorSet gs(1, 3);  // d = 5
  CounterRng rng(23, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vertex v = reduce_word(random_letters(rng, gs, 10), gs);
    const auto nbrs = neighbors(v, gs);
    std::set<std::string> texts;
    int down = 0;
    for (const auto& n : nbrs) {
      texts.insert(n.text());
      CHECK(std::abs(n.level() - v.level()) == 1);
      if (n.level() == v.level() - 1) ++down;
    }
    CHECK(texts.size() == static_cast<std::size_t>(gs.degree()));
    CHECK(down == (v.is_root() ? 0 : 1));
  }
}

TEST_CASE("parent_and_type strips the first letter") {
  GeneratorSet gs(1, 2);
  const Vertex a1 = reduce_word({0}, gs);
  auto [p, t] = parent_and_type(a1, gs);
  CHECK(p.is_root());
  CHECK(t == 0);
  const Vertex w = reduce_word({2, 0, 0}, gs);  // b1 a1 a1
  auto [p2, t2] = parent_and_type(w, gs);
  CHECK(t2 == 2);
  CHECK(p2.text() == "0.0");
  CHECK_THROWS_AS(parent_and_type(Vertex{}, gs), std::logic_error);
}

TEST_CASE("parent/type round trip and group inverse, random words") {
  GeneratorSet gs(2, 1);
  CounterRng rng(37, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const Vertex v = reduce_word(random_letters(rng, gs, 14), gs);
    if (!v.is_root()) {
      auto [p, t] = parent_and_type(v, gs);
      CHECK(left_multiply(t, p, gs) == v);
    }
    const int s = static_cast<int>(rng.uniform_below(gs.degree()));
    CHECK(left_multiply(gs.inv(s), left_multiply(s, v, gs), gs) == v);
  }
}

TEST_CASE("level-n vertex counts are d(d-1)^(n-1), no duplicates") {
  for (auto [k, r] : std::vector<std::pair<int, int>>{{0, 3}, {2, 0}, {1, 3}}) {
    GeneratorSet gs(k, r);
    const double d = gs.degree();
    for (int n = 1; n <= 5; ++n) {
      std::set<std::string> seen;
      const std::size_t count = count_at_depth(gs, n, &seen);
      const auto expected =
          static_cast<std::size_t>(d * std::pow(d - 1.0, n - 1) + 0.5);
      CHECK(count == expected);
      CHECK(seen.size() == expected);  // acyclic: no repeats
    }
  }
}

TEST_CASE("canonical key matches a from-scratch rebuild") {
  GeneratorSet gs(2, 1);
  CounterRng rng(41, 0);
  for (int trial = 0; trial < 500; ++trial) {
    auto letters = random_letters(rng, gs, 20);
    const Vertex direct = reduce_word(letters, gs);
    // same element built through a different multiplication order
    VertexBuilder b(gs);
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) b.apply(*it);
    CHECK(b.key() == direct.key());
    CHECK(b.vertex() == direct);
  }
}

TEST_CASE("serialization is length-prefixed, text form dot-joined") {
  GeneratorSet gs(2, 0);
  const Vertex v = reduce_word({0, 3, 0}, gs);
  CHECK(v.text() == "0.3.0");
  CHECK(Vertex{}.text().empty());
  const auto bytes = v.serialize();
  REQUIRE(bytes.size() == 7);
  CHECK(bytes[0] == 3);  // little-endian length
  CHECK(bytes[4] == 0);
  CHECK(bytes[5] == 3);
  CHECK(bytes[6] == 0);
}

TEST_CASE("subtree membership via word suffix") {
  GeneratorSet gs(2, 0);
  const Vertex a = reduce_word({0}, gs);
  const Vertex aa = reduce_word({0, 0}, gs);
  const Vertex ba = reduce_word({2, 0}, gs);
  CHECK(a.is_ancestor_of(aa));
  CHECK(a.is_ancestor_of(ba));
  CHECK(a.is_ancestor_of(a));
  CHECK_FALSE(aa.is_ancestor_of(a));
  CHECK(Vertex{}.is_ancestor_of(ba));
}
