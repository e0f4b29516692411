#pragma once

// Reduced-word algebra for the free product Z^{*k} * Z2^{*r} and the
// d-regular Cayley tree it spans (d = 2k + r).
//
// Conventions, fixed once for the whole project:
//   * generators 0..2k-1 are a_1, a_1^-1, ..., a_k, a_k^-1 (even/odd
//     inverse pairs); 2k..2k+r-1 are the involutions b_1..b_r;
//   * a word s_1 s_2 ... s_n has its leftmost letter s_1 applied last,
//     so the neighbors of x are s*x, the parent of x strips s_1, and the
//     type of x is s_1;
//   * a Vertex stores its letters root-side first (index 0 holds s_n),
//     which makes left-multiplication a push/pop at the back.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/prf.hpp"

namespace rwre {

struct GeneratorSet {
  int k = 0;  // Z factors (each contributes a generator and its inverse)
  int r = 0;  // Z2 factors (self-inverse generators)

  GeneratorSet(int k_, int r_) : k(k_), r(r_) {
    if (k < 0 || r < 0 || degree() < 3)
      throw std::invalid_argument("GeneratorSet: need d = 2k + r >= 3");
    if (degree() > 255)
      throw std::invalid_argument("GeneratorSet: d <= 255 required");
  }

  int degree() const { return 2 * k + r; }

  /// The involution s -> s^-1 on generator indices.
  int inv(int s) const {
    check(s);
    return s < 2 * k ? (s ^ 1) : s;
  }

  bool is_involution(int s) const {
    check(s);
    return s >= 2 * k;
  }

  /// Human-readable generator label, used for matrix CSV headers.
  std::string label(int s) const {
    check(s);
    if (s < 2 * k)
      return "a" + std::to_string(s / 2 + 1) + (s % 2 ? "-" : "+");
    return "b" + std::to_string(s - 2 * k + 1);
  }

  void check(int s) const {
    if (s < 0 || s >= degree())
      throw std::out_of_range("invalid-generator: index " + std::to_string(s) +
                              " not in 0.." + std::to_string(degree() - 1));
  }
};

/// 128-bit canonical key of a vertex: two independent polynomial hashes of
/// the reduced word. Stable under the push/pop updates below, so a walker
/// can maintain it incrementally in O(1) per step.
struct VertexKey {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
  friend bool operator==(const VertexKey&, const VertexKey&) = default;
};

struct VertexKeyHash {
  std::size_t operator()(const VertexKey& key) const {
    return static_cast<std::size_t>(key.h1 ^ (key.h2 * 0x9E3779B97F4A7C15ull));
  }
};

namespace detail {
// Odd multipliers and their mod-2^64 inverses for the rolling hashes.
inline constexpr std::uint64_t kHashBase1 = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kHashBase2 = 0xC2B2AE3D27D4EB4Full;

inline constexpr std::uint64_t mod_inverse_pow2(std::uint64_t a) {
  std::uint64_t x = a;  // Newton iteration, converges in 6 steps for 2^64
  for (int i = 0; i < 6; ++i) x *= 2 - a * x;
  return x;
}

inline constexpr std::uint64_t kHashBase1Inv = mod_inverse_pow2(kHashBase1);
inline constexpr std::uint64_t kHashBase2Inv = mod_inverse_pow2(kHashBase2);
}  // namespace detail

/// A group element as a reduced word; doubles as a tree vertex and as the
/// geodesic from the root. Immutable through the public API.
class Vertex {
 public:
  Vertex() = default;

  int level() const { return static_cast<int>(letters_.size()); }
  bool is_root() const { return letters_.empty(); }

  /// Letter i of the word (0 = leftmost = most recently applied).
  int letter(int i) const {
    return letters_[letters_.size() - 1 - static_cast<std::size_t>(i)];
  }

  /// First letter of the word: the generator carrying parent -> this.
  int type() const {
    if (is_root()) throw std::logic_error("root-has-no-parent: e has no type");
    return letters_.back();
  }

  VertexKey key() const { return key_; }

  friend bool operator==(const Vertex& a, const Vertex& b) {
    return a.letters_ == b.letters_;
  }

  /// True if this vertex's word is a suffix of y's word, i.e. y lies in the
  /// subtree rooted at this vertex.
  bool is_ancestor_of(const Vertex& y) const {
    if (letters_.size() > y.letters_.size()) return false;
    for (std::size_t i = 0; i < letters_.size(); ++i)
      if (letters_[i] != y.letters_[i]) return false;
    return true;
  }

  /// Text form for CSV output: letters joined by '.', leftmost first;
  /// empty string for e.
  std::string text() const {
    std::string out;
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) {
      if (!out.empty()) out += '.';
      out += std::to_string(static_cast<int>(*it));
    }
    return out;
  }

  /// Canonical byte serialization: 4-byte little-endian length prefix
  /// followed by the letters as unsigned bytes, leftmost letter first.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(4 + letters_.size());
    const std::uint32_t n = static_cast<std::uint32_t>(letters_.size());
    for (int b = 0; b < 4; ++b)
      out.push_back(static_cast<std::uint8_t>(n >> (8 * b)));
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it)
      out.push_back(*it);
    return out;
  }

 private:
  friend class VertexBuilder;
  friend Vertex left_multiply(int, const Vertex&, const GeneratorSet&);
  friend std::pair<Vertex, int> parent_and_type(const Vertex&,
                                                const GeneratorSet&);

  void push(int s) {
    pow1_ *= detail::kHashBase1;
    pow2_ *= detail::kHashBase2;
    key_.h1 += static_cast<std::uint64_t>(s + 1) * pow1_;
    key_.h2 += static_cast<std::uint64_t>(s + 1) * pow2_;
    letters_.push_back(static_cast<std::uint8_t>(s));
  }

  void pop() {
    const std::uint64_t s = letters_.back();
    letters_.pop_back();
    key_.h1 -= (s + 1) * pow1_;
    key_.h2 -= (s + 1) * pow2_;
    pow1_ *= detail::kHashBase1Inv;
    pow2_ *= detail::kHashBase2Inv;
  }

  std::vector<std::uint8_t> letters_;  // root-side first
  VertexKey key_{};
  std::uint64_t pow1_ = 1;  // base^level, multiplier for the next push
  std::uint64_t pow2_ = 1;
};

/// Mutable vertex cursor for hot loops: applies generators in place and
/// keeps the canonical key current. Semantically a Vertex under repeated
/// left_multiply, without the copies.
class VertexBuilder {
 public:
  explicit VertexBuilder(const GeneratorSet& gs, Vertex start = Vertex{})
      : gs_(&gs), v_(std::move(start)) {}

  /// Apply s on the left; returns +1 or -1 level change.
  int apply(int s) {
    gs_->check(s);
    if (!v_.is_root() && v_.letters_.back() == gs_->inv(s)) {
      v_.pop();
      return -1;
    }
    v_.push(s);
    return +1;
  }

  const Vertex& vertex() const { return v_; }
  int level() const { return v_.level(); }
  VertexKey key() const { return v_.key(); }

 private:
  const GeneratorSet* gs_;
  Vertex v_;
};

/// Normal form: reduce an arbitrary letter sequence by cancelling adjacent
/// inverse pairs. Idempotent on reduced input.
inline Vertex reduce_word(const std::vector<int>& letters,
                          const GeneratorSet& gs) {
  VertexBuilder b(gs);
  // Letters are given leftmost-first; apply right-to-left so each is a
  // left multiplication.
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) b.apply(*it);
  return b.vertex();
}

/// s * x, reduced. Level changes by exactly +-1.
inline Vertex left_multiply(int s, const Vertex& x, const GeneratorSet& gs) {
  gs.check(s);
  Vertex y = x;
  if (!y.is_root() && y.letters_.back() == gs.inv(s))
    y.pop();
  else
    y.push(s);
  return y;
}

/// All d neighbors {s*x : s in S}, in generator order.
inline std::vector<Vertex> neighbors(const Vertex& x, const GeneratorSet& gs) {
  std::vector<Vertex> out;
  out.reserve(static_cast<std::size_t>(gs.degree()));
  for (int s = 0; s < gs.degree(); ++s) out.push_back(left_multiply(s, x, gs));
  return out;
}

/// (parent, type): strip the first letter. left_multiply(type, parent) == x.
inline std::pair<Vertex, int> parent_and_type(const Vertex& x,
                                              const GeneratorSet& gs) {
  (void)gs;
  if (x.is_root())
    throw std::logic_error("root-has-no-parent: parent_and_type(e)");
  Vertex p = x;
  const int type = p.letters_.back();
  p.pop();
  return {std::move(p), type};
}

}  // namespace rwre
