#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "explab/errors.hpp"

namespace explab {

// Assignment vectors and unit sets over at most kMaxUnits units are packed
// into one word; bit i is unit i (0-indexed internally, 1-indexed in all
// file formats and reports).
using Bits = std::uint32_t;

inline int popcount(Bits b) { return std::popcount(b); }
inline Bits bit(int i) { return Bits{1} << i; }
inline bool has_bit(Bits b, int i) { return (b >> i) & 1u; }
inline Bits full_mask(int n) { return n == 0 ? 0 : (Bits{1} << n) - 1; }

// Ascending unit indices of a mask (canonical order).
std::vector<int> mask_units(Bits mask);

// Undirected simple graph on n units. Immutable after construction.
class Network {
 public:
  static constexpr int kMaxUnits = 24;       // full {0,1}^n enumeration cap
  static constexpr int kMaxIsoSize = 10;     // permutation-search cap

  // Edges are 1-indexed pairs; duplicates and self-links are rejected.
  Network(int n, const std::vector<std::pair<int, int>>& edges);

  int n() const { return n_; }
  bool linked(int i, int j) const { return has_bit(adj_[i], j); }
  Bits neighbors(int i) const { return adj_[i]; }
  int degree(int i) const { return popcount(adj_[i]); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // All units within path distance k of i, including i. N(i,0) = {i}.
  Bits neighborhood(int i, int k) const;

  // Shortest path distance, or -1 if unreachable.
  int distance(int i, int j) const;

  // Largest finite pairwise distance.
  int diameter() const;

  bool operator==(const Network& o) const { return n_ == o.n_ && adj_ == o.adj_; }

 private:
  int n_;
  std::vector<Bits> adj_;
  std::vector<std::pair<int, int>> edges_;  // normalized, 1-indexed
};

// Splits d into the sub-words on S and on its complement, each packed in
// ascending unit order.
struct Split {
  Bits inside;
  Bits outside;
};
Split split(Bits d, Bits s, int n);

// Inverse of split: scatters inside/outside sub-words back to a full vector.
Bits recombine(Bits inside, Bits outside, Bits s, int n);

// Extracts the bits of d at the positions of mask, packed in ascending order.
Bits extract(Bits d, Bits mask);

// Scatters a packed sub-word onto the positions of mask.
Bits deposit(Bits sub, Bits mask);

// Labeled-subnetwork isomorphism: is there a permutation carrying
// (net_b, treat_b) onto (net_a, treat_a)? Brute force over permutations with
// degree/treatment pruning; sizes must match and be <= kMaxIsoSize.
// Returns the witness permutation pi with pi[v_b] = v_a, or nullopt.
std::optional<std::vector<int>> labeled_isomorphic(const Network& net_a, Bits treat_a,
                                                   const Network& net_b, Bits treat_b);

}  // namespace explab
