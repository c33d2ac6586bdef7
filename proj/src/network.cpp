#include "explab/network.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>

namespace explab {

std::vector<int> mask_units(Bits mask) {
  std::vector<int> out;
  for (Bits m = mask; m; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

Network::Network(int n, const std::vector<std::pair<int, int>>& edges) : n_(n) {
  if (n < 1) throw ValidationError("network: n must be >= 1");
  if (n > kMaxUnits)
    throw CapExceeded("network: n = " + std::to_string(n) + " exceeds cap " +
                      std::to_string(kMaxUnits));
  adj_.assign(n, 0);
  for (auto [a, b] : edges) {
    if (a < 1 || a > n || b < 1 || b > n)
      throw ValidationError("network: edge [" + std::to_string(a) + "," + std::to_string(b) +
                            "] out of range");
    if (a == b)
      throw ValidationError("network: self edge at unit " + std::to_string(a));
    int i = a - 1, j = b - 1;
    if (linked(i, j))
      throw ValidationError("network: duplicate edge [" + std::to_string(a) + "," +
                            std::to_string(b) + "]");
    adj_[i] |= bit(j);
    adj_[j] |= bit(i);
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
}

Bits Network::neighborhood(int i, int k) const {
  Bits seen = bit(i);
  Bits frontier = seen;
  for (int step = 0; step < k && frontier; ++step) {
    Bits next = 0;
    for (Bits m = frontier; m; m &= m - 1) next |= adj_[std::countr_zero(m)];
    frontier = next & ~seen;
    seen |= frontier;
  }
  return seen;
}

int Network::distance(int i, int j) const {
  if (i == j) return 0;
  Bits seen = bit(i);
  Bits frontier = seen;
  for (int d = 1; frontier; ++d) {
    Bits next = 0;
    for (Bits m = frontier; m; m &= m - 1) next |= adj_[std::countr_zero(m)];
    frontier = next & ~seen;
    if (has_bit(frontier, j)) return d;
    seen |= frontier;
  }
  return -1;
}

int Network::diameter() const {
  int best = 0;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) best = std::max(best, distance(i, j));
  return best;
}

Bits extract(Bits d, Bits mask) {
  Bits out = 0;
  int pos = 0;
  for (Bits m = mask; m; m &= m - 1, ++pos)
    if (d & m & -m) out |= bit(pos);
  return out;
}

Bits deposit(Bits sub, Bits mask) {
  Bits out = 0;
  int pos = 0;
  for (Bits m = mask; m; m &= m - 1, ++pos)
    if (has_bit(sub, pos)) out |= m & -m;
  return out;
}

Split split(Bits d, Bits s, int n) {
  return Split{extract(d, s), extract(d, full_mask(n) & ~s)};
}

Bits recombine(Bits inside, Bits outside, Bits s, int n) {
  return deposit(inside, s) | deposit(outside, full_mask(n) & ~s);
}

namespace {

// Degree sequence plus treated-degree refinement, used for pruning.
struct NodeSig {
  int degree;
  int treated;
  int treated_neighbors;
  auto operator<=>(const NodeSig&) const = default;
};

NodeSig signature(const Network& net, Bits treat, int v) {
  return NodeSig{net.degree(v), has_bit(treat, v) ? 1 : 0,
                 popcount(net.neighbors(v) & treat)};
}

bool extend(const Network& a, Bits ta, const Network& b, Bits tb,
            std::vector<int>& map_b_to_a, std::vector<bool>& used_a, int v) {
  int m = a.n();
  if (v == m) return true;
  for (int w = 0; w < m; ++w) {
    if (used_a[w]) continue;
    if (signature(a, ta, w) != signature(b, tb, v)) continue;
    bool ok = true;
    for (int u = 0; u < v && ok; ++u)
      if (b.linked(v, u) != a.linked(w, map_b_to_a[u])) ok = false;
    if (!ok) continue;
    map_b_to_a[v] = w;
    used_a[w] = true;
    if (extend(a, ta, b, tb, map_b_to_a, used_a, v + 1)) return true;
    used_a[w] = false;
  }
  return false;
}

}  // namespace

std::optional<std::vector<int>> labeled_isomorphic(const Network& net_a, Bits treat_a,
                                                   const Network& net_b, Bits treat_b) {
  if (net_a.n() != net_b.n())
    throw ValidationError("labeled_isomorphic: size mismatch " + std::to_string(net_a.n()) +
                          " vs " + std::to_string(net_b.n()));
  int m = net_a.n();
  if (m > Network::kMaxIsoSize)
    throw CapExceeded("labeled_isomorphic: size " + std::to_string(m) + " exceeds cap " +
                      std::to_string(Network::kMaxIsoSize));
  if (popcount(treat_a) != popcount(treat_b)) return std::nullopt;
  {
    // Multiset of node signatures must agree.
    std::vector<NodeSig> sa, sb;
    for (int v = 0; v < m; ++v) {
      sa.push_back(signature(net_a, treat_a, v));
      sb.push_back(signature(net_b, treat_b, v));
    }
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return std::nullopt;
  }
  std::vector<int> map_b_to_a(m, -1);
  std::vector<bool> used_a(m, false);
  if (extend(net_a, treat_a, net_b, treat_b, map_b_to_a, used_a, 0)) return map_b_to_a;
  return std::nullopt;
}

}  // namespace explab
