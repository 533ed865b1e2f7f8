#include "majority/graphs.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <queue>
#include <unordered_map>

namespace majority {

RegularGraph::RegularGraph(std::uint32_t n, int k, GraphKind kind,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges)
    : k_(k), kind_(kind) {
  std::vector<std::uint32_t> deg(n, 0);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw UsageError("edge endpoint out of range");
    ++deg[u];
    ++deg[v];
  }
  offsets_.assign(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
  adj_.resize(offsets_[n]);
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [u, v] : edges) {
    adj_[fill[u]++] = v;
    adj_[fill[v]++] = u;
  }
  for (std::uint32_t v = 0; v < n; ++v) std::sort(adj_.begin() + offsets_[v], adj_.begin() + offsets_[v + 1]);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> RegularGraph::edges() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(edge_count());
  for (std::uint32_t u = 0; u < n(); ++u)
    for (auto v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

void RegularGraph::set_tree_layers(std::vector<int> depth) {
  depth_ = std::move(depth);
  int dmax = depth_.empty() ? -1 : *std::max_element(depth_.begin(), depth_.end());
  layer_end_.assign(dmax + 1, 0);
  for (std::uint32_t v = 0; v < depth_.size(); ++v) {
    if (v > 0 && depth_[v] < depth_[v - 1]) throw NumericalError("tree numbering is not breadth-first");
    layer_end_[depth_[v]] = v + 1;
  }
}

std::uint64_t tree_vertex_count(int k, int depth, bool rooted) {
  std::uint64_t total = 1, layer = 1;
  for (int d = 1; d <= depth; ++d) {
    layer *= (d == 1 && !rooted) ? k : k - 1;
    total += layer;
  }
  return total;
}

RegularGraph build_tree(int k, int depth, bool rooted) {
  if (k < 2) throw UsageError("tree degree must be at least 2");
  if (depth < 0) throw UsageError("tree depth must be non-negative");
  const std::uint64_t count = tree_vertex_count(k, depth, rooted);
  if (count > (1ULL << 31)) throw ResourceCapError("tree too large");
  const auto n = static_cast<std::uint32_t>(count);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(n - 1);
  std::vector<int> dep(n, 0);
  // Children are appended in parent order, which yields breadth-first numbering.
  std::uint32_t next = 1;
  for (std::uint32_t v = 0; v < n && next < n; ++v) {
    const int children = (v == 0 && !rooted) ? k : k - 1;
    for (int c = 0; c < children && next < n; ++c) {
      edges.emplace_back(v, next);
      dep[next] = dep[v] + 1;
      ++next;
    }
  }
  RegularGraph g(n, k, rooted ? GraphKind::RootedTree : GraphKind::FullTree, edges);
  g.set_tree_layers(std::move(dep));
  return g;
}

namespace {

std::uint64_t edge_key(std::uint32_t u, std::uint32_t v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

}  // namespace

RegularGraph sample_random_regular(std::uint32_t n, int k, const RandomSeed& seed) {
  if (k < 1) throw UsageError("degree must be positive");
  if ((static_cast<std::uint64_t>(n) * k) % 2 != 0) throw UsageError("n*k must be even");
  if (n <= static_cast<std::uint32_t>(k)) throw UsageError("need n > k");
  Rng rng(seed);
  const std::size_t half = static_cast<std::size_t>(n) * k;
  const std::size_t m = half / 2;
  std::vector<std::uint32_t> stubs(half);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges(m);
  std::unordered_map<std::uint64_t, int> mult;
  mult.reserve(m * 2);
  const std::uint64_t cap = 100ULL * n * k;
  std::uint64_t attempts = 0;
  // Tiny dense cases (e.g. n = k+1) can cycle under local swaps; start over from a
  // fresh pairing when one round of rewiring stalls.
  const std::uint64_t round_budget = 20ULL * m + 100;
restart:
  for (std::size_t i = 0; i < half; ++i) stubs[i] = static_cast<std::uint32_t>(i / k);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  mult.clear();
  for (std::size_t e = 0; e < m; ++e) {
    edges[e] = {stubs[2 * e], stubs[2 * e + 1]};
    ++mult[edge_key(edges[e].first, edges[e].second)];
  }
  auto offending = [&](std::size_t e) {
    auto [u, v] = edges[e];
    return u == v || mult[edge_key(u, v)] > 1;
  };
  std::vector<std::size_t> bad;
  for (std::size_t e = 0; e < m; ++e)
    if (offending(e)) bad.push_back(e);

  std::uint64_t round = 0;
  while (!bad.empty()) {
    if (attempts++ >= cap) throw ResourceCapError("random regular graph rewiring did not terminate");
    if (round++ >= round_budget) goto restart;
    const std::size_t e1 = bad.back();
    if (!offending(e1)) {
      bad.pop_back();
      continue;
    }
    // Uniform partner among all other edges; two offending edges sometimes have to be
    // swapped with each other (e.g. the last defect on a complete graph).
    if (m < 2) throw ResourceCapError("cannot rewire a single edge");
    std::size_t e2;
    do e2 = static_cast<std::size_t>(rng() % m);
    while (e2 == e1);
    auto [a, b] = edges[e1];
    auto [c, d] = edges[e2];
    if (rng() & 1) std::swap(c, d);
    --mult[edge_key(a, b)];
    --mult[edge_key(c, d)];
    edges[e1] = {a, c};
    edges[e2] = {b, d};
    ++mult[edge_key(a, c)];
    ++mult[edge_key(b, d)];
    if (offending(e1)) bad.push_back(e1);
    if (offending(e2)) bad.push_back(e2);
    // Swaps can repair or create multiplicity elsewhere; rescan lazily when the list drains.
    if (bad.empty())
      for (std::size_t e = 0; e < m; ++e)
        if (offending(e)) bad.push_back(e);
  }
  return RegularGraph(n, k, GraphKind::RandomRegular, edges);
}

std::vector<int> bfs_depths(const RegularGraph& g) {
  std::vector<int> dist(g.n(), -1);
  if (g.n() == 0) return dist;
  std::queue<std::uint32_t> q;
  dist[0] = 0;
  q.push(0);
  while (!q.empty()) {
    auto v = q.front();
    q.pop();
    for (auto w : g.neighbors(v))
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
  }
  return dist;
}

bool is_simple(const RegularGraph& g) {
  for (std::uint32_t v = 0; v < g.n(); ++v) {
    auto nb = g.neighbors(v);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      if (nb[i] == v) return false;
      if (i > 0 && nb[i] == nb[i - 1]) return false;
    }
  }
  return true;
}

void write_edge_list(std::ostream& out, const RegularGraph& g) {
  out << g.n() << ' ' << g.k() << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

RegularGraph read_edge_list(std::istream& in) {
  std::uint64_t n = 0;
  int k = 0;
  if (!(in >> n >> k)) throw UsageError("edge list: missing header");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::uint64_t u, v;
  while (in >> u >> v) {
    if (u >= n || v >= n) throw UsageError("edge list: vertex id out of range");
    edges.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
  }
  return RegularGraph(static_cast<std::uint32_t>(n), k, GraphKind::RandomRegular, edges);
}

}  // namespace majority
