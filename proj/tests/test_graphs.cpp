#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "majority/graphs.hpp"

using namespace majority;

TEST_CASE("tree sizes and shapes") {
  const RegularGraph t0 = build_tree(3, 0, false);
  CHECK(t0.n() == 1);
  CHECK(t0.edge_count() == 0);

  const RegularGraph t1 = build_tree(3, 1, false);
  CHECK(t1.n() == 4);
  CHECK(t1.degree(0) == 3);
  for (std::uint32_t v = 1; v < 4; ++v) CHECK(t1.degree(v) == 1);

  const RegularGraph r2 = build_tree(3, 2, true);
  CHECK(r2.n() == 7);
  CHECK(r2.kind() == GraphKind::RootedTree);
  CHECK(r2.degree(0) == 2);
  CHECK(r2.degree(1) == 3);
  CHECK(r2.layer_end(0) == 1);
  CHECK(r2.layer_end(1) == 3);
  CHECK(r2.layer_end(2) == 7);

  CHECK(tree_vertex_count(3, 2, false) == 10);
  CHECK(tree_vertex_count(5, 3, true) == 1 + 4 + 16 + 64);
}

TEST_CASE("tree depths agree with breadth-first search") {
  for (int k : {3, 4, 6})
    for (bool rooted : {false, true}) {
      const RegularGraph t = build_tree(k, 3, rooted);
      const auto d = bfs_depths(t);
      for (std::uint32_t v = 0; v < t.n(); ++v) CHECK(d[v] == t.depth(v));
      CHECK(t.tree_depth() == 3);
      CHECK(t.edge_count() == t.n() - 1);
    }
}

TEST_CASE("random regular graphs are simple and regular") {
  const RegularGraph k4 = sample_random_regular(4, 3, RandomSeed{11, 0});
  CHECK(k4.edge_count() == 6);
  for (std::uint32_t v = 0; v < 4; ++v) {
    std::set<std::uint32_t> nb(k4.neighbors(v).begin(), k4.neighbors(v).end());
    CHECK(nb.size() == 3);
    CHECK(nb.count(v) == 0);
  }
  for (auto [n, k] : {std::pair{10U, 3}, {12U, 4}, {1000U, 5}, {50U, 7}, {2000U, 3}})
    for (std::uint64_t s = 0; s < 5; ++s) {
      const RegularGraph g = sample_random_regular(n, k, RandomSeed{s, 1});
      CHECK(g.n() == n);
      CHECK(is_simple(g));
      for (std::uint32_t v = 0; v < n; ++v) CHECK(g.degree(v) == k);
      CHECK(g.edge_count() == static_cast<std::size_t>(n) * k / 2);
    }
}

TEST_CASE("random regular parity and resource errors") {
  CHECK_THROWS_AS(sample_random_regular(5, 3, RandomSeed{1, 0}), UsageError);
  CHECK_THROWS_AS(sample_random_regular(3, 3, RandomSeed{1, 0}), UsageError);
}

TEST_CASE("random regular sampling is reproducible") {
  const auto a = sample_random_regular(500, 4, RandomSeed{7, 3}).edges();
  const auto b = sample_random_regular(500, 4, RandomSeed{7, 3}).edges();
  const auto c = sample_random_regular(500, 4, RandomSeed{8, 3}).edges();
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("edge list round trip") {
  const RegularGraph g = sample_random_regular(30, 3, RandomSeed{2, 2});
  std::stringstream ss;
  write_edge_list(ss, g);
  const RegularGraph h = read_edge_list(ss);
  CHECK(h.n() == g.n());
  CHECK(h.k() == g.k());
  auto eg = g.edges(), eh = h.edges();
  std::sort(eg.begin(), eg.end());
  std::sort(eh.begin(), eh.end());
  CHECK(eg == eh);
}
