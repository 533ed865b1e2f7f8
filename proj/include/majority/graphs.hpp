#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "majority/common.hpp"

namespace majority {

enum class GraphKind { FullTree, RootedTree, RandomRegular };

// Simple graph in compressed adjacency form. Trees carry per-vertex depth and
// breadth-first numbering, so layer_end[d] bounds the radius-d ball.
class RegularGraph {
 public:
  RegularGraph() = default;
  RegularGraph(std::uint32_t n, int k, GraphKind kind, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

  std::uint32_t n() const { return static_cast<std::uint32_t>(offsets_.size()) - 1; }
  int k() const { return k_; }
  GraphKind kind() const { return kind_; }
  bool is_tree() const { return kind_ != GraphKind::RandomRegular; }

  std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  int degree(std::uint32_t v) const { return static_cast<int>(offsets_[v + 1] - offsets_[v]); }
  std::size_t edge_count() const { return adj_.size() / 2; }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges() const;

  // Tree metadata (empty for random-regular graphs).
  int tree_depth() const { return static_cast<int>(layer_end_.size()) - 1; }
  int depth(std::uint32_t v) const { return depth_[v]; }
  std::uint32_t layer_end(int d) const { return layer_end_[d]; }
  void set_tree_layers(std::vector<int> depth);

 private:
  int k_ = 0;
  GraphKind kind_ = GraphKind::RandomRegular;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<std::uint32_t> adj_;
  std::vector<int> depth_;
  std::vector<std::uint32_t> layer_end_;
};

std::uint64_t tree_vertex_count(int k, int depth, bool rooted);

RegularGraph build_tree(int k, int depth, bool rooted);

RegularGraph sample_random_regular(std::uint32_t n, int k, const RandomSeed& seed);

// Breadth-first distances from vertex 0.
std::vector<int> bfs_depths(const RegularGraph& g);

bool is_simple(const RegularGraph& g);

void write_edge_list(std::ostream& out, const RegularGraph& g);
RegularGraph read_edge_list(std::istream& in);

}  // namespace majority
