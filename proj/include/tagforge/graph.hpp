#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tagforge/error.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected graph in CSR form. Column indices are sorted within each row,
/// duplicate-free and symmetric; self-loops are never stored.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;

  std::size_t num_edges() const noexcept { return col_indices.size(); }  // directed count
  std::size_t degree(NodeId i) const noexcept { return row_offsets[i + 1] - row_offsets[i]; }
  std::span<const NodeId> neighbors(NodeId i) const noexcept {
    return {col_indices.data() + row_offsets[i], degree(i)};
  }

  bool has_edge(NodeId i, NodeId j) const noexcept {
    auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  bool operator==(const Graph&) const = default;
};

/// Builds a Graph from an arbitrary edge list. Edges are symmetrized and
/// deduplicated; self-loops are dropped (normalization adds its own).
inline Graph graph_from_edges(std::size_t num_nodes, std::span<const Edge> edges) {
  std::vector<std::size_t> counts(num_nodes + 1, 0);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes)
      throw DataError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range for " +
                      std::to_string(num_nodes) + " nodes");
    if (u == v) continue;
    ++counts[u + 1];
    ++counts[v + 1];
  }
  for (std::size_t i = 0; i < num_nodes; ++i) counts[i + 1] += counts[i];

  std::vector<NodeId> cols(counts[num_nodes]);
  std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    cols[cursor[u]++] = v;
    cols[cursor[v]++] = u;
  }

  Graph g;
  g.num_nodes = num_nodes;
  g.row_offsets.assign(num_nodes + 1, 0);
  g.col_indices.reserve(cols.size());
  for (std::size_t i = 0; i < num_nodes; ++i) {
    auto first = cols.begin() + static_cast<std::ptrdiff_t>(counts[i]);
    auto last = cols.begin() + static_cast<std::ptrdiff_t>(counts[i + 1]);
    std::sort(first, last);
    last = std::unique(first, last);
    g.col_indices.insert(g.col_indices.end(), first, last);
    g.row_offsets[i + 1] = g.col_indices.size();
  }
  return g;
}

inline Graph graph_from_edges(std::size_t num_nodes, std::initializer_list<Edge> edges) {
  return graph_from_edges(num_nodes, std::span<const Edge>(edges.begin(), edges.size()));
}

/// Full CSR validation: offsets, bounds, per-row sortedness, no duplicates,
/// no self-loops and symmetry. Throws DataError on the first violation.
inline void validate(const Graph& g) {
  const auto& ro = g.row_offsets;
  if (ro.size() != g.num_nodes + 1) throw DataError("row_offsets length != num_nodes + 1");
  if (ro.front() != 0) throw DataError("row_offsets[0] != 0");
  if (ro.back() != g.col_indices.size()) throw DataError("row_offsets.back() != nnz");
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (ro[i + 1] < ro[i]) throw DataError("row_offsets decreasing at row " + std::to_string(i));
    for (std::size_t k = ro[i]; k < ro[i + 1]; ++k) {
      const NodeId j = g.col_indices[k];
      if (j >= g.num_nodes) throw DataError("column index out of range in row " + std::to_string(i));
      if (j == i) throw DataError("self-loop stored in row " + std::to_string(i));
      if (k > ro[i] && g.col_indices[k - 1] >= j)
        throw DataError("row " + std::to_string(i) + " not strictly sorted");
    }
  }
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (NodeId j : g.neighbors(static_cast<NodeId>(i)))
      if (!g.has_edge(j, static_cast<NodeId>(i)))
        throw DataError("asymmetric edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
}

/// Graph relabeled by `perm`: node i of the input becomes node perm[i].
inline Graph permute(const Graph& g, std::span<const NodeId> perm) {
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (NodeId i = 0; i < g.num_nodes; ++i)
    for (NodeId j : g.neighbors(i))
      if (i < j) edges.emplace_back(perm[i], perm[j]);
  return graph_from_edges(g.num_nodes, edges);
}

/// Weighted CSR propagation operator D^-1/2 (A + I) D^-1/2.
/// The matrix is symmetric, so it is its own transpose in backward passes.
struct NormalizedAdjacency {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;
  std::vector<double> weights;
};

/// Symmetric GCN normalization. deg counts the rows of A + I when
/// `add_self_loops` is set, else the rows of A. Isolated nodes always get a
/// self-loop of weight 1 so that no row is empty.
inline NormalizedAdjacency normalize_adjacency(const Graph& g, bool add_self_loops = true) {
  const std::size_t n = g.num_nodes;
  std::vector<double> inv_sqrt_deg(n);
  for (NodeId i = 0; i < n; ++i) {
    const std::size_t d = g.degree(i) + (add_self_loops ? 1 : 0);
    inv_sqrt_deg[i] = d == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(d));
  }

  NormalizedAdjacency a;
  a.num_nodes = n;
  a.row_offsets.assign(n + 1, 0);
  a.col_indices.reserve(g.num_edges() + n);
  a.weights.reserve(g.num_edges() + n);
  for (NodeId i = 0; i < n; ++i) {
    const bool self = add_self_loops || g.degree(i) == 0;
    bool self_done = !self;
    for (NodeId j : g.neighbors(i)) {
      if (!self_done && j > i) {
        a.col_indices.push_back(i);
        a.weights.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[i]);
        self_done = true;
      }
      a.col_indices.push_back(j);
      a.weights.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    if (!self_done) {
      a.col_indices.push_back(i);
      a.weights.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[i]);
    }
    a.row_offsets[i + 1] = a.col_indices.size();
  }
  return a;
}

/// out[i] = sum_j w(i,j) * h[j], summed in CSR order.
template <std::floating_point T>
Matrix<T> spmm(const NormalizedAdjacency& a, const Matrix<T>& h) {
  if (a.num_nodes != h.rows())
    throw ShapeError("spmm: adjacency has " + std::to_string(a.num_nodes) + " nodes, features " +
                     h.shape_string());
  Matrix<T> out(h.rows(), h.cols());
  for (std::size_t i = 0; i < a.num_nodes; ++i) {
    auto dst = out.row(i);
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const T w = static_cast<T>(a.weights[k]);
      auto src = h.row(a.col_indices[k]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

}  // namespace tagforge
