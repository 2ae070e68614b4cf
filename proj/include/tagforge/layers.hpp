#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tagforge/graph.hpp"
#include "tagforge/ops.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

/// Attention neighborhoods: the graph neighbors of each node plus the node
/// itself, in sorted CSR form.
struct Neighborhoods {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<NodeId> col_indices;

  std::size_t nnz() const noexcept { return col_indices.size(); }
};

inline Neighborhoods self_loop_neighborhoods(const Graph& g) {
  Neighborhoods nb;
  nb.num_nodes = g.num_nodes;
  nb.row_offsets.assign(g.num_nodes + 1, 0);
  nb.col_indices.reserve(g.num_edges() + g.num_nodes);
  for (NodeId i = 0; i < g.num_nodes; ++i) {
    bool self_done = false;
    for (NodeId j : g.neighbors(i)) {
      if (!self_done && j > i) {
        nb.col_indices.push_back(i);
        self_done = true;
      }
      nb.col_indices.push_back(j);
    }
    if (!self_done) nb.col_indices.push_back(i);
    nb.row_offsets[i + 1] = nb.col_indices.size();
  }
  return nb;
}

/// Everything graph-derived a forward pass needs, built once per dataset.
struct GraphContext {
  NormalizedAdjacency adjacency;
  Neighborhoods neighborhoods;

  GraphContext() = default;
  explicit GraphContext(const Graph& g)
      : adjacency(normalize_adjacency(g, true)), neighborhoods(self_loop_neighborhoods(g)) {}
};

// ---- GCN ------------------------------------------------------------------

/// GCN propagation: A_hat (h W) + b, with A_hat the normalized adjacency.
template <std::floating_point T>
class GcnLayer {
 public:
  Parameter<T> weight;  // in x out
  Parameter<T> bias;    // 1 x out

  GcnLayer() = default;
  GcnLayer(std::size_t in, std::size_t out) : weight(Matrix<T>(in, out)), bias(Matrix<T>(1, out)) {}

  std::size_t in_dim() const noexcept { return weight.value.rows(); }
  std::size_t out_dim() const noexcept { return weight.value.cols(); }

  Matrix<T> forward(const Matrix<T>& h, const GraphContext& ctx) {
    input_ = h;
    return add_row_bias(spmm(ctx.adjacency, matmul(h, weight.value)), bias.value);
  }

  /// Accumulates parameter gradients; returns dInput (empty unless requested).
  Matrix<T> backward(const Matrix<T>& dout, const GraphContext& ctx, bool need_input_grad) {
    bias.grad += column_sums(dout);
    const Matrix<T> g = spmm(ctx.adjacency, dout);  // A_hat is symmetric
    weight.grad += matmul_at_b(input_, g);
    return need_input_grad ? matmul_a_bt(g, weight.value) : Matrix<T>{};
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f("weight", weight);
    f("bias", bias);
  }

 private:
  Matrix<T> input_;
};

/// Stateless GCN layer: spmm(adj, h) W + b.
template <std::floating_point T>
Matrix<T> gcn_layer(const Matrix<T>& h, const NormalizedAdjacency& adj, const Parameter<T>& w, const Parameter<T>& b) {
  detail::require(h.cols() == w.value.rows(), "gcn_layer: h " + h.shape_string() + ", W " + w.value.shape_string());
  return add_row_bias(matmul(spmm(adj, h), w.value), b.value);
}

// ---- MLP ------------------------------------------------------------------

template <std::floating_point T>
class MlpLayer {
 public:
  Parameter<T> weight;
  Parameter<T> bias;

  MlpLayer() = default;
  MlpLayer(std::size_t in, std::size_t out) : weight(Matrix<T>(in, out)), bias(Matrix<T>(1, out)) {}

  std::size_t in_dim() const noexcept { return weight.value.rows(); }
  std::size_t out_dim() const noexcept { return weight.value.cols(); }

  Matrix<T> forward(const Matrix<T>& h, const GraphContext&) {
    input_ = h;
    return add_row_bias(matmul(h, weight.value), bias.value);
  }

  Matrix<T> backward(const Matrix<T>& dout, const GraphContext&, bool need_input_grad) {
    bias.grad += column_sums(dout);
    weight.grad += matmul_at_b(input_, dout);
    return need_input_grad ? matmul_a_bt(dout, weight.value) : Matrix<T>{};
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f("weight", weight);
    f("bias", bias);
  }

 private:
  Matrix<T> input_;
};

template <std::floating_point T>
Matrix<T> mlp_layer(const Matrix<T>& h, const Parameter<T>& w, const Parameter<T>& b) {
  detail::require(h.cols() == w.value.rows(), "mlp_layer: h " + h.shape_string() + ", W " + w.value.shape_string());
  return add_row_bias(matmul(h, w.value), b.value);
}

// ---- Graph Transformer ----------------------------------------------------

/// Multi-head dot-product attention restricted to each node's neighbors and
/// itself, with a root/skip transform added after head concatenation:
///
///   alpha_ij^k = softmax_{j in N(i)+i}( (h_i Wq^k) . (h_j Wk^k) / sqrt(d_head) )
///   out_i      = concat_k sum_j alpha_ij^k h_j Wv^k  +  h_i Ws  +  b
///
/// Per-head projections are stored side by side: Wq = [Wq^1 ... Wq^H].
template <std::floating_point T>
class GraphTransformerLayer {
 public:
  Parameter<T> w_query;  // in x out
  Parameter<T> w_key;    // in x out
  Parameter<T> w_value;  // in x out
  Parameter<T> w_skip;   // in x out
  Parameter<T> bias;     // 1 x out

  GraphTransformerLayer() = default;
  GraphTransformerLayer(std::size_t in, std::size_t out, std::size_t heads)
      : w_query(Matrix<T>(in, out)),
        w_key(Matrix<T>(in, out)),
        w_value(Matrix<T>(in, out)),
        w_skip(Matrix<T>(in, out)),
        bias(Matrix<T>(1, out)),
        heads_(heads) {
    if (heads == 0 || out % heads != 0)
      throw ConfigError("graph transformer: width " + std::to_string(out) + " not divisible by " +
                        std::to_string(heads) + " heads");
  }

  std::size_t in_dim() const noexcept { return w_query.value.rows(); }
  std::size_t out_dim() const noexcept { return w_query.value.cols(); }
  std::size_t heads() const noexcept { return heads_; }
  std::size_t head_dim() const noexcept { return out_dim() / heads_; }

  /// Attention weights of the last forward pass, laid out [edge][head]
  /// along the neighborhood CSR.
  const std::vector<T>& attention() const noexcept { return alpha_; }

  Matrix<T> forward(const Matrix<T>& h, const GraphContext& ctx) {
    const auto& nb = ctx.neighborhoods;
    detail::require(h.cols() == in_dim() && h.rows() == nb.num_nodes,
                    "graph_transformer_layer: h " + h.shape_string() + ", W " + w_query.value.shape_string());
    input_ = h;
    q_ = matmul(h, w_query.value);
    k_ = matmul(h, w_key.value);
    v_ = matmul(h, w_value.value);

    const std::size_t dh = head_dim();
    const T scale = T{1} / std::sqrt(static_cast<T>(dh));
    alpha_.assign(nb.nnz() * heads_, T{0});
    Matrix<T> out = add_row_bias(matmul(h, w_skip.value), bias.value);
    std::vector<T> scores;
    for (std::size_t i = 0; i < nb.num_nodes; ++i) {
      const std::size_t lo = nb.row_offsets[i], hi = nb.row_offsets[i + 1];
      scores.resize(hi - lo);
      for (std::size_t hd = 0; hd < heads_; ++hd) {
        const std::size_t c0 = hd * dh;
        for (std::size_t e = lo; e < hi; ++e) {
          const NodeId j = nb.col_indices[e];
          T s{0};
          for (std::size_t c = 0; c < dh; ++c) s += q_(i, c0 + c) * k_(j, c0 + c);
          scores[e - lo] = s * scale;
        }
        softmax_inplace(std::span<T>(scores));
        for (std::size_t e = lo; e < hi; ++e) {
          const T a = scores[e - lo];
          alpha_[e * heads_ + hd] = a;
          const NodeId j = nb.col_indices[e];
          for (std::size_t c = 0; c < dh; ++c) out(i, c0 + c) += a * v_(j, c0 + c);
        }
      }
    }
    return out;
  }

  Matrix<T> backward(const Matrix<T>& dout, const GraphContext& ctx, bool need_input_grad) {
    const auto& nb = ctx.neighborhoods;
    const std::size_t dh = head_dim();
    const T scale = T{1} / std::sqrt(static_cast<T>(dh));

    bias.grad += column_sums(dout);
    w_skip.grad += matmul_at_b(input_, dout);

    Matrix<T> dq(q_.rows(), q_.cols()), dk(k_.rows(), k_.cols()), dv(v_.rows(), v_.cols());
    std::vector<T> dalpha;
    for (std::size_t i = 0; i < nb.num_nodes; ++i) {
      const std::size_t lo = nb.row_offsets[i], hi = nb.row_offsets[i + 1];
      dalpha.resize(hi - lo);
      for (std::size_t hd = 0; hd < heads_; ++hd) {
        const std::size_t c0 = hd * dh;
        T weighted{0};
        for (std::size_t e = lo; e < hi; ++e) {
          const NodeId j = nb.col_indices[e];
          const T a = alpha_[e * heads_ + hd];
          T da{0};
          for (std::size_t c = 0; c < dh; ++c) {
            da += dout(i, c0 + c) * v_(j, c0 + c);
            dv(j, c0 + c) += a * dout(i, c0 + c);
          }
          dalpha[e - lo] = da;
          weighted += a * da;
        }
        for (std::size_t e = lo; e < hi; ++e) {
          const NodeId j = nb.col_indices[e];
          const T ds = alpha_[e * heads_ + hd] * (dalpha[e - lo] - weighted) * scale;
          for (std::size_t c = 0; c < dh; ++c) {
            dq(i, c0 + c) += ds * k_(j, c0 + c);
            dk(j, c0 + c) += ds * q_(i, c0 + c);
          }
        }
      }
    }
    w_query.grad += matmul_at_b(input_, dq);
    w_key.grad += matmul_at_b(input_, dk);
    w_value.grad += matmul_at_b(input_, dv);
    if (!need_input_grad) return {};
    Matrix<T> dh_in = matmul_a_bt(dout, w_skip.value);
    dh_in += matmul_a_bt(dq, w_query.value);
    dh_in += matmul_a_bt(dk, w_key.value);
    dh_in += matmul_a_bt(dv, w_value.value);
    return dh_in;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f("w_query", w_query);
    f("w_key", w_key);
    f("w_value", w_value);
    f("w_skip", w_skip);
    f("bias", bias);
  }

 private:
  std::size_t heads_ = 1;
  Matrix<T> input_, q_, k_, v_;
  std::vector<T> alpha_;
};

/// Stateless graph transformer layer over graph `g`.
template <std::floating_point T>
Matrix<T> graph_transformer_layer(const Matrix<T>& h, const Graph& g, const GraphTransformerLayer<T>& params) {
  GraphTransformerLayer<T> layer = params;
  return layer.forward(h, GraphContext(g));
}

}  // namespace tagforge
