#pragma once

// Dense layer primitives with explicit forward/backward pairs. Each backward
// takes whatever the forward produced (inputs or outputs) plus dOut and
// returns input gradients; nothing is recorded on a tape.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tagforge/dataset.hpp"
#include "tagforge/error.hpp"
#include "tagforge/rng.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

namespace detail {
inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}
}  // namespace detail

// ---- matmul ---------------------------------------------------------------

/// a * b. Zero entries of `a` are skipped, which keeps sparse bag-of-words
/// inputs cheap.
template <std::floating_point T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.cols() == b.rows(), "matmul: " + a.shape_string() + " * " + b.shape_string());
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    auto ar = a.row(i);
    for (std::size_t k = 0; k < ar.size(); ++k) {
      const T aik = ar[k];
      if (aik == T{0}) continue;
      auto br = b.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += aik * br[j];
    }
  }
  return out;
}

/// a^T * b.
template <std::floating_point T>
Matrix<T> matmul_at_b(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.rows() == b.rows(), "matmul_at_b: " + a.shape_string() + "^T * " + b.shape_string());
  Matrix<T> out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto ar = a.row(r);
    auto br = b.row(r);
    for (std::size_t i = 0; i < ar.size(); ++i) {
      const T ari = ar[i];
      if (ari == T{0}) continue;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < br.size(); ++j) dst[j] += ari * br[j];
    }
  }
  return out;
}

/// a * b^T.
template <std::floating_point T>
Matrix<T> matmul_a_bt(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.cols() == b.cols(), "matmul_a_bt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto br = b.row(j);
      T s{0};
      for (std::size_t k = 0; k < ar.size(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

template <std::floating_point T>
struct MatmulGrads {
  Matrix<T> da;
  Matrix<T> db;
};

template <std::floating_point T>
MatmulGrads<T> matmul_backward(const Matrix<T>& a, const Matrix<T>& b, const Matrix<T>& dout) {
  detail::require(dout.rows() == a.rows() && dout.cols() == b.cols(), "matmul_backward: dOut shape");
  return {matmul_a_bt(dout, b), matmul_at_b(a, dout)};
}

// ---- bias -----------------------------------------------------------------

/// x + 1 * b, with b a 1 x cols row vector.
template <std::floating_point T>
Matrix<T> add_row_bias(Matrix<T> x, const Matrix<T>& b) {
  detail::require(b.rows() == 1 && b.cols() == x.cols(), "add_row_bias: " + x.shape_string() + " + " + b.shape_string());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b(0, j);
  }
  return x;
}

/// Column sums of dOut, the gradient of a broadcast row bias.
template <std::floating_point T>
Matrix<T> column_sums(const Matrix<T>& dout) {
  Matrix<T> g(1, dout.cols());
  for (std::size_t i = 0; i < dout.rows(); ++i) {
    auto r = dout.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) g(0, j) += r[j];
  }
  return g;
}

// ---- relu -----------------------------------------------------------------

template <std::floating_point T>
Matrix<T> relu(Matrix<T> x) {
  for (auto& v : x.values()) v = v > T{0} ? v : T{0};
  return x;
}

/// dOut gated by x > 0, where x is the relu input.
template <std::floating_point T>
Matrix<T> relu_backward(const Matrix<T>& x, Matrix<T> dout) {
  detail::require(x.same_shape(dout), "relu_backward: shape");
  for (std::size_t k = 0; k < x.size(); ++k)
    if (!(x.values()[k] > T{0})) dout.values()[k] = T{0};
  return dout;
}

// ---- dropout --------------------------------------------------------------

/// Inverted-dropout mask. An empty mask means identity (eval mode or
/// keep_prob = 1).
template <std::floating_point T>
struct DropoutMask {
  double keep_prob = 1.0;
  Matrix<T> mask;  // entries are 0 or 1/keep_prob

  bool identity() const noexcept { return mask.empty(); }
  double scale() const noexcept { return 1.0 / keep_prob; }
};

template <std::floating_point T>
std::pair<Matrix<T>, DropoutMask<T>> dropout(Matrix<T> x, double keep_prob, Rng& rng, bool training) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw ConfigError("dropout: keep_prob must be in (0, 1], got " + std::to_string(keep_prob));
  DropoutMask<T> m{keep_prob, {}};
  if (!training || keep_prob == 1.0) return {std::move(x), std::move(m)};
  m.mask = Matrix<T>(x.rows(), x.cols());
  const T scale = static_cast<T>(1.0 / keep_prob);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const T keep = rng.uniform() < keep_prob ? scale : T{0};
    m.mask.values()[k] = keep;
    x.values()[k] *= keep;
  }
  return {std::move(x), std::move(m)};
}

template <std::floating_point T>
Matrix<T> dropout_backward(const DropoutMask<T>& m, Matrix<T> dout) {
  if (m.identity()) return dout;
  detail::require(m.mask.same_shape(dout), "dropout_backward: shape");
  for (std::size_t k = 0; k < dout.size(); ++k) dout.values()[k] *= m.mask.values()[k];
  return dout;
}

// ---- softmax --------------------------------------------------------------

template <std::floating_point T>
void softmax_inplace(std::span<T> r) noexcept {
  if (r.empty()) return;
  const T mx = *std::max_element(r.begin(), r.end());
  T sum{0};
  for (auto& v : r) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : r) v /= sum;
}

/// Row-wise softmax with per-row max subtraction.
template <std::floating_point T>
Matrix<T> row_softmax(Matrix<T> x) {
  for (std::size_t i = 0; i < x.rows(); ++i) softmax_inplace(x.row(i));
  return x;
}

/// dx = y * (dy - <dy, y>) row by row, y being the softmax output.
template <std::floating_point T>
Matrix<T> row_softmax_backward(const Matrix<T>& y, const Matrix<T>& dy) {
  detail::require(y.same_shape(dy), "row_softmax_backward: shape");
  Matrix<T> dx(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto yr = y.row(i);
    auto gr = dy.row(i);
    T dot{0};
    for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
    for (std::size_t j = 0; j < yr.size(); ++j) dx(i, j) = yr[j] * (gr[j] - dot);
  }
  return dx;
}

// ---- dense scaled dot-product attention -----------------------------------

/// softmax(Q K^T / sqrt(d_k)) V.
template <std::floating_point T>
Matrix<T> scaled_dot_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v) {
  detail::require(q.cols() == k.cols() && k.rows() == v.rows() && k.cols() > 0,
                  "scaled_dot_attention: Q " + q.shape_string() + ", K " + k.shape_string() + ", V " +
                      v.shape_string());
  Matrix<T> scores = matmul_a_bt(q, k);
  const T inv = T{1} / std::sqrt(static_cast<T>(q.cols()));
  for (auto& s : scores.values()) s *= inv;
  return matmul(row_softmax(std::move(scores)), v);
}

template <std::floating_point T>
struct AttentionGrads {
  Matrix<T> dq;
  Matrix<T> dk;
  Matrix<T> dv;
};

template <std::floating_point T>
AttentionGrads<T> scaled_dot_attention_backward(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                                const Matrix<T>& dout) {
  detail::require(dout.rows() == q.rows() && dout.cols() == v.cols(), "scaled_dot_attention_backward: dOut shape");
  Matrix<T> scores = matmul_a_bt(q, k);
  const T inv = T{1} / std::sqrt(static_cast<T>(q.cols()));
  for (auto& s : scores.values()) s *= inv;
  const Matrix<T> p = row_softmax(std::move(scores));
  AttentionGrads<T> g;
  g.dv = matmul_at_b(p, dout);
  Matrix<T> ds = row_softmax_backward(p, matmul_a_bt(dout, v));
  for (auto& s : ds.values()) s *= inv;
  g.dq = matmul(ds, k);
  g.dk = matmul_at_b(ds, q);
  return g;
}

// ---- cross-entropy --------------------------------------------------------

template <std::floating_point T>
struct LossAndGrad {
  T loss{0};
  Matrix<T> dlogits;
};

/// Mean negative log-softmax of the true class over the nodes in `mask`.
/// The gradient is zero on rows outside the mask.
template <std::floating_point T>
LossAndGrad<T> cross_entropy(const Matrix<T>& logits, const LabelVector& labels, std::span<const NodeId> mask) {
  if (mask.empty()) throw DataError("cross_entropy: empty mask");
  detail::require(logits.cols() == labels.num_classes && logits.rows() == labels.size(),
                  "cross_entropy: logits " + logits.shape_string() + " for " + std::to_string(labels.size()) +
                      " labels, " + std::to_string(labels.num_classes) + " classes");
  LossAndGrad<T> out{T{0}, Matrix<T>(logits.rows(), logits.cols())};
  const T inv_m = T{1} / static_cast<T>(mask.size());
  for (NodeId i : mask) {
    auto r = logits.row(i);
    const T mx = *std::max_element(r.begin(), r.end());
    T sum{0};
    for (T v : r) sum += std::exp(v - mx);
    const T log_z = mx + std::log(sum);
    const ClassId y = labels[i];
    out.loss += (log_z - r[y]) * inv_m;
    auto g = out.dlogits.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) g[c] += std::exp(r[c] - log_z) * inv_m;
    g[y] -= inv_m;
  }
  return out;
}

// ---- InfoNCE --------------------------------------------------------------

enum class Similarity { dot, cosine };

namespace detail {
template <std::floating_point T>
T similarity(std::span<const T> a, std::span<const T> b, Similarity sim) {
  T dot{0}, na{0}, nb{0};
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (sim == Similarity::dot) return dot;
  const T denom = std::sqrt(na) * std::sqrt(nb);
  return denom > T{0} ? dot / denom : T{0};
}
}  // namespace detail

/// Contrastive loss averaged over anchor rows. negatives[k] holds the k-th
/// negative for every anchor (same shape as `anchor`).
template <std::floating_point T>
T infonce(const Matrix<T>& anchor, const Matrix<T>& positive, std::span<const Matrix<T>> negatives, T tau,
          Similarity sim = Similarity::cosine) {
  if (!(tau > T{0})) throw ConfigError("infonce: tau must be positive");
  detail::require(anchor.same_shape(positive), "infonce: anchor/positive shape");
  for (const auto& neg : negatives) detail::require(neg.same_shape(anchor), "infonce: negative shape");
  if (anchor.rows() == 0) throw DataError("infonce: no anchors");

  T total{0};
  std::vector<T> logits(negatives.size() + 1);
  for (std::size_t i = 0; i < anchor.rows(); ++i) {
    logits[0] = detail::similarity(anchor.row(i), positive.row(i), sim) / tau;
    for (std::size_t k = 0; k < negatives.size(); ++k)
      logits[k + 1] = detail::similarity(anchor.row(i), negatives[k].row(i), sim) / tau;
    const T mx = *std::max_element(logits.begin(), logits.end());
    T sum{0};
    for (T l : logits) sum += std::exp(l - mx);
    total += mx + std::log(sum) - logits[0];
  }
  return total / static_cast<T>(anchor.rows());
}

}  // namespace tagforge
