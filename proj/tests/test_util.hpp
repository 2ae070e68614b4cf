#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "tagforge/checkpoint.hpp"
#include "tagforge/dataset.hpp"
#include "tagforge/emb1.hpp"
#include "tagforge/gradcheck.hpp"
#include "tagforge/planetoid.hpp"
#include "tagforge/text.hpp"
#include "tagforge/train.hpp"

namespace tagforge::testing {

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tagforge_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random undirected edge list (may contain duplicates and both directions).
inline std::vector<Edge> random_edges(std::mt19937_64& gen, std::size_t n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (i != j && coin(gen)) edges.emplace_back(i, j);
  return edges;
}

inline Tensor random_tensor(std::mt19937_64& gen, std::size_t r, std::size_t c) {
  std::normal_distribution<double> nd;
  Tensor m(r, c);
  for (auto& v : m.values()) v = nd(gen);
  return m;
}

/// Dense D^-1/2 (A + I) D^-1/2 built straight from an edge list.
inline std::vector<std::vector<double>> dense_normalized(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (auto [u, v] : edges)
    if (u != v) a[u][v] = a[v][u] = 1.0;
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i] * deg[j]);
  return a;
}

inline Tensor dense_product(const std::vector<std::vector<double>>& a, const Tensor& h) {
  Tensor out(a.size(), h.cols());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a.size(); ++k)
      for (std::size_t j = 0; j < h.cols(); ++j) out(i, j) += a[i][k] * h(k, j);
  return out;
}

/// Plain triple-loop product, independent of the library's matmul.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

/// Dense masked multi-head attention written from the definition:
/// out_i = concat_k sum_{j in N(i)+i} softmax_j(q_i.k_j / sqrt(dk)) v_j + h_i Ws + b.
inline Tensor dense_transformer(const Tensor& h, const std::vector<std::vector<bool>>& adj, const GraphTransformerLayer<double>& p) {
  const std::size_t n = h.rows(), out = p.out_dim(), heads = p.heads(), dk = out / heads;
  const Tensor q = naive_matmul(h, p.w_query.value);
  const Tensor k = naive_matmul(h, p.w_key.value);
  const Tensor v = naive_matmul(h, p.w_value.value);
  Tensor res = naive_matmul(h, p.w_skip.value);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < out; ++c) res(i, c) += p.bias.value(0, c);
  for (std::size_t hd = 0; hd < heads; ++hd)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> s(n, -INFINITY);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(adj[i][j] || i == j)) continue;
        double d = 0;
        for (std::size_t c = 0; c < dk; ++c) d += q(i, hd * dk + c) * k(j, hd * dk + c);
        s[j] = d / std::sqrt(static_cast<double>(dk));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (double& x : s) z += (x = std::exp(x - mx));
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < dk; ++c) res(i, hd * dk + c) += s[j] / z * v(j, hd * dk + c);
    }
  return res;
}

inline std::vector<std::vector<bool>> dense_adjacency(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
  for (auto [u, v] : edges) a[u][v] = a[v][u] = true;
  return a;
}

/// Small two-clique toy dataset: classes are complete subgraphs, no
/// cross edges, features separated by `sep`.
inline Dataset two_clique(std::size_t n = 40, double sep = 5.0, std::uint64_t seed = 3) {
  return generate_synthetic({.num_nodes = n, .num_classes = 2, .p_in = 1.0, .p_out = 0.0, .dim = 16, .sep = sep}, seed);
}

}  // namespace tagforge::testing
