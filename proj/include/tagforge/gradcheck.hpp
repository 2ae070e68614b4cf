#pragma once

// Central finite-difference checks for every backward pass.
//
// Each check draws random inputs for one seed, forms the scalar
// L = sum(out * R) with a fixed random R (so dOut = R), and compares every
// analytic input/parameter gradient against (L(x + h) - L(x - h)) / 2h.
// The error of one gradient tensor is ||analytic - numeric|| / max(||analytic||,
// ||numeric||, 1e-12); a check reports the worst tensor over all seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "tagforge/graph.hpp"
#include "tagforge/layers.hpp"
#include "tagforge/model.hpp"
#include "tagforge/ops.hpp"
#include "tagforge/rng.hpp"

namespace tagforge::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;

inline Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor m(r, c);
  for (auto& v : m.values()) v = scale * rng.normal();
  return m;
}

/// Values bounded away from zero, for kinked ops such as relu.
inline Tensor random_away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  Tensor m(r, c);
  for (auto& v : m.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.1 + rng.uniform());
  return m;
}

inline double sum_product(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.values()[k] * b.values()[k];
  return s;
}

inline double relative_error(const Tensor& analytic, const Tensor& numeric) {
  if (!analytic.same_shape(numeric)) return INFINITY;
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double a = analytic.values()[k], n = numeric.values()[k];
    diff += (a - n) * (a - n);
    na += a * a;
    nn += n * n;
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

/// Numeric gradient of `loss` with respect to *x (perturbed in place).
inline Tensor numeric_gradient(Tensor& x, const std::function<double()>& loss, double h = kStep) {
  Tensor g(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x.values()[k];
    x.values()[k] = orig + h;
    const double up = loss();
    x.values()[k] = orig - h;
    const double down = loss();
    x.values()[k] = orig;
    g.values()[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Worst relative error over the given (variable, analytic gradient) pairs.
inline double compare(const std::vector<std::pair<Tensor*, Tensor>>& pairs, const std::function<double()>& loss) {
  double worst = 0.0;
  for (const auto& [x, analytic] : pairs) worst = std::max(worst, relative_error(analytic, numeric_gradient(*x, loss)));
  return worst;
}

/// Random connected-ish graph on n nodes (ring plus random chords).
inline Graph random_graph(Rng& rng, std::size_t n, double p = 0.3) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    if (n > 1 && i + 1 < n) edges.emplace_back(i, i + 1);
    for (NodeId j = i + 2; j < n; ++j)
      if (rng.bernoulli(p)) edges.emplace_back(i, j);
  }
  return graph_from_edges(n, edges);
}

using CheckFn = std::function<double(std::uint64_t seed)>;

struct Check {
  std::string op;
  CheckFn run;
};

struct Entry {
  std::string op;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct Report {
  std::vector<Entry> entries;
  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const Entry& e) { return e.passed; });
  }
};

// ---- individual checks ----------------------------------------------------

inline double check_matmul(std::uint64_t seed) {
  Rng rng(seed);
  Tensor a = random_matrix(rng, 4, 3), b = random_matrix(rng, 3, 2);
  const Tensor r = random_matrix(rng, 4, 2);
  const auto g = matmul_backward(a, b, r);
  return compare({{&a, g.da}, {&b, g.db}}, [&] { return sum_product(matmul(a, b), r); });
}

inline double check_bias(std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = random_matrix(rng, 5, 3), b = random_matrix(rng, 1, 3);
  const Tensor r = random_matrix(rng, 5, 3);
  return compare({{&x, r}, {&b, column_sums(r)}}, [&] { return sum_product(add_row_bias(x, b), r); });
}

inline double check_relu(std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = random_away_from_zero(rng, 4, 5);
  const Tensor r = random_matrix(rng, 4, 5);
  return compare({{&x, relu_backward(x, r)}}, [&] { return sum_product(relu(x), r); });
}

inline double check_dropout(std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = random_matrix(rng, 6, 4);
  const Tensor r = random_matrix(rng, 6, 4);
  const auto mask_seed = derive_seed(seed, 7);
  const auto run = [&] {
    Rng mrng(mask_seed);
    return dropout(x, 0.5, mrng, true);
  };
  const auto mask = run().second;
  return compare({{&x, dropout_backward(mask, r)}}, [&] { return sum_product(run().first, r); });
}

inline double check_softmax(std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = random_matrix(rng, 3, 5, 2.0);
  const Tensor r = random_matrix(rng, 3, 5);
  return compare({{&x, row_softmax_backward(row_softmax(x), r)}}, [&] { return sum_product(row_softmax(x), r); });
}

inline double check_attention(std::uint64_t seed) {
  Rng rng(seed);
  Tensor q = random_matrix(rng, 3, 4), k = random_matrix(rng, 5, 4), v = random_matrix(rng, 5, 2);
  const Tensor r = random_matrix(rng, 3, 2);
  const auto g = scaled_dot_attention_backward(q, k, v, r);
  return compare({{&q, g.dq}, {&k, g.dk}, {&v, g.dv}}, [&] { return sum_product(scaled_dot_attention(q, k, v), r); });
}

inline double check_cross_entropy(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 6, c = 4;
  Tensor logits = random_matrix(rng, n, c, 2.0);
  LabelVector labels{c, {}};
  for (std::size_t i = 0; i < n; ++i) labels.labels.push_back(static_cast<ClassId>(rng.below(c)));
  const std::vector<NodeId> mask{0, 2, 3, 5};
  const auto g = cross_entropy(logits, labels, mask).dlogits;
  return compare({{&logits, g}}, [&] { return cross_entropy(logits, labels, mask).loss; });
}

inline double check_spmm(std::uint64_t seed) {
  Rng rng(seed);
  const Graph g = random_graph(rng, 7);
  const auto adj = normalize_adjacency(g);
  Tensor h = random_matrix(rng, 7, 3);
  const Tensor r = random_matrix(rng, 7, 3);
  return compare({{&h, spmm(adj, r)}}, [&] { return sum_product(spmm(adj, h), r); });
}

/// Checks a layer object: gradients of every parameter and of the input.
template <typename Layer>
double check_layer(Layer layer, Rng& rng, const GraphContext& ctx, std::size_t n) {
  std::vector<Tensor*> params;
  layer.for_each_parameter([&](const char*, Parameter<double>& p) {
    p.value = random_matrix(rng, p.value.rows(), p.value.cols(), 0.5);
    p.zero_grad();
    params.push_back(&p.value);
  });
  Tensor h = random_matrix(rng, n, layer.in_dim());
  const Tensor r = random_matrix(rng, n, layer.out_dim());
  layer.forward(h, ctx);
  const Tensor dh = layer.backward(r, ctx, true);
  std::vector<std::pair<Tensor*, Tensor>> pairs{{&h, dh}};
  std::size_t k = 0;
  layer.for_each_parameter([&](const char*, Parameter<double>& p) { pairs.emplace_back(params[k++], p.grad); });
  return compare(pairs, [&] {
    Layer fresh = layer;  // picks up the perturbed parameter values
    return sum_product(fresh.forward(h, ctx), r);
  });
}

inline double check_gcn_layer(std::uint64_t seed) {
  Rng rng(seed);
  const GraphContext ctx(random_graph(rng, 6));
  return check_layer(GcnLayer<double>(4, 3), rng, ctx, 6);
}

inline double check_graph_transformer_layer(std::uint64_t seed) {
  Rng rng(seed);
  Graph g = random_graph(rng, 6);
  // add an isolated node to cover the self-only neighborhood
  std::vector<Edge> edges;
  for (NodeId i = 0; i < g.num_nodes; ++i)
    for (NodeId j : g.neighbors(i))
      if (i < j) edges.emplace_back(i, j);
  const GraphContext ctx(graph_from_edges(7, edges));
  return check_layer(GraphTransformerLayer<double>(4, 6, 2), rng, ctx, 7);
}

inline double check_mlp_layer(std::uint64_t seed) {
  Rng rng(seed);
  const GraphContext ctx(random_graph(rng, 5));
  return check_layer(MlpLayer<double>(4, 3), rng, ctx, 5);
}

/// Whole model in training mode (dropout with a replayed mask) through
/// cross-entropy.
inline double check_model(Arch arch, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 8, c = 3;
  const GraphContext ctx(random_graph(rng, n));
  const ModelSpec spec{.arch = arch, .layers = 3, .hidden = 4, .heads = 2, .dropout = 0.25, .in_dim = 5, .num_classes = c};
  Model<double> model = init_parameters(spec, derive_seed(seed, 1));
  // zero biases put rows with fully dropped inputs exactly on the ReLU kink
  model.for_each_parameter([&](const std::string&, Parameter<double>& p) {
    p.value = random_matrix(rng, p.value.rows(), p.value.cols(), 0.5);
  });
  const Tensor x = random_matrix(rng, n, spec.in_dim);
  LabelVector labels{c, {}};
  for (std::size_t i = 0; i < n; ++i) labels.labels.push_back(static_cast<ClassId>(i % c));
  const std::vector<NodeId> mask{0, 1, 2, 4, 6, 7};
  const auto mask_seed = derive_seed(seed, 2);
  const auto loss = [&] {
    Rng mrng(mask_seed);
    return cross_entropy(model.forward(x, ctx, true, mrng), labels, mask).loss;
  };
  {
    Rng mrng(mask_seed);
    model.zero_grad();
    model.backward(cross_entropy(model.forward(x, ctx, true, mrng), labels, mask).dlogits, ctx);
  }
  std::vector<std::pair<Tensor*, Tensor>> pairs;
  model.for_each_parameter([&](const std::string&, Parameter<double>& p) { pairs.emplace_back(&p.value, p.grad); });
  return compare(pairs, loss);
}

inline std::vector<Check> default_checks() {
  return {
      {"matmul", check_matmul},
      {"add_row_bias", check_bias},
      {"relu", check_relu},
      {"dropout", check_dropout},
      {"row_softmax", check_softmax},
      {"scaled_dot_attention", check_attention},
      {"cross_entropy", check_cross_entropy},
      {"spmm", check_spmm},
      {"gcn_layer", check_gcn_layer},
      {"graph_transformer_layer", check_graph_transformer_layer},
      {"mlp_layer", check_mlp_layer},
      {"model.gcn", [](std::uint64_t s) { return check_model(Arch::gcn, s); }},
      {"model.graph_transformer", [](std::uint64_t s) { return check_model(Arch::graph_transformer, s); }},
      {"model.mlp", [](std::uint64_t s) { return check_model(Arch::mlp, s); }},
  };
}

inline Report run(const std::vector<Check>& checks, std::size_t num_seeds = 5, double tolerance = kTolerance) {
  Report report;
  for (const auto& c : checks) {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < num_seeds; ++s) worst = std::max(worst, c.run(derive_seed(0x6AC, s)));
    report.entries.push_back({c.op, worst, worst <= tolerance});
  }
  return report;
}

inline void print(std::ostream& os, const Report& r) {
  for (const auto& e : r.entries) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", e.max_rel_error);
    os << (e.passed ? "PASS " : "FAIL ") << e.op << "  max_rel_error=" << buf << '\n';
  }
}

}  // namespace tagforge::gradcheck
