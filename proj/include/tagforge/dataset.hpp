#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tagforge/error.hpp"
#include "tagforge/graph.hpp"
#include "tagforge/rng.hpp"
#include "tagforge/tensor.hpp"

namespace tagforge {

using ClassId = std::uint32_t;

struct LabelVector {
  std::size_t num_classes = 0;
  std::vector<ClassId> labels;

  std::size_t size() const noexcept { return labels.size(); }
  ClassId operator[](std::size_t i) const noexcept { return labels[i]; }
};

/// Builds a LabelVector from raw ids; num_classes = max id + 1.
inline LabelVector make_labels(std::vector<ClassId> labels) {
  if (labels.empty()) throw DataError("empty label vector");
  const auto c = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  return {c, std::move(labels)};
}

/// Node-id sets. Each set is kept sorted.
struct SplitMask {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  bool operator==(const SplitMask&) const = default;
};

struct Dataset {
  std::string name;
  Graph graph;
  Tensor features;                 // num_nodes x d; may be empty until an encoder fills it
  LabelVector labels;
  std::vector<std::string> texts;  // optional raw documents, one per node
  std::optional<SplitMask> split;  // optional fixed split shipped with the data

  std::size_t num_nodes() const noexcept { return graph.num_nodes; }
  std::size_t num_classes() const noexcept { return labels.num_classes; }
};

/// Checks a split: non-empty, in range, pairwise disjoint.
inline void validate_split(const SplitMask& s, std::size_t num_nodes) {
  if (s.train.empty() || s.val.empty() || s.test.empty()) throw DataError("split has an empty set");
  std::vector<std::uint8_t> seen(num_nodes, 0);
  for (const auto* set : {&s.train, &s.val, &s.test})
    for (NodeId v : *set) {
      if (v >= num_nodes) throw DataError("split node id " + std::to_string(v) + " out of range");
      if (seen[v]++) throw DataError("split sets overlap at node " + std::to_string(v));
    }
}

/// Checks label/graph/feature consistency and the Graph invariants.
inline void validate(const Dataset& ds) {
  validate(ds.graph);
  if (ds.labels.size() != ds.num_nodes())
    throw DataError(ds.name + ": " + std::to_string(ds.labels.size()) + " labels for " +
                    std::to_string(ds.num_nodes()) + " nodes");
  std::vector<std::size_t> count(ds.num_classes(), 0);
  for (ClassId c : ds.labels.labels) {
    if (c >= ds.num_classes()) throw DataError(ds.name + ": label out of range");
    ++count[c];
  }
  for (std::size_t c = 0; c < count.size(); ++c)
    if (count[c] == 0) throw DataError(ds.name + ": class " + std::to_string(c) + " has no nodes");
  if (!ds.features.empty()) {
    if (ds.features.rows() != ds.num_nodes())
      throw DataError(ds.name + ": feature matrix has " + std::to_string(ds.features.rows()) +
                      " rows for " + std::to_string(ds.num_nodes()) + " nodes");
    if (!all_finite(ds.features)) throw DataError(ds.name + ": non-finite feature value");
  }
  if (!ds.texts.empty() && ds.texts.size() != ds.num_nodes())
    throw DataError(ds.name + ": text count does not match node count");
  if (ds.split) validate_split(*ds.split, ds.num_nodes());
}

/// Low-label protocol: `per_class` random training nodes per class, then
/// `n_val` and `n_test` nodes drawn without replacement from the rest.
inline SplitMask split_low(const LabelVector& labels, std::size_t per_class = 20, std::size_t n_val = 500,
                           std::size_t n_test = 1000, std::uint64_t seed = 0) {
  if (per_class == 0 || n_val == 0 || n_test == 0) throw ConfigError("split_low: set sizes must be positive");
  std::vector<std::vector<NodeId>> by_class(labels.num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<NodeId>(i));

  Rng rng(seed);
  SplitMask s;
  std::vector<std::uint8_t> taken(labels.size(), 0);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < per_class)
      throw DataError("split_low: class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                      " nodes, need " + std::to_string(per_class));
    rng.shuffle(std::span(members));
    for (std::size_t k = 0; k < per_class; ++k) {
      s.train.push_back(members[k]);
      taken[members[k]] = 1;
    }
  }
  std::vector<NodeId> rest;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!taken[i]) rest.push_back(static_cast<NodeId>(i));
  if (rest.size() < n_val + n_test)
    throw DataError("split_low: " + std::to_string(rest.size()) + " nodes left, need " +
                    std::to_string(n_val + n_test));
  rng.shuffle(std::span(rest));
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val),
                rest.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  for (auto* set : {&s.train, &s.val, &s.test}) std::sort(set->begin(), set->end());
  return s;
}

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// High-label protocol: random permutation cut into floor(train*n),
/// floor(val*n) and the remainder.
inline SplitMask split_high(std::size_t n, SplitRatios ratios = {}, std::uint64_t seed = 0) {
  if (n < 5) throw DataError("split_high: need at least 5 nodes, got " + std::to_string(n));
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ConfigError("split_high: ratios must be positive and sum to 1");
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  Rng rng(seed);
  rng.shuffle(std::span(perm));
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) throw DataError("split_high: degenerate split");
  SplitMask s;
  auto it = perm.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  it += static_cast<std::ptrdiff_t>(n_train);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  s.test.assign(it, perm.end());
  for (auto* set : {&s.train, &s.val, &s.test}) std::sort(set->begin(), set->end());
  return s;
}

struct SyntheticSpec {
  std::size_t num_nodes = 200;
  std::size_t num_classes = 3;
  double p_in = 0.2;
  double p_out = 0.01;
  std::size_t dim = 16;
  double sep = 3.0;
  // Raw documents (off when text_words = 0): each node gets text_words
  // tokens "t<k>", k < text_vocab; with probability topic_prob a token is
  // drawn from its class's topic words (k mod C == class), else uniformly.
  std::size_t text_words = 0;
  std::size_t text_vocab = 200;
  double topic_prob = 0.5;
};

/// Planted-partition graph with Gaussian features.
///
/// Labels are a seeded shuffle of i mod C (balanced within one). Each pair
/// (i, j) is an edge with probability p_in inside a class and p_out across.
/// Class means are Gaussian directions projected to the unit sphere and
/// scaled by `sep`; node features are mean + N(0, I).
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0))
    throw ConfigError("generate_synthetic: need 0 <= p_out < p_in <= 1");
  if (spec.num_classes == 0 || spec.num_nodes < spec.num_classes)
    throw ConfigError("generate_synthetic: need n >= C >= 1");
  if (spec.dim == 0) throw ConfigError("generate_synthetic: dim must be positive");
  const std::size_t n = spec.num_nodes;

  Rng label_rng(derive_seed(seed, 1));
  std::vector<ClassId> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<ClassId>(i % spec.num_classes);
  label_rng.shuffle(std::span(labels));

  Rng edge_rng(derive_seed(seed, 2));
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (edge_rng.bernoulli(labels[i] == labels[j] ? spec.p_in : spec.p_out)) edges.emplace_back(i, j);

  Rng feat_rng(derive_seed(seed, 3));
  Tensor means(spec.num_classes, spec.dim);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    double norm = 0.0;
    for (auto& v : means.row(c)) {
      v = feat_rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : means.row(c)) v = v / norm * spec.sep;
  }
  Tensor features(n, spec.dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < spec.dim; ++k) features(i, k) = means(labels[i], k) + feat_rng.normal();

  std::vector<std::string> texts;
  if (spec.text_words > 0) {
    if (spec.text_vocab < spec.num_classes) throw ConfigError("generate_synthetic: text_vocab < num_classes");
    Rng text_rng(derive_seed(seed, 4));
    const std::size_t per_topic = spec.text_vocab / spec.num_classes;
    texts.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t w = 0; w < spec.text_words; ++w) {
        const std::size_t k = text_rng.bernoulli(spec.topic_prob)
                                  ? labels[i] + spec.num_classes * text_rng.below(per_topic)
                                  : text_rng.below(spec.text_vocab);
        if (w) texts[i] += ' ';
        texts[i] += "t" + std::to_string(k);
      }
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.texts = std::move(texts);
  ds.graph = graph_from_edges(n, edges);
  ds.features = std::move(features);
  ds.labels = {spec.num_classes, std::move(labels)};
  return ds;
}

}  // namespace tagforge
