#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "test_util.hpp"

using namespace tagforge;
using tagforge::testing::TempDir;

TEST(Rng, MatchesReferenceXoshiroStream) {
  // xoshiro256** seeded through SplitMix64, computed with an independent
  // Python transcription of the reference algorithms.
  Rng r0(0);
  EXPECT_EQ(r0.next(), 0x99ec5f36cb75f2b4ULL);
  EXPECT_EQ(r0.next(), 0xbf6e1f784956452aULL);
  EXPECT_EQ(r0.next(), 0x1a5f849d4933e6e0ULL);
  Rng r42(42);
  EXPECT_EQ(r42.next(), 0x15780b2e0c2ec716ULL);
}

TEST(Rng, BelowAndShuffle) {
  Rng r(5);
  for (int k = 0; k < 1000; ++k) EXPECT_LT(r.below(7), 7u);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < 50; ++k) EXPECT_EQ(sorted[k], k);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Graph, SingleUndirectedEdge) {
  const Graph g = graph_from_edges(2, {{0, 1}});
  EXPECT_EQ(g.col_indices, (std::vector<NodeId>{1, 0}));
  EXPECT_EQ(g.row_offsets, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_NO_THROW(validate(g));
}

TEST(Graph, EdgelessGraph) {
  const Graph g = graph_from_edges(3, std::vector<Edge>{});
  EXPECT_EQ(g.row_offsets, (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_NO_THROW(validate(g));
}

TEST(Graph, SymmetrizesAndDeduplicates) {
  const Graph g = graph_from_edges(4, {{0, 1}, {1, 0}, {0, 1}, {2, 3}, {3, 3}, {1, 2}});
  validate(g);
  EXPECT_EQ(g.num_edges(), 6u);
  EXPECT_TRUE(g.has_edge(3, 2));
  EXPECT_FALSE(g.has_edge(3, 3));
  EXPECT_EQ(g.degree(1), 2u);
}

TEST(Graph, RejectsOutOfRangeEdge) { EXPECT_THROW(graph_from_edges(2, {{0, 2}}), DataError); }

TEST(Graph, ValidationCatchesCorruption) {
  Graph g = graph_from_edges(3, {{0, 1}, {1, 2}});
  Graph asym = g;
  asym.col_indices[0] = 2;  // 0 -> 2 without 2 -> 0
  EXPECT_THROW(validate(asym), DataError);
  Graph unsorted = graph_from_edges(3, {{0, 1}, {0, 2}});
  std::swap(unsorted.col_indices[0], unsorted.col_indices[1]);
  EXPECT_THROW(validate(unsorted), DataError);
  Graph bad_offsets = g;
  bad_offsets.row_offsets.back() += 1;
  EXPECT_THROW(validate(bad_offsets), DataError);
}

TEST(Normalize, TwoNodePathHalves) {
  const auto a = normalize_adjacency(graph_from_edges(2, {{0, 1}}));
  ASSERT_EQ(a.weights.size(), 4u);
  for (double w : a.weights) EXPECT_DOUBLE_EQ(w, 0.5);
}

TEST(Normalize, EdgelessIsIdentity) {
  const auto a = normalize_adjacency(graph_from_edges(3, std::vector<Edge>{}));
  EXPECT_EQ(a.col_indices, (std::vector<NodeId>{0, 1, 2}));
  for (double w : a.weights) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(Normalize, TriangleThirds) {
  const auto a = normalize_adjacency(graph_from_edges(3, {{0, 1}, {1, 2}, {0, 2}}));
  ASSERT_EQ(a.weights.size(), 9u);
  for (double w : a.weights) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
}

TEST(Normalize, IsolatedNodeKeepsUnitSelfLoopWithoutSelfLoops) {
  const auto a = normalize_adjacency(graph_from_edges(3, {{0, 1}}), false);
  EXPECT_EQ(a.row_offsets, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(a.weights[2], 1.0);
  EXPECT_DOUBLE_EQ(a.weights[0], 1.0);  // deg 1 each
}

TEST(Normalize, RowSumsOfRegularGraphsAreOne) {
  for (std::size_t n : {3u, 5u, 8u}) {
    std::vector<Edge> clique, cycle;
    for (NodeId i = 0; i < n; ++i) {
      cycle.emplace_back(i, static_cast<NodeId>((i + 1) % n));
      for (NodeId j = i + 1; j < n; ++j) clique.emplace_back(i, j);
    }
    for (const auto* edges : {&clique, &cycle}) {
      const auto a = normalize_adjacency(graph_from_edges(n, *edges));
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) s += a.weights[k];
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
    }
  }
}

TEST(Normalize, WeightsInUnitInterval) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = normalize_adjacency(graph_from_edges(20, tagforge::testing::random_edges(gen, 20, 0.15)));
    for (double w : a.weights) {
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 1.0);
    }
  }
}

TEST(Spmm, IdentityWeights) {
  const auto a = normalize_adjacency(graph_from_edges(3, std::vector<Edge>{}));
  const Tensor h{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(spmm(a, h), h);
}

TEST(Spmm, TwoNodePathAverages) {
  const auto a = normalize_adjacency(graph_from_edges(2, {{0, 1}}));
  const Tensor out = spmm(a, Tensor{{2}, {4}});
  EXPECT_DOUBLE_EQ(out(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(out(1, 0), 3.0);
}

TEST(Spmm, MatchesDenseOracle) {
  std::mt19937_64 gen(11);
  for (std::size_t n : {1u, 2u, 6u, 13u, 32u}) {
    const auto edges = tagforge::testing::random_edges(gen, n, 0.2);
    const Tensor h = tagforge::testing::random_tensor(gen, n, 5);
    const Tensor fast = spmm(normalize_adjacency(graph_from_edges(n, edges)), h);
    const Tensor dense = tagforge::testing::dense_product(tagforge::testing::dense_normalized(n, edges), h);
    EXPECT_LE(max_abs_diff(fast, dense), 1e-12) << "n=" << n;
  }
}

TEST(Spmm, DimensionMismatch) {
  const auto a = normalize_adjacency(graph_from_edges(2, {{0, 1}}));
  EXPECT_THROW(spmm(a, Tensor(3, 1)), ShapeError);
}

namespace {
LabelVector cora_shaped_labels() {
  // 2708 nodes over 7 classes with Cora's class sizes.
  const std::size_t sizes[7] = {351, 217, 418, 818, 426, 298, 180};
  std::vector<ClassId> labels;
  for (ClassId c = 0; c < 7; ++c) labels.insert(labels.end(), sizes[c], c);
  return make_labels(labels);
}

void expect_disjoint(const SplitMask& s, std::size_t n) {
  std::set<NodeId> all;
  for (const auto* set : {&s.train, &s.val, &s.test})
    for (NodeId v : *set) {
      EXPECT_LT(v, n);
      EXPECT_TRUE(all.insert(v).second) << "node " << v << " in two sets";
    }
}
}  // namespace

TEST(SplitLow, CoraCounts) {
  const auto labels = cora_shaped_labels();
  const SplitMask s = split_low(labels, 20, 500, 1000, 1);
  EXPECT_EQ(s.train.size(), 140u);
  EXPECT_EQ(s.val.size(), 500u);
  EXPECT_EQ(s.test.size(), 1000u);
  std::vector<int> per_class(7, 0);
  for (NodeId v : s.train) ++per_class[labels[v]];
  for (int c : per_class) EXPECT_EQ(c, 20);
}

TEST(SplitLow, TinyCounts) {
  const SplitMask s = split_low(make_labels({0, 0, 1, 1}), 1, 1, 1, 3);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(SplitLow, SeedsGiveDifferentTrainSets) {
  const auto labels = cora_shaped_labels();
  const SplitMask a = split_low(labels, 20, 500, 1000, 1);
  const SplitMask b = split_low(labels, 20, 500, 1000, 2);
  EXPECT_EQ(a.train.size(), b.train.size());
  EXPECT_NE(a.train, b.train);
  EXPECT_EQ(a, split_low(labels, 20, 500, 1000, 1));
}

TEST(SplitLow, InsufficientNodes) {
  EXPECT_THROW(split_low(make_labels({0, 0, 1}), 2, 1, 1, 0), DataError);
  EXPECT_THROW(split_low(make_labels({0, 0, 1, 1}), 1, 2, 1, 0), DataError);
}

TEST(SplitLow, DisjointForManySeeds) {
  const auto labels = cora_shaped_labels();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SplitMask s = split_low(labels, 20, 500, 1000, seed);
    ASSERT_EQ(s.train.size() + s.val.size() + s.test.size(), 1640u);
    expect_disjoint(s, labels.size());
  }
}

TEST(SplitHigh, Counts) {
  const auto check = [](std::size_t n, std::size_t tr, std::size_t va, std::size_t te) {
    const SplitMask s = split_high(n, {}, 0);
    EXPECT_EQ(s.train.size(), tr);
    EXPECT_EQ(s.val.size(), va);
    EXPECT_EQ(s.test.size(), te);
  };
  check(1000, 600, 200, 200);
  check(10, 6, 2, 2);
  check(2708, 1624, 541, 543);
}

TEST(SplitHigh, TooSmall) { EXPECT_THROW(split_high(4, {}, 0), DataError); }

TEST(SplitHigh, ExhaustivePartitionForManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 5 + seed * 7;
    const SplitMask s = split_high(n, {}, seed);
    ASSERT_EQ(s.train.size() + s.val.size() + s.test.size(), n);
    expect_disjoint(s, n);
  }
}

TEST(Synthetic, TwoCliquesAtProbabilityExtremes) {
  const Dataset ds = generate_synthetic({.num_nodes = 4, .num_classes = 2, .p_in = 1.0, .p_out = 0.0, .dim = 3, .sep = 1.0}, 5);
  validate(ds);
  for (NodeId i = 0; i < 4; ++i) {
    ASSERT_EQ(ds.graph.degree(i), 1u);
    EXPECT_EQ(ds.labels[ds.graph.neighbors(i)[0]], ds.labels[i]);
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  const SyntheticSpec spec{.num_nodes = 60, .num_classes = 3, .p_in = 0.3, .p_out = 0.02, .dim = 8, .sep = 2.0, .text_words = 5};
  const Dataset a = generate_synthetic(spec, 17), b = generate_synthetic(spec, 17), c = generate_synthetic(spec, 18);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels.labels, b.labels.labels);
  EXPECT_EQ(a.texts, b.texts);
  EXPECT_NE(a.features, c.features);
}

TEST(Synthetic, BalancedLabelsAndValidGraph) {
  const Dataset ds = generate_synthetic({.num_nodes = 200, .num_classes = 3, .p_in = 0.2, .p_out = 0.01, .dim = 8, .sep = 3.0}, 1);
  validate(ds);
  std::vector<int> count(3, 0);
  for (ClassId c : ds.labels.labels) ++count[c];
  EXPECT_LE(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()), 1);
}

TEST(Synthetic, InvalidProbabilities) {
  EXPECT_THROW(generate_synthetic({.p_in = 0.1, .p_out = 0.2}, 0), ConfigError);
  EXPECT_THROW(generate_synthetic({.p_in = 1.5, .p_out = 0.0}, 0), ConfigError);
  EXPECT_THROW(generate_synthetic({.num_nodes = 2, .num_classes = 3}, 0), ConfigError);
}

TEST(Planetoid, LoadsAndSymmetrizes) {
  TempDir dir;
  tagforge::testing::write_file(dir / "toy.labels", "0\n1\n1\n");
  tagforge::testing::write_file(dir / "toy.edges", "0 1\n2 1\n0 1\n");
  tagforge::testing::write_file(dir / "toy.texts", "alpha beta\nbeta\ngamma\n");
  const Dataset ds = load_planetoid(dir.path(), "toy");
  EXPECT_EQ(ds.num_nodes(), 3u);
  EXPECT_EQ(ds.num_classes(), 2u);
  EXPECT_EQ(ds.graph.num_edges(), 4u);
  EXPECT_TRUE(ds.graph.has_edge(1, 2));
  EXPECT_EQ(ds.texts[2], "gamma");
  EXPECT_FALSE(ds.split.has_value());
}

TEST(Planetoid, EmptyEdgeFile) {
  TempDir dir;
  tagforge::testing::write_file(dir / "e.labels", "0\n1\n0\n");
  tagforge::testing::write_file(dir / "e.edges", "");
  save_embedding_file(dir / "e.features", Tensor(3, 2, 1.0));
  const Dataset ds = load_planetoid(dir.path(), "e");
  EXPECT_EQ(ds.graph.row_offsets, (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_EQ(ds.features.rows(), 3u);
}

TEST(Planetoid, Errors) {
  TempDir dir;
  EXPECT_THROW(load_planetoid(dir.path(), "none"), DataError);
  tagforge::testing::write_file(dir / "x.labels", "0\n1\n");
  tagforge::testing::write_file(dir / "x.edges", "0 1\n");
  EXPECT_THROW(load_planetoid(dir.path(), "x"), DataError);  // no features or texts
  save_embedding_file(dir / "x.features", Tensor(3, 2));
  EXPECT_THROW(load_planetoid(dir.path(), "x"), DataError);  // 3 rows, 2 labels
  save_embedding_file(dir / "x.features", Tensor(2, 2));
  tagforge::testing::write_file(dir / "x.edges", "0 5\n");
  EXPECT_THROW(load_planetoid(dir.path(), "x"), DataError);  // id out of range
}

TEST(Planetoid, SplitFileAndRoundTrip) {
  TempDir dir;
  Dataset ds = generate_synthetic({.num_nodes = 30, .num_classes = 3, .p_in = 0.4, .p_out = 0.05, .dim = 4, .sep = 1.0}, 2);
  ds.name = "rt";
  ds.split = split_high(30, {}, 4);
  save_planetoid(dir.path(), ds);
  const Dataset back = load_planetoid(dir.path(), "rt");
  EXPECT_EQ(back.graph, ds.graph);
  EXPECT_EQ(back.labels.labels, ds.labels.labels);
  EXPECT_EQ(back.split, ds.split);
  EXPECT_LE(max_abs_diff(back.features, ds.features), 1e-6);
}

TEST(Planetoid, CoraWhenAvailable) {
  const char* dir = std::getenv("TAGFORGE_CORA_DIR");
  if (!dir) GTEST_SKIP() << "TAGFORGE_CORA_DIR not set";
  const Dataset ds = load_planetoid(dir, "cora");
  EXPECT_EQ(ds.num_nodes(), 2708u);
  EXPECT_EQ(ds.num_classes(), 7u);
}
