#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "test_util.hpp"

using namespace tagforge;
using tagforge::testing::random_tensor;

TEST(Matmul, IdentityAndHandComputed) {
  std::mt19937_64 gen(1);
  const Tensor a = random_tensor(gen, 3, 4);
  EXPECT_EQ(matmul(a, Tensor::identity(4)), a);
  const Tensor out = matmul(Tensor{{1, 2}, {3, 4}}, Tensor{{1}, {1}});
  EXPECT_EQ(out, (Tensor{{3}, {7}}));
}

TEST(Matmul, MatchesNaiveProductAndTransposedVariants) {
  std::mt19937_64 gen(2);
  const Tensor a = random_tensor(gen, 5, 3), b = random_tensor(gen, 3, 4), c = random_tensor(gen, 5, 4);
  EXPECT_LE(max_abs_diff(matmul(a, b), tagforge::testing::naive_matmul(a, b)), 1e-12);
  Tensor at(3, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) at(j, i) = a(i, j);
  EXPECT_LE(max_abs_diff(matmul_at_b(a, c), tagforge::testing::naive_matmul(at, c)), 1e-12);
  Tensor bt(4, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) bt(j, i) = b(i, j);
  EXPECT_LE(max_abs_diff(matmul_a_bt(a, bt), tagforge::testing::naive_matmul(a, b)), 1e-12);
}

TEST(Matmul, ShapeMismatch) { EXPECT_THROW(matmul(Tensor(2, 3), Tensor(2, 3)), ShapeError); }

TEST(Matmul, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(gradcheck::check_matmul(seed), 1e-5) << seed;
}

TEST(Relu, Basics) {
  EXPECT_EQ(relu(Tensor{{-1, -2}, {-0.5, -3}}), Tensor(2, 2));
  const Tensor pos{{1, 2}, {0.5, 3}};
  EXPECT_EQ(relu(pos), pos);
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(gradcheck::check_relu(seed), 1e-5);
}

TEST(Dropout, IdentityCases) {
  std::mt19937_64 gen(3);
  const Tensor x = random_tensor(gen, 4, 4);
  Rng rng(1);
  EXPECT_EQ(dropout(x, 1.0, rng, true).first, x);
  EXPECT_EQ(dropout(x, 0.5, rng, false).first, x);
  EXPECT_TRUE(dropout(x, 0.5, rng, false).second.identity());
}

TEST(Dropout, InvalidKeepProb) {
  Rng rng(1);
  EXPECT_THROW(dropout(Tensor(1, 1), 0.0, rng, true), ConfigError);
  EXPECT_THROW(dropout(Tensor(1, 1), 1.5, rng, true), ConfigError);
}

TEST(Dropout, MeanIsPreserved) {
  Rng rng(7);
  const auto [out, mask] = dropout(Tensor(1000, 100, 1.0), 0.5, rng, true);
  double sum = 0.0;
  std::size_t zeros = 0;
  for (double v : out.values()) {
    sum += v;
    zeros += v == 0.0;
    EXPECT_TRUE(v == 0.0 || v == 2.0);
  }
  EXPECT_NEAR(sum / 1e5, 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(zeros) / 1e5, 0.5, 0.01);
}

TEST(Dropout, MaskRegeneratedEachCall) {
  Rng rng(8);
  const auto a = dropout(Tensor(10, 10, 1.0), 0.5, rng, true);
  const auto b = dropout(Tensor(10, 10, 1.0), 0.5, rng, true);
  EXPECT_NE(a.second.mask, b.second.mask);
}

TEST(RowSoftmax, ConstantRowIsUniform) {
  const Tensor y = row_softmax(Tensor{{3, 3, 3, 3}});
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(RowSoftmax, LargeValuesDoNotOverflow) {
  const Tensor y = row_softmax(Tensor{{1000, 1000}});
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.5);
}

TEST(RowSoftmax, MatchesDirectFormula) {
  std::mt19937_64 gen(4);
  const Tensor x = random_tensor(gen, 3, 5);
  const Tensor y = row_softmax(x);
  for (std::size_t i = 0; i < 3; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < 5; ++j) z += std::exp(x(i, j));
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(y(i, j), std::exp(x(i, j)) / z, 1e-12);
  }
}

TEST(RowSoftmax, RowsAreDistributionsForExtremeInputs) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> mag(-300.0, 300.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x(4, 7);
    for (auto& v : x.values()) v = std::pow(10.0, mag(gen) / 100.0) * (gen() % 2 ? 1.0 : -1.0) * (trial % 3 ? 1.0 : 1e300);
    const Tensor y = row_softmax(x);
    for (std::size_t i = 0; i < 4; ++i) {
      double s = 0.0;
      for (double v : y.row(i)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(RowSoftmax, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(gradcheck::check_softmax(seed), 1e-5);
}

TEST(Attention, UniformWeightsAverageValues) {
  const Tensor out = scaled_dot_attention(Tensor{{0}}, Tensor{{0}, {0}}, Tensor{{1}, {3}});
  EXPECT_DOUBLE_EQ(out(0, 0), 2.0);
}

TEST(Attention, SingleKeyReturnsItsValue) {
  const Tensor v{{4, -1, 2}};
  const Tensor out = scaled_dot_attention(Tensor{{0.3, 2}, {-1, 5}}, Tensor{{1, 1}}, v);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(out(i, j), v(0, j));
}

TEST(Attention, MatchesStepByStepOracle) {
  std::mt19937_64 gen(6);
  const Tensor q = random_tensor(gen, 3, 3), k = random_tensor(gen, 3, 3), v = random_tensor(gen, 3, 3);
  const Tensor out = scaled_dot_attention(q, k, v);
  for (std::size_t i = 0; i < 3; ++i) {
    double w[3], z = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 3; ++c) s += q(i, c) * k(j, c);
      w[j] = std::exp(s / std::sqrt(3.0));
      z += w[j];
    }
    for (std::size_t c = 0; c < 3; ++c) {
      double o = 0.0;
      for (std::size_t j = 0; j < 3; ++j) o += w[j] / z * v(j, c);
      EXPECT_NEAR(out(i, c), o, 1e-12);
    }
  }
}

TEST(Attention, ShapeErrors) {
  EXPECT_THROW(scaled_dot_attention(Tensor(2, 3), Tensor(2, 2), Tensor(2, 1)), ShapeError);
  EXPECT_THROW(scaled_dot_attention(Tensor(2, 2), Tensor(2, 2), Tensor(3, 1)), ShapeError);
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(gradcheck::check_attention(seed), 1e-5);
}

TEST(CrossEntropy, UniformLogits) {
  const LabelVector labels{7, {0, 3, 6}};
  const std::vector<NodeId> mask{0, 1, 2};
  EXPECT_NEAR(cross_entropy(Tensor(3, 7), labels, mask).loss, std::log(7.0), 1e-14);
}

TEST(CrossEntropy, ConfidentCorrectLogitGivesZeroLoss) {
  Tensor logits(2, 3);
  logits(0, 1) = 1e4;
  logits(1, 2) = 1e4;
  const std::vector<NodeId> mask{0, 1};
  EXPECT_NEAR(cross_entropy(logits, LabelVector{3, {1, 2}}, mask).loss, 0.0, 1e-12);
}

TEST(CrossEntropy, GradientZeroOutsideMask) {
  std::mt19937_64 gen(7);
  const Tensor logits = random_tensor(gen, 4, 3);
  const std::vector<NodeId> mask{1, 3};
  const auto r = cross_entropy(logits, LabelVector{3, {0, 1, 2, 0}}, mask);
  for (double v : r.dlogits.row(0)) EXPECT_EQ(v, 0.0);
  for (double v : r.dlogits.row(2)) EXPECT_EQ(v, 0.0);
}

TEST(CrossEntropy, PermutationInvariantInMaskOrder) {
  std::mt19937_64 gen(8);
  const Tensor logits = random_tensor(gen, 20, 4);
  LabelVector labels{4, {}};
  for (int i = 0; i < 20; ++i) labels.labels.push_back(static_cast<ClassId>(i % 4));
  std::vector<NodeId> mask{0, 2, 5, 7, 11, 13, 19};
  const auto ref = cross_entropy(logits, labels, mask);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(mask.begin(), mask.end(), gen);
    const auto r = cross_entropy(logits, labels, mask);
    EXPECT_NEAR(r.loss, ref.loss, 1e-14);
    EXPECT_LE(max_abs_diff(r.dlogits, ref.dlogits), 1e-15);
  }
}

TEST(CrossEntropy, EmptyMaskAndShapeErrors) {
  const LabelVector labels{2, {0, 1}};
  EXPECT_THROW(cross_entropy(Tensor(2, 2), labels, std::vector<NodeId>{}), DataError);
  EXPECT_THROW(cross_entropy(Tensor(2, 3), labels, std::vector<NodeId>{0}), ShapeError);
}

TEST(CrossEntropy, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(gradcheck::check_cross_entropy(seed), 1e-5);
}

namespace {
// Direct evaluation of -log(e^{s+/t} / (e^{s+/t} + sum e^{s-/t})).
double infonce_direct(double s_pos, const std::vector<double>& s_neg, double tau) {
  double denom = std::exp(s_pos / tau);
  for (double s : s_neg) denom += std::exp(s / tau);
  return -std::log(std::exp(s_pos / tau) / denom);
}
double cosine(std::span<const double> a, std::span<const double> b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += a[k] * b[k], na += a[k] * a[k], nb += b[k] * b[k];
  return d / std::sqrt(na * nb);
}
}  // namespace

TEST(InfoNce, EqualSimilaritySingleNegativeIsLn2) {
  const Tensor anchor{{1, 0}}, pos{{0, 1}}, neg{{0, -1}};  // both similarities 0
  const std::vector<Tensor> negs{neg};
  EXPECT_NEAR(infonce<double>(anchor, pos, negs, 0.5), std::log(2.0), 1e-12);
  EXPECT_NEAR(infonce<double>(anchor, pos, negs, 0.5, Similarity::dot), std::log(2.0), 1e-12);
}

TEST(InfoNce, LargePositiveSimilarityDrivesLossToZero) {
  const Tensor anchor{{1, 0}}, pos{{1, 0}}, neg{{-1, 0}};
  const std::vector<Tensor> negs{neg};
  EXPECT_LT(infonce<double>(anchor, pos, negs, 0.01), 1e-12);
  EXPECT_LT(infonce<double>(anchor, Tensor{{1e3, 0}}, negs, 1.0, Similarity::dot), 1e-12);
}

TEST(InfoNce, MatchesDirectFormula) {
  std::mt19937_64 gen(9);
  const Tensor anchor = random_tensor(gen, 3, 4), pos = random_tensor(gen, 3, 4);
  const std::vector<Tensor> negs{random_tensor(gen, 3, 4), random_tensor(gen, 3, 4)};
  const double tau = 0.7;
  for (auto sim : {Similarity::cosine, Similarity::dot}) {
    double expected = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto s = [&](const Tensor& other) {
        if (sim == Similarity::cosine) return cosine(anchor.row(i), other.row(i));
        double d = 0;
        for (std::size_t k = 0; k < 4; ++k) d += anchor(i, k) * other(i, k);
        return d;
      };
      expected += infonce_direct(s(pos), {s(negs[0]), s(negs[1])}, tau) / 3.0;
    }
    EXPECT_NEAR(infonce<double>(anchor, pos, negs, tau, sim), expected, 1e-12);
  }
}

TEST(InfoNce, DecreasesAsPositiveSimilarityGrows) {
  const Tensor anchor{{1, 0}};
  const std::vector<Tensor> negs{Tensor{{0.3, 0}}, Tensor{{-0.2, 0}}};
  double prev = INFINITY;
  for (double s = -2.0; s <= 2.0; s += 0.25) {
    const double l = infonce<double>(anchor, Tensor{{s, 0}}, negs, 0.5, Similarity::dot);
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(InfoNce, RejectsNonPositiveTemperature) {
  const Tensor a{{1}};
  const std::vector<Tensor> negs{a};
  EXPECT_THROW(infonce<double>(a, a, negs, 0.0), ConfigError);
  EXPECT_THROW(infonce<double>(a, a, negs, -1.0), ConfigError);
}

TEST(GradcheckSuite, EveryOpPassesAndIsListedOnce) {
  const auto checks = gradcheck::default_checks();
  const auto report = gradcheck::run(checks, 5);
  EXPECT_TRUE(report.all_passed());
  std::set<std::string> names;
  for (const auto& e : report.entries) {
    EXPECT_TRUE(names.insert(e.op).second) << e.op;
    EXPECT_LE(e.max_rel_error, 1e-4) << e.op;
  }
  EXPECT_EQ(names.size(), checks.size());
}

TEST(GradcheckSuite, FlagsABrokenBackward) {
  auto checks = gradcheck::default_checks();
  checks.push_back({"broken_relu", [](std::uint64_t seed) {
                      Rng rng(seed);
                      Tensor x = gradcheck::random_away_from_zero(rng, 3, 3);
                      const Tensor r = gradcheck::random_matrix(rng, 3, 3);
                      // forgets to gate by x > 0
                      return gradcheck::compare({{&x, r}}, [&] { return gradcheck::sum_product(relu(x), r); });
                    }});
  const auto report = gradcheck::run(checks, 2);
  EXPECT_FALSE(report.all_passed());
  EXPECT_FALSE(report.entries.back().passed);
  for (std::size_t k = 0; k + 1 < report.entries.size(); ++k) EXPECT_TRUE(report.entries[k].passed);
}
