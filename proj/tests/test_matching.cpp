#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "prob/error.hpp"
#include "prob/matching.hpp"

using namespace prob;

namespace {

Matrix make(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, bool integer) {
  Matrix m(r, c);
  for (double& v : m.data()) v = integer ? uniform_int(rng, 0, 4) : uniform(rng, -3, 7);
  return m;
}

}  // namespace

TEST(Hungarian, OneByOne) {
  const MatchResult m = hungarian(make({{0}}));
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
}

TEST(Hungarian, TwoByTwo) {
  const Matrix c = make({{1, 2}, {2, 1}});
  const MatchResult m = hungarian(c);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(assignment_cost(c, m), 2.0);
}

TEST(Hungarian, ThreeByThree) {
  const Matrix c = make({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}});
  const MatchResult m = hungarian(c);
  EXPECT_DOUBLE_EQ(assignment_cost(c, m), 5.0);
  // Target-ordered pairs: target 0 <- slot 1, target 1 <- slot 0, target 2 <- slot 2.
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{1, 0}, {0, 1}, {2, 2}}));
}

TEST(Hungarian, EmptyTargets) {
  EXPECT_TRUE(hungarian(Matrix(4, 0)).pairs.empty());
  EXPECT_TRUE(hungarian(Matrix(0, 0)).pairs.empty());
}

TEST(Hungarian, NonFiniteThrows) {
  Matrix c(2, 2, 1.0);
  c(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(hungarian(c), DomainError);
}

TEST(Hungarian, MatchesBruteForce) {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto r = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const auto c = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const Matrix m = random_matrix(rng, r, c, trial % 2 == 0);
    const MatchResult res = hungarian(m);
    ASSERT_EQ(res.pairs.size(), std::min(r, c));
    std::vector<bool> row_used(r, false), col_used(c, false);
    for (auto [p, t] : res.pairs) {
      ASSERT_FALSE(row_used[p]);
      ASSERT_FALSE(col_used[t]);
      row_used[p] = col_used[t] = true;
    }
    ASSERT_NEAR(assignment_cost(m, res), oracle::brute_force_assignment(m), 1e-9) << "trial " << trial;
  }
}

TEST(Hungarian, ExactOnIntegerCosts) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const Matrix m = random_matrix(rng, 6, 6, true);
    ASSERT_EQ(assignment_cost(m, hungarian(m)), oracle::brute_force_assignment(m));
  }
}

TEST(Hungarian, ConstantShiftKeepsPairs) {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const auto r = static_cast<std::size_t>(uniform_int(rng, 1, 6));
    const auto c = static_cast<std::size_t>(uniform_int(rng, 1, r));
    Matrix m = random_matrix(rng, r, c, true);
    const MatchResult before = hungarian(m);
    for (double& v : m.data()) v += 3.0;
    ASSERT_EQ(hungarian(m).pairs, before.pairs);
  }
}

TEST(Hungarian, TiesResolveToLexicographicallySmallest) {
  const MatchResult m = hungarian(Matrix(3, 2, 1.0));
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
}

TEST(DetrMatch, ZeroTargets) {
  const Matrix probs(3, 2, 0.5);
  const std::vector<Box> boxes(3, Box{0.5, 0.5, 0.2, 0.2});
  EXPECT_TRUE(detr_match(probs, boxes, {}).pairs.empty());
}

TEST(DetrMatch, DominantSlotWins) {
  Matrix probs(2, 1);
  probs(0, 0) = 0.9;
  probs(1, 0) = 0.1;
  const Box target{0.3, 0.3, 0.2, 0.2};
  const std::vector<Box> boxes{target, Box{0.8, 0.8, 0.1, 0.1}};
  const std::vector<Target> targets{{0, target}};
  const MatchResult m = detr_match(probs, boxes, targets);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}}));
}

TEST(DetrMatch, Cardinality) {
  Rng rng(1);
  Matrix probs(3, 2);
  for (double& p : probs.data()) p = uniform(rng, 0, 1);
  const std::vector<Box> boxes{oracle::random_box(rng), oracle::random_box(rng), oracle::random_box(rng)};
  const std::vector<Target> targets{{0, oracle::random_box(rng)}, {1, oracle::random_box(rng)}};
  const MatchResult m = detr_match(probs, boxes, targets);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_NE(m.pairs[0].first, m.pairs[1].first);
}

TEST(DetrMatch, MoreTargetsThanSlotsIsConfigError) {
  const Matrix probs(1, 1, 0.5);
  const std::vector<Box> boxes{Box{0.5, 0.5, 0.1, 0.1}};
  const std::vector<Target> targets{{0, boxes[0]}, {0, boxes[0]}};
  EXPECT_THROW(detr_match(probs, boxes, targets), ConfigError);
}

TEST(DetrMatch, CostFormula) {
  Matrix probs(1, 2);
  probs(0, 0) = 0.3;
  probs(0, 1) = 0.6;
  const Box p{0.4, 0.5, 0.2, 0.3}, t{0.45, 0.5, 0.25, 0.3};
  const std::vector<Box> boxes{p};
  const std::vector<Target> targets{{1, t}};
  const MatchWeights w{2, 5, 2};
  const Matrix c = detr_cost(probs, boxes, targets, w);
  const double l1 = 0.05 + 0 + 0.05 + 0;
  EXPECT_NEAR(c(0, 0), 2 * (1 - 0.6) + 5 * l1 + 2 * (1 - box_giou(p, t)), 1e-12);
}

TEST(DetrMatch, PermutationEquivariant) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 6, k = static_cast<std::size_t>(uniform_int(rng, 1, 5));
    Matrix probs(n, 3);
    for (double& p : probs.data()) p = uniform(rng, 0, 1);
    std::vector<Box> boxes;
    for (std::size_t i = 0; i < n; ++i) boxes.push_back(oracle::random_box(rng));
    std::vector<Target> targets;
    for (std::size_t j = 0; j < k; ++j) targets.push_back({uniform_int(rng, 0, 2), oracle::random_box(rng)});
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Target> permuted(k);
    for (std::size_t j = 0; j < k; ++j) permuted[j] = targets[perm[j]];

    const auto a = detr_match(probs, boxes, targets).prediction_for_target(k);
    const auto b = detr_match(probs, boxes, permuted).prediction_for_target(k);
    for (std::size_t j = 0; j < k; ++j) ASSERT_EQ(b[j], a[perm[j]]);
  }
}
