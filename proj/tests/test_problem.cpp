#include <gtest/gtest.h>

#include <random>

#include "bosim/problem.hpp"
#include "bosim/state_indexer.hpp"
#include "test_support.hpp"

namespace bosim {
namespace {

using testing::pair_instance;

TEST(Energy, PairInstanceSingleBoson) {
  const auto inst = pair_instance(1);
  EXPECT_DOUBLE_EQ(energy(inst, std::vector{1, 1}), -11.0);
  EXPECT_DOUBLE_EQ(energy(inst, std::vector{0, 0}), -9.0);
  // Anti-aligned: +10 from the coupling, field terms cancel.
  EXPECT_DOUBLE_EQ(energy(inst, std::vector{1, 0}), 10.0);
}

TEST(Energy, ZeroCouplingsGiveZero) {
  const ProblemInstance inst(3, 4, std::vector<double>(9, 0.0), 0.0);
  StateIndexer idx(inst);
  for_each_state(idx, [&](std::size_t, const OccupationState& k) { EXPECT_EQ(energy(inst, k), 0.0); });
}

TEST(Energy, RejectsDimensionMismatch) {
  const auto inst = pair_instance(2);
  EXPECT_THROW(energy(inst, std::vector{1}), InvalidArgument);
  EXPECT_THROW(energy(inst, std::vector{1, 3}), InvalidArgument);
}

TEST(LocalField, PairInstance) {
  const auto inst = pair_instance(1);
  EXPECT_DOUBLE_EQ(local_field(inst, std::vector{1, 1}, 0), -10.5);
  EXPECT_THROW(local_field(inst, std::vector{1, 1}, 2), InvalidArgument);
}

TEST(LocalField, ZeroCouplingIsField) {
  const ProblemInstance inst(2, 3, {0.0, 0.0, 0.0, 0.0}, 0.7);
  EXPECT_DOUBLE_EQ(local_field(inst, std::vector{0, 3}, 1), 0.7 * 3);
}

TEST(LocalField, EnergyDifferenceIdentity) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + static_cast<int>(gen() % 4);
    const int n = 1 + static_cast<int>(gen() % 8);
    const auto inst = testing::random_instance(gen, m, n);
    auto k = testing::random_state(gen, m, n);
    const int site = static_cast<int>(gen() % m);
    const int dk = static_cast<int>(gen() % (n + 1)) - k[site];
    if (dk == 0) continue;
    const double h = local_field(inst, k, site);
    const double e0 = energy(inst, k);
    k[site] += dk;
    const double e1 = energy(inst, k);
    EXPECT_NEAR(e1 - e0, 2.0 * dk * h, 1e-9 * std::max(1.0, std::abs(e1 - e0)));
  }
}

TEST(ProblemInstance, Invariants) {
  EXPECT_THROW(ProblemInstance(2, 1, {0.0, 1.0, 2.0, 0.0}, 0.0), InvalidArgument);
  EXPECT_THROW(ProblemInstance(2, 1, {1.0, 1.0, 1.0, 0.0}, 0.0), InvalidArgument);
  EXPECT_THROW(ProblemInstance(0, 1, {}, 0.0), InvalidArgument);
  EXPECT_THROW(ProblemInstance(1, 0, {0.0}, 0.0), InvalidArgument);
  EXPECT_THROW(ProblemInstance(2, 1, {0.0, 1.0, 1.0}, 0.0), InvalidArgument);
}

TEST(TwoLevelInstance, GapPerParticle) {
  const auto five = two_level_instance(5, 10.0);
  EXPECT_DOUBLE_EQ(five.field(), 1.0);
  EXPECT_DOUBLE_EQ(energy(five, std::vector{1}) - energy(five, std::vector{0}), 10.0);
  EXPECT_DOUBLE_EQ(two_level_instance(1, 10.0).field(), 5.0);
  EXPECT_THROW(two_level_instance(1, 0.0), InvalidArgument);
}

TEST(StateIndexer, RoundTripAndStrides) {
  const StateIndexer idx(3, 4);
  EXPECT_EQ(idx.size(), 125u);
  std::size_t expected = 0;
  for_each_state(idx, [&](std::size_t index, const OccupationState& k) {
    EXPECT_EQ(index, expected++);
    EXPECT_EQ(idx.encode(k), index);
    EXPECT_EQ(idx.decode(index), k);
  });
  EXPECT_EQ(idx.stride(0), 1u);
  EXPECT_EQ(idx.stride(2), 25u);
}

TEST(StateIndexer, Guard) {
  EXPECT_THROW(StateIndexer(8, 9, 1000), StateSpaceTooLarge);
  EXPECT_THROW(StateIndexer(40, 100), StateSpaceTooLarge);
  EXPECT_NO_THROW(StateIndexer(4, 9, 10000));
}

}  // namespace
}  // namespace bosim
