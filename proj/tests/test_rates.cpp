#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bosim/rates.hpp"
#include "test_support.hpp"

namespace bosim {
namespace {

using testing::pair_instance;

TEST(GlauberGamma, Examples) {
  const auto inst = pair_instance(1);
  const OccupationState k{1, 1};
  EXPECT_NEAR(glauber_gamma(inst, k, 0, -1, 0.1), std::tanh(-1.05), 1e-15);
  EXPECT_NEAR(glauber_gamma(inst, k, 0, -1, 0.1), -0.78181, 1e-5);
  EXPECT_EQ(glauber_gamma(inst, k, 0, -1, 0.0), 0.0);
  EXPECT_EQ(glauber_gamma(inst, OccupationState{0, 1}, 1, 1, 0.0), 0.0);
}

TEST(GlauberGamma, OddInDeltaK) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int t = 0; t < 1000; ++t) {
    const double beta = std::abs(u(gen)) / 10.0;
    const double h = u(gen);
    for (int dk = 1; dk <= 4; ++dk) EXPECT_EQ(glauber_gamma(dk, beta, h), -glauber_gamma(-dk, beta, h));
  }
}

TEST(ThermalFactor, MatchesDirectFormAndSaturates) {
  for (double beta : {0.0, 0.01, 0.3, 2.0})
    for (double h : {-7.0, -0.5, 0.0, 0.25, 3.0})
      for (int dk : {-2, -1, 1, 3})
        EXPECT_NEAR(std::exp(log_thermal_factor(dk, beta, h)), 1.0 + glauber_gamma(dk, beta, h), 1e-14);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(log_thermal_factor(-1, inf, 2.0), std::log(2.0), 1e-15);
  EXPECT_EQ(log_thermal_factor(1, inf, 2.0), -inf);
  EXPECT_NEAR(log_thermal_factor(1, inf, 0.0), 0.0, 0.0);
  EXPECT_TRUE(std::isfinite(log_thermal_factor(1, 1e6, 1e3)));
  EXPECT_FALSE(std::isnan(log_thermal_factor(1, 1e300, 1e300)));
}

TEST(StimulationFactor, Examples) {
  EXPECT_NEAR(log_stimulation_factor(5, 0, 1), std::log(5.0), 1e-15);
  EXPECT_EQ(log_stimulation_factor(1, 0, 1), 0.0);
  EXPECT_NEAR(log_stimulation_factor(4, 0, 4), std::log(576.0), 1e-13);
  EXPECT_THROW(log_stimulation_factor(3, 2, 2), InvalidArgument);
  EXPECT_THROW(log_stimulation_factor(3, 0, -1), InvalidArgument);
  EXPECT_THROW(log_stimulation_factor(3, 1, 0), InvalidArgument);
}

TEST(StimulationFactor, ReverseSymmetry) {
  for (int n = 1; n <= 25; ++n)
    for (int k = 0; k <= n; ++k)
      for (int d = 1; k + d <= n; ++d)
        EXPECT_NEAR(log_stimulation_factor(n, k, d), log_stimulation_factor(n, k + d, -d), 1e-12);
}

TEST(StimulationFactor, LargeBosonNumberStaysFinite) {
  const double v = log_stimulation_factor(10000, 0, 10000);
  EXPECT_TRUE(std::isfinite(v));
  // F(0, N) = (N!)^2
  EXPECT_NEAR(v, 2.0 * std::lgamma(10001.0), 1e-6 * v);
}

TEST(TransitionLogWeight, Examples) {
  const auto inst = pair_instance(1);
  DynamicsParams p;
  p.beta = 0.1;
  const OccupationState k{1, 1};
  EXPECT_NEAR(std::exp(transition_log_weight(inst, p, k, 0, -1)), 1.0 + std::tanh(-1.05), 1e-14);
  EXPECT_NEAR(std::exp(transition_log_weight(inst, p, k, 0, -1)), 0.21819, 1e-5);

  const auto four = two_level_instance(4, 10.0);
  DynamicsParams hot;
  EXPECT_NEAR(transition_log_weight(four, hot, OccupationState{0}, 0, 4),
              3.0 * std::log(0.001) - 2.0 * std::log(6.0) + std::log(576.0), 1e-12);
  EXPECT_NEAR(std::exp(transition_log_weight(four, hot, OccupationState{1}, 0, 1)), 2.0 * 3.0, 1e-12);
  EXPECT_NEAR(std::exp(transition_log_weight(four, hot, OccupationState{1}, 0, -1)), 1.0 * 4.0, 1e-12);
}

TEST(TransitionLogWeight, AlphaDoublingAddsLog2) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 200; ++t) {
    const auto inst = testing::random_instance(gen, 3, 4);
    const auto k = testing::random_state(gen, 3, 4);
    DynamicsParams a;
    a.beta = 0.2;
    DynamicsParams b = a;
    b.alpha = 2.0;
    const auto ta = rate_table(inst, a, k);
    const auto tb = rate_table(inst, b, k);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_NEAR(tb[i].log_rate - ta[i].log_rate, std::log(2.0), 1e-12);
  }
}

TEST(TransitionLogWeight, RejectsBadInput) {
  const auto inst = pair_instance(2);
  DynamicsParams p;
  EXPECT_THROW(transition_log_weight(inst, p, OccupationState{2, 0}, 0, 1), InvalidArgument);
  p.delta_k_max = 1;
  EXPECT_THROW(transition_log_weight(inst, p, OccupationState{0, 0}, 0, 2), InvalidArgument);
  p.delta_k_max = 3;
  EXPECT_THROW(transition_log_weight(inst, p, OccupationState{0, 0}, 0, 1), InvalidArgument);
  DynamicsParams bad;
  bad.xi = 0.0;
  EXPECT_THROW(transition_log_weight(inst, bad, OccupationState{0, 0}, 0, 1), InvalidArgument);
  bad = DynamicsParams{};
  bad.beta = -1.0;
  EXPECT_THROW(transition_log_weight(inst, bad, OccupationState{0, 0}, 0, 1), InvalidArgument);
}

TEST(TransitionLogWeight, UphillVanishesAtZeroTemperature) {
  const auto inst = two_level_instance(3, 10.0);
  DynamicsParams p;
  p.beta = std::numeric_limits<double>::infinity();
  // Positive field: the ground level is k = 0.
  EXPECT_EQ(transition_log_weight(inst, p, OccupationState{0}, 0, 1), kNegInf);
  EXPECT_NEAR(transition_log_weight(inst, p, OccupationState{3}, 0, -1), std::log(2.0 * 3.0), 1e-12);
}

// Property: w(k -> k') / w(k' -> k) = exp(-beta (E(k') - E(k))) for every pair.
TEST(TransitionLogWeight, DetailedBalance) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> beta_dist(0.0, 0.5);
  for (int t = 0; t < 300; ++t) {
    const int m = 1 + static_cast<int>(gen() % 3);
    const int n = 1 + static_cast<int>(gen() % 6);
    const auto inst = testing::random_instance(gen, m, n);
    const auto k = testing::random_state(gen, m, n);
    DynamicsParams p;
    p.beta = beta_dist(gen);
    p.xi = 0.05;
    for (const auto& tw : rate_table(inst, p, k)) {
      auto k2 = k;
      k2[tw.site] += tw.delta_k;
      const double back = transition_log_weight(inst, p, k2, tw.site, -tw.delta_k);
      const double lhs = tw.log_rate - back;
      const double rhs = -p.beta * (energy(inst, k2) - energy(inst, k));
      EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(RateTable, Counts) {
  DynamicsParams p;
  EXPECT_EQ(rate_table(two_level_instance(1, 10.0), p, OccupationState{0}).size(), 1u);
  p.delta_k_max = 4;
  const auto t = rate_table(pair_instance(4), p, OccupationState{2, 2});
  EXPECT_EQ(t.size(), 8u);
  for (const auto& w : t) EXPECT_FALSE(std::isnan(w.log_rate));
  p.delta_k_max = 1;
  EXPECT_EQ(rate_table(pair_instance(4), p, OccupationState{2, 2}).size(), 4u);
}

TEST(RateTable, MatchesKernelAndPointwise) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    const auto inst = testing::random_instance(gen, 3, 5);
    const auto k = testing::random_state(gen, 3, 5);
    DynamicsParams p;
    p.beta = 0.37;
    p.delta_k_max = 3;
    const RateKernel kernel(inst.bosons(), p);
    for (const auto& tw : rate_table(inst, p, k)) {
      EXPECT_DOUBLE_EQ(tw.log_rate, transition_log_weight(inst, p, k, tw.site, tw.delta_k));
      EXPECT_NEAR(tw.log_rate, kernel.log_weight(k[tw.site], tw.delta_k, p.beta, local_field(inst, k, tw.site)), 1e-12);
    }
  }
}

TEST(RateTable, NoNaNAcrossTemperatures) {
  const auto inst = testing::four_site_instance(6);
  for (double beta : {0.0, 1e-3, 1.0, 1e3, std::numeric_limits<double>::infinity()}) {
    DynamicsParams p;
    p.beta = beta;
    for (const auto& w : rate_table(inst, p, OccupationState{0, 3, 6, 2})) EXPECT_FALSE(std::isnan(w.log_rate));
  }
}

}  // namespace
}  // namespace bosim
