#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bosim/master_equation.hpp"
#include "bosim/quantum_feedback.hpp"

namespace bosim {
namespace {

using cd = std::complex<double>;

RealMatrix random_couplings(std::mt19937_64& gen, int sites) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  RealMatrix j = RealMatrix::Zero(sites, sites);
  for (int a = 0; a < sites; ++a)
    for (int b = a + 1; b < sites; ++b) j(a, b) = j(b, a) = u(gen);
  return j;
}

ComplexMatrix random_hermitian(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> g;
  const auto n = static_cast<Eigen::Index>(dim);
  ComplexMatrix a(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) a(r, c) = cd(g(gen), g(gen));
  return 0.5 * (a + a.adjoint());
}

// Random density matrix A A^dag / tr.
ComplexMatrix random_state(std::mt19937_64& gen, std::size_t dim) {
  const ComplexMatrix a = random_hermitian(gen, dim) + cd(0.0, 1.0) * random_hermitian(gen, dim);
  ComplexMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

ComplexMatrix maximally_mixed(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return ComplexMatrix::Identity(n, n) / static_cast<double>(dim);
}

FeedbackParams only(double gain, double gamma_meas, double alpha) {
  FeedbackParams p;
  p.feedback_gain = gain;
  p.gamma_meas = gamma_meas;
  p.alpha = alpha;
  return p;
}

TEST(SiteOperators, SingleBoson) {
  const auto ops = build_site_operators(1, 1);
  ASSERT_EQ(ops.dim, 2u);
  EXPECT_EQ(ops.sz[0](0, 0), cd(-1.0));
  EXPECT_EQ(ops.sz[0](1, 1), cd(1.0));
  ComplexMatrix lower = ComplexMatrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  EXPECT_EQ(ops.sminus[0], lower);
  EXPECT_EQ(ops.splus(0), lower.adjoint());
}

TEST(SiteOperators, TwoBosons) {
  const auto ops = build_site_operators(2, 1);
  EXPECT_EQ(ops.sz[0].diagonal().real(), Eigen::Vector3d(-2.0, 0.0, 2.0));
  EXPECT_NEAR(ops.sminus[0](0, 1).real(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(ops.sminus[0](1, 2).real(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(ops.sminus[0].cwiseAbs().sum(), 2.0 * std::sqrt(2.0), 1e-15);
}

TEST(SiteOperators, Invariants) {
  const auto ops = build_site_operators(2, 3);
  const StateIndexer idx(3, 2);
  ASSERT_EQ(ops.dim, 27u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ((ops.sz[i] - ops.sz[i].adjoint()).cwiseAbs().maxCoeff(), 0.0);
    for (int j = 0; j < 3; ++j) EXPECT_EQ((ops.sz[i] * ops.sz[j] - ops.sz[j] * ops.sz[i]).cwiseAbs().maxCoeff(), 0.0);
    for_each_state(idx, [&](std::size_t index, const OccupationState& k) {
      EXPECT_EQ(ops.sz[i](index, index).real(), 2 * k[i] - 2);
      if (k[i] == 0) {
        EXPECT_EQ(ops.sminus[i].col(static_cast<Eigen::Index>(index)).cwiseAbs().sum(), 0.0);
      }
    });
  }
  EXPECT_THROW(build_site_operators(7, 5), StateSpaceTooLarge);
}

TEST(FeedbackIdentity, ZeroCouplings) {
  std::mt19937_64 gen(1);
  const auto ops = build_site_operators(2, 2);
  EXPECT_EQ(feedback_generator_residual(ops, 1.0, RealMatrix::Zero(2, 2), random_hermitian(gen, ops.dim)), 0.0);
}

TEST(FeedbackIdentity, RandomDraws) {
  std::mt19937_64 gen(2);
  for (auto [n, m] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{1, 3}}) {
    const auto ops = build_site_operators(n, m);
    for (int draw = 0; draw < 100; ++draw) {
      const auto j = random_couplings(gen, m);
      const auto rho = random_hermitian(gen, ops.dim);
      EXPECT_LT(feedback_generator_residual(ops, 0.7, j, rho), 1e-12) << "N=" << n << " M=" << m;
    }
  }
}

TEST(FeedbackIdentity, RejectsAsymmetricCouplings) {
  const auto ops = build_site_operators(1, 2);
  RealMatrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  EXPECT_THROW(feedback_generator_residual(ops, 1.0, j, maximally_mixed(ops.dim)), InvalidArgument);
  RealMatrix diag = RealMatrix::Zero(2, 2);
  diag(0, 0) = 1.0;
  EXPECT_THROW(feedback_hamiltonian(ops, diag), InvalidArgument);
}

TEST(FeedbackHamiltonian, OrderedPairSumIsTwiceClassicalEnergy) {
  const auto ops = build_site_operators(2, 3);
  std::mt19937_64 gen(3);
  const auto j = random_couplings(gen, 3);
  const auto h = feedback_hamiltonian(ops, j);
  std::vector<double> flat(j.data(), j.data() + 9);
  const ProblemInstance inst(3, 2, flat, 0.0);
  for_each_state(StateIndexer(3, 2), [&](std::size_t index, const OccupationState& k) {
    EXPECT_NEAR(h(index, index).real(), 2.0 * energy(inst, k), 1e-12);
  });
  EXPECT_LT((h - ComplexMatrix(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LindbladRhs, DephasingKeepsDiagonal) {
  const auto ops = build_site_operators(2, 2);
  const auto d = lindblad_rhs(ops, only(0.0, 1.0, 0.0), RealMatrix::Zero(2, 2), maximally_mixed(ops.dim));
  EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LindbladRhs, SingleBosonDecay) {
  const auto ops = build_site_operators(1, 1);
  const auto d = lindblad_rhs(ops, only(0.0, 0.0, 1.0), RealMatrix::Zero(1, 1), basis_projector(2, 1));
  ComplexMatrix want = ComplexMatrix::Zero(2, 2);
  want(0, 0) = 1.0;
  want(1, 1) = -1.0;
  EXPECT_LT((d - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LindbladRhs, TraceAndHermiticity) {
  std::mt19937_64 gen(4);
  const auto ops = build_site_operators(2, 2);
  FeedbackParams p;
  p.feedback_gain = 0.8;
  p.efficiency = 0.6;
  p.gamma_meas = 0.4;
  p.alpha = 1.3;
  for (int draw = 0; draw < 30; ++draw) {
    const auto j = random_couplings(gen, 2);
    const auto rho = random_hermitian(gen, ops.dim);
    const auto d = lindblad_rhs(ops, p, j, rho);
    EXPECT_LT(std::abs(d.trace()), 1e-12 * std::max(1.0, rho.cwiseAbs().maxCoeff()) * 100);
    EXPECT_LT((d - d.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(lindblad_rhs(ops, p, RealMatrix::Zero(2, 2), ComplexMatrix::Zero(3, 3)), InvalidArgument);
}

TEST(DephasingRate, Coefficients) {
  RealMatrix j(3, 3);
  j << 0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0;
  FeedbackParams p;
  p.feedback_gain = 2.0;
  p.efficiency = 0.5;
  p.gamma_meas = 4.0;
  // Gamma^2 / (eta gamma) = 2
  EXPECT_DOUBLE_EQ(dephasing_rate(p, j, 0), 2.0 * 5.0 + 4.0);
  EXPECT_DOUBLE_EQ(dephasing_rate(p, j, 1), 2.0 * 1.0 + 4.0);
  p.gamma_meas = 0.0;
  EXPECT_THROW(dephasing_rate(p, j, 0), InvalidArgument);
  p.feedback_gain = 0.0;
  EXPECT_DOUBLE_EQ(dephasing_rate(p, j, 0), 0.0);
}

TEST(FeedbackParams, Validation) {
  FeedbackParams p;
  p.efficiency = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.efficiency = 1.5;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = FeedbackParams{};
  p.alpha = -1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

// The diagonal block of the alpha-only Lindbladian is the zero-temperature
// single-step classical generator. The classical downhill rate carries
// 1 + gamma = 2, so the classical alpha is half the Lindblad one.
TEST(ClassicalCorrespondence, GeneratorsMatch) {
  for (auto [n, m] : {std::pair{4, 1}, std::pair{2, 2}, std::pair{3, 2}}) {
    const auto ops = build_site_operators(n, m);
    const double alpha = 1.7;
    const ProblemInstance cold(m, n, std::vector<double>(static_cast<std::size_t>(m * m), 0.0), 1.0);
    DynamicsParams cp;
    cp.alpha = alpha / 2.0;
    cp.beta = std::numeric_limits<double>::infinity();
    cp.delta_k_max = 1;
    const MasterGenerator gen(cold, cp);
    const auto q = gen.dense();
    const std::size_t dim = ops.dim;
    ASSERT_EQ(gen.size(), dim);
    for (std::size_t src = 0; src < dim; ++src) {
      const auto d = lindblad_rhs(ops, only(0.0, 0.0, alpha), RealMatrix::Zero(m, m), basis_projector(dim, src));
      for (std::size_t dst = 0; dst < dim; ++dst) {
        EXPECT_NEAR(d(dst, dst).real(), q[dst * dim + src], 1e-12);
        for (std::size_t other = 0; other < dim; ++other)
          if (other != dst) {
            EXPECT_EQ(std::abs(d(dst, other)), 0.0);
          }
      }
    }
  }
}

TEST(EvolveDensityMatrix, PopulationsFollowClassicalMasterEquation) {
  const int n = 4;
  const auto ops = build_site_operators(n, 1);
  ComplexMatrix rho0 = ComplexMatrix::Zero(5, 5);
  const double init[] = {0.1, 0.15, 0.2, 0.25, 0.3};
  for (int a = 0; a < 5; ++a) rho0(a, a) = init[a];
  const auto times = uniform_grid(2.0, 9);
  const auto quantum = evolve_density_matrix(ops, only(0.0, 0.0, 1.0), RealMatrix::Zero(1, 1), rho0, times);

  DynamicsParams cp;
  cp.alpha = 0.5;
  cp.beta = std::numeric_limits<double>::infinity();
  cp.delta_k_max = 1;
  const auto classical = evolve_distribution(two_level_instance(n, 10.0), cp, std::vector<double>(init, init + 5), times);
  for (std::size_t s = 0; s < times.size(); ++s) {
    const auto p = diagonal_populations(quantum[s].rho);
    for (int a = 0; a < 5; ++a) EXPECT_NEAR(p[a], classical[s].p[a], 1e-6);
  }
}

TEST(EvolveDensityMatrix, ZeroDuration) {
  std::mt19937_64 gen(5);
  const auto ops = build_site_operators(1, 2);
  const auto rho0 = random_state(gen, ops.dim);
  const std::vector<double> times{0.0};
  const auto out = evolve_density_matrix(ops, FeedbackParams{}, RealMatrix::Zero(2, 2), rho0, times);
  EXPECT_EQ(out[0].rho, rho0);
}

TEST(EvolveDensityMatrix, DephasingOnlyDecaysCoherences) {
  std::mt19937_64 gen(6);
  const auto ops = build_site_operators(2, 1);
  const auto rho0 = random_state(gen, ops.dim);
  const auto out = evolve_density_matrix(ops, only(0.0, 0.5, 0.0), RealMatrix::Zero(1, 1), rho0, uniform_grid(3.0, 13));
  for (std::size_t s = 1; s < out.size(); ++s) {
    for (Eigen::Index a = 0; a < 3; ++a) {
      EXPECT_NEAR(out[s].rho(a, a).real(), rho0(a, a).real(), 1e-10);
      for (Eigen::Index b = 0; b < 3; ++b)
        if (a != b && std::abs(rho0(a, b)) > 1e-14) {
          EXPECT_LE(std::abs(out[s].rho(a, b)), std::abs(out[s - 1].rho(a, b)));
        }
    }
  }
}

TEST(EvolveDensityMatrix, InvariantsUnderFullDynamics) {
  std::mt19937_64 gen(7);
  const auto ops = build_site_operators(2, 2);
  const auto j = random_couplings(gen, 2);
  FeedbackParams p;
  p.feedback_gain = 0.5;
  p.efficiency = 0.8;
  p.gamma_meas = 0.3;
  p.alpha = 1.0;
  const auto rho0 = random_state(gen, ops.dim);
  for (const auto& s : evolve_density_matrix(ops, p, j, rho0, uniform_grid(5.0, 11))) {
    const auto d = inspect_density_matrix(s.rho);
    EXPECT_LT(d.trace_defect, 1e-9);
    EXPECT_LT(d.hermiticity_defect, 1e-10);
    EXPECT_GT(d.min_eigenvalue, -1e-8);
  }
}

TEST(EvolveDensityMatrix, DiagonalStatesStayDiagonal) {
  std::mt19937_64 gen(8);
  const auto ops = build_site_operators(2, 2);
  const auto j = random_couplings(gen, 2);
  FeedbackParams p;
  p.feedback_gain = 0.9;
  p.gamma_meas = 0.2;
  ComplexMatrix rho0 = ComplexMatrix::Zero(9, 9);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int a = 0; a < 9; ++a) rho0(a, a) = u(gen);
  rho0 /= rho0.trace();
  for (const auto& s : evolve_density_matrix(ops, p, j, rho0, uniform_grid(5.0, 6)))
    EXPECT_LT(inspect_density_matrix(s.rho).offdiag_mass, 1e-10);
}

TEST(EvolveDensityMatrix, RejectsInvalidState) {
  const auto ops = build_site_operators(1, 1);
  ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
  bad(0, 0) = 2.0;
  const std::vector<double> times{1.0};
  EXPECT_THROW(evolve_density_matrix(ops, FeedbackParams{}, RealMatrix::Zero(1, 1), bad, times), InvariantViolation);
}

TEST(DiagonalPopulations, Basics) {
  const auto p = diagonal_populations(basis_projector(4, 2));
  EXPECT_EQ(p, (std::vector<double>{0.0, 0.0, 1.0, 0.0}));
  for (double v : diagonal_populations(maximally_mixed(5))) EXPECT_NEAR(v, 0.2, 1e-15);
  EXPECT_THROW(diagonal_populations(ComplexMatrix::Zero(2, 2)), InvariantViolation);
}

}  // namespace
}  // namespace bosim
