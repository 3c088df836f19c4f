#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "ode.hpp"
#include "state_indexer.hpp"

namespace bosim {

using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr std::size_t kDenseDimensionLimit = 4096;

// Collective spin operators of every site, embedded in the (N+1)^M product
// basis ordered like StateIndexer. S^z_i is diagonal with eigenvalue
// 2 k_i - N; S^-_i = a_{i-}^dag a_{i+} maps |k_i> to sqrt(k_i (N - k_i + 1)) |k_i - 1>.
struct SiteOperators {
  int bosons = 0;
  int sites = 0;
  std::size_t dim = 0;
  std::vector<ComplexMatrix> sz;
  std::vector<ComplexMatrix> sminus;

  ComplexMatrix splus(int site) const { return sminus[static_cast<std::size_t>(site)].adjoint(); }
};

inline SiteOperators build_site_operators(int bosons, int sites) {
  const StateIndexer indexer(sites, bosons, kDenseDimensionLimit);
  SiteOperators ops;
  ops.bosons = bosons;
  ops.sites = sites;
  ops.dim = indexer.size();
  const auto dim = static_cast<Eigen::Index>(ops.dim);
  for (int i = 0; i < sites; ++i) {
    ComplexMatrix sz = ComplexMatrix::Zero(dim, dim);
    ComplexMatrix sm = ComplexMatrix::Zero(dim, dim);
    const std::size_t stride = indexer.stride(i);
    for_each_state(indexer, [&](std::size_t index, const OccupationState& state) {
      const int k = state[i];
      const auto col = static_cast<Eigen::Index>(index);
      sz(col, col) = static_cast<double>(2 * k - bosons);
      if (k > 0) sm(static_cast<Eigen::Index>(index - stride), col) = std::sqrt(static_cast<double>(k) * (bosons - k + 1));
    });
    ops.sz.push_back(std::move(sz));
    ops.sminus.push_back(std::move(sm));
  }
  return ops;
}

// Rates of the feedback-cooled spin register. gamma is the measurement rate
// (distinct from the Glauber factor of the classical dynamics).
struct FeedbackParams {
  double feedback_gain = 1.0;  // Gamma
  double efficiency = 1.0;     // eta, detector efficiency
  double gamma_meas = 1.0;
  double alpha = 1.0;          // dissipation rate of D[S^-]

  void validate() const {
    if (feedback_gain < 0.0 || gamma_meas < 0.0 || alpha < 0.0) throw InvalidArgument("rates must be >= 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
  }
};

inline void check_couplings(const SiteOperators& ops, const RealMatrix& couplings) {
  if (couplings.rows() != ops.sites || couplings.cols() != ops.sites)
    throw InvalidArgument("coupling matrix must be M x M");
  for (int i = 0; i < ops.sites; ++i) {
    if (couplings(i, i) != 0.0) throw InvalidArgument("coupling diagonal must be zero");
    for (int j = 0; j < ops.sites; ++j)
      if (couplings(i, j) != couplings(j, i)) throw InvalidArgument("coupling matrix must be symmetric");
  }
}

inline void check_shape(const SiteOperators& ops, const ComplexMatrix& rho) {
  const auto dim = static_cast<Eigen::Index>(ops.dim);
  if (rho.rows() != dim || rho.cols() != dim) throw InvalidArgument("density matrix has the wrong dimension");
}

// H = sum_{i != j} J_ij S^z_i S^z_j (ordered pairs).
inline ComplexMatrix feedback_hamiltonian(const SiteOperators& ops, const RealMatrix& couplings) {
  check_couplings(ops, couplings);
  const auto dim = static_cast<Eigen::Index>(ops.dim);
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (int i = 0; i < ops.sites; ++i)
    for (int j = 0; j < ops.sites; ++j)
      if (i != j && couplings(i, j) != 0.0) h += couplings(i, j) * (ops.sz[i] * ops.sz[j]);
  return h;
}

// The cross-site term produced by Markovian feedback of the measured
// currents: -i sum_i sum_{j != i} [Gamma J_ij S^z_i, S^z_j rho + rho S^z_j].
inline ComplexMatrix feedback_cross_term(const SiteOperators& ops, double feedback_gain, const RealMatrix& couplings,
                                         const ComplexMatrix& rho) {
  check_couplings(ops, couplings);
  check_shape(ops, rho);
  const std::complex<double> minus_i(0.0, -1.0);
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (int i = 0; i < ops.sites; ++i) {
    for (int j = 0; j < ops.sites; ++j) {
      if (i == j) continue;
      const ComplexMatrix a = feedback_gain * couplings(i, j) * ops.sz[i];
      const ComplexMatrix b = ops.sz[j] * rho + rho * ops.sz[j];
      out += minus_i * (a * b - b * a);
    }
  }
  return out;
}

// max |feedback_cross_term - (-i Gamma [H, rho])| over entries; vanishes for
// symmetric J.
inline double feedback_generator_residual(const SiteOperators& ops, double feedback_gain,
                                          const RealMatrix& couplings, const ComplexMatrix& rho) {
  const ComplexMatrix lhs = feedback_cross_term(ops, feedback_gain, couplings, rho);
  const ComplexMatrix h = feedback_hamiltonian(ops, couplings);
  const ComplexMatrix rhs = std::complex<double>(0.0, -feedback_gain) * (h * rho - rho * h);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

// D[C] rho = C rho C^dag - {C^dag C, rho} / 2
inline ComplexMatrix dissipator(const ComplexMatrix& c, const ComplexMatrix& rho) {
  const ComplexMatrix cdc = c.adjoint() * c;
  return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

// Per-site dephasing strength Gamma^2 / (eta gamma) sum_{j != i} J_ij^2 + gamma.
inline double dephasing_rate(const FeedbackParams& params, const RealMatrix& couplings, int site) {
  double j2 = 0.0;
  for (int j = 0; j < couplings.cols(); ++j)
    if (j != site) j2 += couplings(site, j) * couplings(site, j);
  double noise = 0.0;
  if (params.feedback_gain != 0.0 && j2 != 0.0) {
    if (params.gamma_meas == 0.0) throw InvalidArgument("feedback noise needs a nonzero measurement rate");
    noise = params.feedback_gain * params.feedback_gain / (params.efficiency * params.gamma_meas) * j2;
  }
  return noise + params.gamma_meas;
}

// d rho / dt = -i Gamma [H, rho] + alpha sum_i D[S^-_i] rho + sum_i kappa_i D[S^z_i] rho
inline ComplexMatrix lindblad_rhs(const SiteOperators& ops, const FeedbackParams& params,
                                  const RealMatrix& couplings, const ComplexMatrix& rho) {
  params.validate();
  check_couplings(ops, couplings);
  check_shape(ops, rho);
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  if (params.feedback_gain != 0.0) {
    const ComplexMatrix h = feedback_hamiltonian(ops, couplings);
    out += std::complex<double>(0.0, -params.feedback_gain) * (h * rho - rho * h);
  }
  for (int i = 0; i < ops.sites; ++i) {
    if (params.alpha != 0.0) out += params.alpha * dissipator(ops.sminus[i], rho);
    const double kappa = dephasing_rate(params, couplings, i);
    if (kappa != 0.0) out += kappa * dissipator(ops.sz[i], rho);
  }
  return out;
}

struct DensityDiagnostics {
  double trace_defect = 0.0;        // |tr rho - 1|
  double hermiticity_defect = 0.0;  // max |rho - rho^dag|
  double min_eigenvalue = 0.0;
  double offdiag_mass = 0.0;        // sum_{a != b} |rho_ab|
};

inline DensityDiagnostics inspect_density_matrix(const ComplexMatrix& rho) {
  DensityDiagnostics d;
  d.trace_defect = std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
  d.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
  d.min_eigenvalue = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  d.offdiag_mass = rho.cwiseAbs().sum() - rho.diagonal().cwiseAbs().sum();
  return d;
}

inline void check_density_matrix(const ComplexMatrix& rho, double trace_slack = 1e-9, double hermitian_slack = 1e-10,
                                 double eigen_slack = 1e-8) {
  const auto d = inspect_density_matrix(rho);
  if (d.trace_defect > trace_slack) throw InvariantViolation("density matrix trace differs from 1");
  if (d.hermiticity_defect > hermitian_slack) throw InvariantViolation("density matrix is not Hermitian");
  if (d.min_eigenvalue < -eigen_slack) throw InvariantViolation("density matrix has a negative eigenvalue");
}

struct DensitySample {
  double time = 0.0;
  ComplexMatrix rho;
};

inline std::vector<DensitySample> evolve_density_matrix(const SiteOperators& ops, const FeedbackParams& params,
                                                        const RealMatrix& couplings, const ComplexMatrix& rho0,
                                                        std::span<const double> output_times,
                                                        const OdeTolerances& tol = {}) {
  params.validate();
  check_couplings(ops, couplings);
  check_shape(ops, rho0);
  check_density_matrix(rho0);
  const auto dim = static_cast<Eigen::Index>(ops.dim);
  // Precompute the Hamiltonian and rates once; the integrator sees a flat
  // column-major vector.
  ComplexMatrix h;
  if (params.feedback_gain != 0.0) h = feedback_hamiltonian(ops, couplings);
  std::vector<double> kappa;
  for (int i = 0; i < ops.sites; ++i) kappa.push_back(dephasing_rate(params, couplings, i));

  auto rhs = [&](double, const std::vector<std::complex<double>>& y, std::vector<std::complex<double>>& dydt) {
    const Eigen::Map<const ComplexMatrix> rho(y.data(), dim, dim);
    Eigen::Map<ComplexMatrix> out(dydt.data(), dim, dim);
    out.setZero();
    if (params.feedback_gain != 0.0) out += std::complex<double>(0.0, -params.feedback_gain) * (h * rho - rho * h);
    for (int i = 0; i < ops.sites; ++i) {
      if (params.alpha != 0.0) out += params.alpha * dissipator(ops.sminus[i], rho);
      if (kappa[i] != 0.0) out += kappa[i] * dissipator(ops.sz[i], rho);
    }
  };
  std::vector<std::complex<double>> y(rho0.data(), rho0.data() + rho0.size());
  auto states = integrate_adaptive<std::complex<double>>(rhs, std::move(y), 0.0, output_times, tol);

  std::vector<DensitySample> out;
  for (std::size_t s = 0; s < states.size(); ++s) {
    DensitySample sample{output_times[s], Eigen::Map<const ComplexMatrix>(states[s].data(), dim, dim)};
    check_density_matrix(sample.rho);
    out.push_back(std::move(sample));
  }
  return out;
}

// Real diagonal of rho, indexed like StateIndexer.
inline std::vector<double> diagonal_populations(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols()) throw InvalidArgument("density matrix must be square");
  std::vector<double> p(static_cast<std::size_t>(rho.rows()));
  double sum = 0.0;
  for (Eigen::Index a = 0; a < rho.rows(); ++a) {
    p[static_cast<std::size_t>(a)] = rho(a, a).real();
    if (p[static_cast<std::size_t>(a)] < -1e-9) throw InvariantViolation("negative population");
    sum += p[static_cast<std::size_t>(a)];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvariantViolation("populations do not sum to 1");
  return p;
}

inline ComplexMatrix basis_projector(std::size_t dim, std::size_t index) {
  ComplexMatrix rho = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  rho(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return rho;
}

}  // namespace bosim
