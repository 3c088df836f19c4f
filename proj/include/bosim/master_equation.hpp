#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "ode.hpp"
#include "problem.hpp"
#include "rates.hpp"
#include "state_indexer.hpp"

namespace bosim {

// Generator of dp/dt = Q p on the (N+1)^M occupation hypercube, stored by
// source state: each state lists its outgoing transitions and total exit
// rate. Rates are exp(RateKernel::log_weight), the same values the KMC
// sampler uses.
class MasterGenerator {
 public:
  struct Edge {
    std::uint32_t target;
    double rate;
  };

  MasterGenerator(const ProblemInstance& instance, const DynamicsParams& params,
                  std::size_t limit = kDefaultStateLimit)
      : indexer_(instance, limit) {
    params.validate(instance.bosons());
    if (indexer_.size() > UINT32_MAX) throw StateSpaceTooLarge("state index does not fit 32 bits");
    const RateKernel kernel(instance.bosons(), params);
    const int n = instance.bosons();
    const int jump = kernel.max_jump();
    offsets_.reserve(indexer_.size() + 1);
    offsets_.push_back(0);
    exit_.reserve(indexer_.size());
    for_each_state(indexer_, [&](std::size_t index, const OccupationState& state) {
      double total = 0.0;
      for (int i = 0; i < instance.sites(); ++i) {
        const double h = local_field(instance, state, i);
        const int k = state[i];
        const std::size_t stride = indexer_.stride(i);
        for (int dk = -std::min(k, jump); dk <= std::min(n - k, jump); ++dk) {
          if (dk == 0) continue;
          const double rate = std::exp(kernel.log_weight(k, dk, params.beta, h));
          if (rate == 0.0) continue;
          const auto target = static_cast<std::uint32_t>(static_cast<std::ptrdiff_t>(index) +
                                                         dk * static_cast<std::ptrdiff_t>(stride));
          edges_.push_back({target, rate});
          total += rate;
        }
      }
      exit_.push_back(total);
      offsets_.push_back(edges_.size());
    });
  }

  const StateIndexer& indexer() const noexcept { return indexer_; }
  std::size_t size() const noexcept { return indexer_.size(); }
  double exit_rate(std::size_t source) const { return exit_[source]; }

  std::span<const Edge> outgoing(std::size_t source) const {
    return std::span<const Edge>(edges_).subspan(offsets_[source], offsets_[source + 1] - offsets_[source]);
  }

  // dpdt = Q p, accumulated in source-index order (deterministic).
  void apply(std::span<const double> p, std::span<double> dpdt) const {
    if (p.size() != size() || dpdt.size() != size()) throw InvalidArgument("distribution size mismatch");
    std::fill(dpdt.begin(), dpdt.end(), 0.0);
    for (std::size_t a = 0; a < size(); ++a) {
      const double pa = p[a];
      if (pa == 0.0) continue;
      dpdt[a] -= exit_[a] * pa;
      for (std::size_t e = offsets_[a]; e < offsets_[a + 1]; ++e) dpdt[edges_[e].target] += edges_[e].rate * pa;
    }
  }

  // Row-major dense copy, Q[target * n + source]. Only for small state spaces.
  std::vector<double> dense() const {
    const std::size_t n = size();
    std::vector<double> q(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      q[a * n + a] -= exit_[a];
      for (const Edge& e : outgoing(a)) q[static_cast<std::size_t>(e.target) * n + a] += e.rate;
    }
    return q;
  }

 private:
  StateIndexer indexer_;
  std::vector<std::size_t> offsets_;
  std::vector<Edge> edges_;
  std::vector<double> exit_;
};

struct Distribution {
  std::vector<double> p;
  double time = 0.0;
};

enum class InitialCondition {
  half,     // every site at k = floor(N/2)
  uniform,  // uniform over all k vectors (bosonic beta = 0)
};

inline std::vector<double> initial_distribution(const StateIndexer& indexer, InitialCondition kind) {
  std::vector<double> p(indexer.size(), 0.0);
  if (kind == InitialCondition::uniform) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(indexer.size()));
  } else {
    const OccupationState half(static_cast<std::size_t>(indexer.sites()), indexer.bosons() / 2);
    p[indexer.encode(half)] = 1.0;
  }
  return p;
}

inline void check_distribution(std::span<const double> p, std::size_t expected_size) {
  if (p.size() != expected_size) throw InvalidArgument("distribution has the wrong number of states");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -1e-9)) throw InvariantViolation("distribution entry below -1e-9");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvariantViolation("distribution does not sum to 1");
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("l1_distance: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

inline std::vector<double> master_rhs(const ProblemInstance& instance, const DynamicsParams& params,
                                      std::span<const double> p, std::size_t limit = kDefaultStateLimit) {
  const MasterGenerator generator(instance, params, limit);
  std::vector<double> dpdt(generator.size());
  generator.apply(p, dpdt);
  return dpdt;
}

inline std::vector<Distribution> evolve_distribution(const MasterGenerator& generator, std::span<const double> p0,
                                                     std::span<const double> output_times,
                                                     const OdeTolerances& tol = {}) {
  check_distribution(p0, generator.size());
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dydt) { generator.apply(y, dydt); };
  auto states = integrate_adaptive<double>(rhs, std::vector<double>(p0.begin(), p0.end()), 0.0, output_times, tol);

  std::vector<Distribution> out;
  out.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto& p = states[i];
    double sum = 0.0;
    for (double v : p) {
      if (v < -1e-9)
        throw InvariantViolation("probability " + std::to_string(v) + " below -1e-9 at t=" +
                                 std::to_string(output_times[i]));
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvariantViolation("probability drifted from 1 by more than 1e-9");
    for (double& v : p) v /= sum;
    out.push_back({std::move(p), output_times[i]});
  }
  return out;
}

inline std::vector<Distribution> evolve_distribution(const ProblemInstance& instance, const DynamicsParams& params,
                                                     std::span<const double> p0,
                                                     std::span<const double> output_times,
                                                     const OdeTolerances& tol = {}) {
  return evolve_distribution(MasterGenerator(instance, params), p0, output_times, tol);
}

// `count` equally spaced times ending at t_end, starting at 0.
inline std::vector<double> uniform_grid(double t_end, std::size_t count) {
  if (count < 2) return {t_end};
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i)
    t[i] = i + 1 == count ? t_end : t_end * static_cast<double>(i) / static_cast<double>(count - 1);
  return t;
}

// First time the L1 distance to p_eq drops to `tol`, linearly interpolated
// between the bracketing output points.
inline double equilibration_time_ode(std::span<const Distribution> trajectory, std::span<const double> p_eq,
                                     double tol = 0.02) {
  if (trajectory.empty()) throw InvalidArgument("empty trajectory");
  double prev_t = trajectory[0].time;
  double prev_d = l1_distance(trajectory[0].p, p_eq);
  if (prev_d <= tol) return prev_t;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const double d = l1_distance(trajectory[i].p, p_eq);
    if (d <= tol) {
      const double frac = (prev_d - tol) / (prev_d - d);
      return prev_t + frac * (trajectory[i].time - prev_t);
    }
    prev_t = trajectory[i].time;
    prev_d = d;
  }
  throw NotConverged("distribution did not reach L1 <= " + std::to_string(tol) + " by t=" + std::to_string(prev_t));
}

// Low-temperature two-level rate equation dn1/dt = -dn2/dt = alpha (n1+1) n2.
// With N = n1 + n2 conserved this is logistic in n2:
//   n2(t) = a n2(0) e^{-alpha a t} / (n2(0) e^{-alpha a t} + a - n2(0)),  a = N + 1.
inline std::pair<double, double> rate_equation_two_level(double n1_0, double n2_0, double alpha, double t) {
  if (n1_0 < 0.0 || n2_0 < 0.0) throw InvalidArgument("populations must be >= 0");
  const double total = n1_0 + n2_0;
  const double a = total + 1.0;
  const double decay = std::exp(-alpha * a * t);
  const double n2 = a * n2_0 * decay / (n2_0 * decay + a - n2_0);
  return {total - n2, n2};
}

// Mean fraction of bosons whose spin agrees with the ground-state sign
// pattern; for a two-level instance this is the ground-level population.
inline double aligned_fraction(const StateIndexer& indexer, std::span<const int> ground_signs,
                               std::span<const double> p) {
  const int n = indexer.bosons();
  const double norm = 1.0 / (static_cast<double>(n) * indexer.sites());
  double sum = 0.0;
  for_each_state(indexer, [&](std::size_t index, const OccupationState& state) {
    if (p[index] == 0.0) return;
    int aligned = 0;
    for (int i = 0; i < indexer.sites(); ++i) aligned += ground_signs[i] > 0 ? state[i] : n - state[i];
    sum += p[index] * aligned * norm;
  });
  return sum;
}

// Mass of p outside the success set of a sign readout.
inline double readout_error(const ExactEnsemble& ensemble, std::span<const double> p) {
  const auto mask = ensemble.success_mask();
  if (mask.empty()) throw DegenerateGroundState("no readout success set");
  double good = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (mask[i]) good += p[i];
  return std::clamp(1.0 - good, 0.0, 1.0);
}

}  // namespace bosim
