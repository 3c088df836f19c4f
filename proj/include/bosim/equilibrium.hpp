#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "log_math.hpp"
#include "problem.hpp"
#include "state_indexer.hpp"

namespace bosim {

// Bosons: each occupation vector k is a single microstate. Distinguishable
// particles: k carries the multiplicity prod_i C(N, k_i).
enum class Statistics { bosonic, distinguishable };

inline const char* to_string(Statistics kind) {
  return kind == Statistics::bosonic ? "bosonic" : "distinguishable";
}

// How a sign readout of the site spins is scored against the ground state.
//   unique_pattern: the ground state must fix one sign pattern with no zero
//                   spins; anything else is a DegenerateGroundState error.
//   any_pattern:    success if the readout matches the sign pattern of any
//                   global minimizer (used for flip-symmetric MAX-CUT).
// A site with S_i = 0 always counts as a failed readout.
enum class ReadoutRule { unique_pattern, any_pattern };

struct GroundSearchResult {
  std::vector<OccupationState> minimizers;
  double min_energy = 0.0;
};

struct EquilibriumStats {
  double log_z = 0.0;  // ln Z, finite even when Z itself would overflow
  double mean_energy = 0.0;
  std::vector<double> mean_spin;
  std::optional<double> error_probability;  // empty if the ground sign pattern is degenerate
  Statistics kind = Statistics::bosonic;

  double z() const { return std::exp(log_z); }
};

namespace detail {

inline double energy_tolerance(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

// Energies, spins and readout outcome of every state of an instance, computed
// once and reused across temperatures.
class ExactEnsemble {
 public:
  explicit ExactEnsemble(const ProblemInstance& instance, ReadoutRule rule = ReadoutRule::unique_pattern,
                         std::size_t limit = kDefaultStateLimit)
      : instance_(instance), indexer_(instance, limit) {
    const std::size_t count = indexer_.size();
    energies_.resize(count);
    log_multiplicity_.resize(count);
    for_each_state(indexer_, [&](std::size_t index, const OccupationState& state) {
      energies_[index] = energy(instance_, state);
      double lm = 0.0;
      for (int k : state) lm += detail::log_binomial(instance_.bosons(), k);
      log_multiplicity_[index] = lm;
    });
    min_energy_ = energies_[0];
    for (double e : energies_) min_energy_ = std::min(min_energy_, e);

    const double tol = detail::energy_tolerance(min_energy_);
    for (std::size_t index = 0; index < count; ++index)
      if (energies_[index] - min_energy_ <= tol) minimizers_.push_back(index);

    try {
      patterns_ = ground_patterns(rule);
    } catch (const DegenerateGroundState& e) {
      degeneracy_reason_ = e.what();
    }
    if (!patterns_.empty()) {
      success_.assign(count, 0);
      for_each_state(indexer_, [&](std::size_t index, const OccupationState& state) {
        success_[index] = patterns_.contains(sign_pattern(state)) ? 1 : 0;
      });
    }
  }

  const ProblemInstance& instance() const noexcept { return instance_; }
  const StateIndexer& indexer() const noexcept { return indexer_; }
  std::span<const double> energies() const noexcept { return energies_; }
  double min_energy() const noexcept { return min_energy_; }
  bool has_readout() const noexcept { return !patterns_.empty(); }

  // 1 if a sign readout of this state is a success; empty if degenerate.
  std::span<const char> success_mask() const noexcept { return success_; }

  const std::set<std::vector<int>>& ground_sign_patterns() const {
    require_readout();
    return patterns_;
  }

  GroundSearchResult ground_search() const {
    GroundSearchResult result;
    result.min_energy = min_energy_;
    for (std::size_t index : minimizers_) result.minimizers.push_back(indexer_.decode(index));
    return result;
  }

  // log of the unnormalized weight of each state relative to the ground
  // energy: ln g(k) - beta (E(k) - E_min).
  std::vector<double> log_weights(double beta, Statistics kind) const {
    check_beta(beta);
    std::vector<double> lw(energies_.size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
      const double g = kind == Statistics::distinguishable ? log_multiplicity_[i] : 0.0;
      lw[i] = g - (beta == 0.0 ? 0.0 : beta * (energies_[i] - min_energy_));
    }
    return lw;
  }

  std::vector<double> boltzmann(double beta, Statistics kind = Statistics::bosonic) const {
    auto lw = log_weights(beta, kind);
    const double log_norm = log_sum_exp(lw);
    for (double& v : lw) v = std::exp(v - log_norm);
    return lw;
  }

  EquilibriumStats stats(double beta, Statistics kind) const {
    const auto lw = log_weights(beta, kind);
    const double log_norm = log_sum_exp(lw);
    EquilibriumStats out;
    out.kind = kind;
    out.log_z = log_norm - beta * min_energy_;
    out.mean_spin.assign(static_cast<std::size_t>(instance_.sites()), 0.0);
    double mean_e = 0.0;
    double fail = 0.0;
    const int n = instance_.bosons();
    for_each_state(indexer_, [&](std::size_t index, const OccupationState& state) {
      const double p = std::exp(lw[index] - log_norm);
      mean_e += p * energies_[index];
      for (int i = 0; i < instance_.sites(); ++i) out.mean_spin[i] += p * site_spin(n, state[i]);
      if (has_readout() && !success_[index]) fail += p;
    });
    out.mean_energy = mean_e;
    if (has_readout()) out.error_probability = std::clamp(fail, 0.0, 1.0);
    return out;
  }

  double error_probability(double beta, Statistics kind) const {
    require_readout();
    const auto lw = log_weights(beta, kind);
    LogSumExpAccumulator all;
    LogSumExpAccumulator good;
    for (std::size_t i = 0; i < lw.size(); ++i) {
      all.add(lw[i]);
      if (success_[i]) good.add(lw[i]);
    }
    // 1 - exp(.) via expm1 keeps precision when the success mass is close to 1.
    return std::clamp(-std::expm1(good.result() - all.result()), 0.0, 1.0);
  }

  // Inverse temperature at which the equilibrium error probability equals
  // `target`, by bracket doubling and bisection.
  double beta_for_error(double target, Statistics kind) const {
    require_readout();
    const double eps0 = error_probability(0.0, kind);
    if (!(target > 0.0)) throw InvalidArgument("target error must be positive");
    if (std::abs(target - eps0) <= 1e-12) return 0.0;
    if (target > eps0)
      throw InvalidArgument("target error " + std::to_string(target) + " exceeds the infinite-temperature error " +
                            std::to_string(eps0));

    double scale = 0.0;
    for (double e : energies_) scale = std::max(scale, e - min_energy_);
    if (scale == 0.0) throw NotConverged("flat energy landscape: error probability does not depend on beta");

    double lo = 0.0;
    double eps_lo = eps0;
    double hi = 1.0 / scale;
    double eps_hi = error_probability(hi, kind);
    for (int doubling = 0; eps_hi >= target; ++doubling) {
      if (doubling > 2000) throw NotConverged("target error not reachable by lowering the temperature");
      if (eps_hi > eps_lo + 1e-12) throw NotConverged("error probability is not monotone in beta");
      lo = hi;
      eps_lo = eps_hi;
      hi *= 2.0;
      eps_hi = error_probability(hi, kind);
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const double eps_mid = error_probability(mid, kind);
      if (eps_mid > eps_lo + 1e-12 || eps_mid < eps_hi - 1e-12)
        throw NotConverged("error probability is not monotone in beta");
      if (eps_mid >= target) {
        lo = mid;
        eps_lo = eps_mid;
      } else {
        hi = mid;
        eps_hi = eps_mid;
      }
    }
    const double beta = 0.5 * (lo + hi);
    if (std::abs(error_probability(beta, kind) - target) > 1e-6)
      throw NotConverged("bisection did not reach the target error");
    return beta;
  }

  std::vector<int> sign_pattern(std::span<const int> state) const {
    std::vector<int> signs(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) {
      const int s = site_spin(instance_.bosons(), state[i]);
      signs[i] = s > 0 ? 1 : (s < 0 ? -1 : 0);
    }
    return signs;
  }

 private:
  std::set<std::vector<int>> ground_patterns(ReadoutRule rule) const {
    std::set<std::vector<int>> patterns;
    bool saw_zero = false;
    for (std::size_t index : minimizers_) {
      auto signs = sign_pattern(indexer_.decode(index));
      if (std::find(signs.begin(), signs.end(), 0) != signs.end()) {
        saw_zero = true;
        continue;
      }
      patterns.insert(std::move(signs));
    }
    if (rule == ReadoutRule::unique_pattern) {
      if (saw_zero) throw DegenerateGroundState("a ground state has a site with zero spin");
      if (patterns.size() != 1)
        throw DegenerateGroundState("ground states have " + std::to_string(patterns.size()) + " sign patterns");
    } else if (patterns.empty()) {
      throw DegenerateGroundState("no ground state has a definite sign on every site");
    }
    return patterns;
  }

  void require_readout() const {
    if (patterns_.empty()) throw DegenerateGroundState(degeneracy_reason_);
  }

  static void check_beta(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and >= 0");
  }

  ProblemInstance instance_;
  StateIndexer indexer_;
  std::vector<double> energies_;
  std::vector<double> log_multiplicity_;
  double min_energy_ = 0.0;
  std::vector<std::size_t> minimizers_;
  std::set<std::vector<int>> patterns_;
  std::vector<char> success_;
  std::string degeneracy_reason_;
};

inline EquilibriumStats equilibrium_stats(const ProblemInstance& instance, double beta, Statistics kind,
                                          std::size_t limit = kDefaultStateLimit) {
  return ExactEnsemble(instance, ReadoutRule::unique_pattern, limit).stats(beta, kind);
}

inline double error_probability(const ProblemInstance& instance, double beta, Statistics kind,
                                ReadoutRule rule = ReadoutRule::unique_pattern) {
  return ExactEnsemble(instance, rule).error_probability(beta, kind);
}

inline double beta_for_error(const ProblemInstance& instance, double target, Statistics kind,
                             ReadoutRule rule = ReadoutRule::unique_pattern) {
  return ExactEnsemble(instance, rule).beta_for_error(target, kind);
}

inline GroundSearchResult ground_search(const ProblemInstance& instance, std::size_t limit = kDefaultStateLimit) {
  return ExactEnsemble(instance, ReadoutRule::any_pattern, limit).ground_search();
}

}  // namespace bosim
