#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "log_math.hpp"
#include "problem.hpp"

namespace bosim {

// Rate constants of the bosonic Glauber dynamics.
struct DynamicsParams {
  double alpha = 1.0;   // overall rate constant (1/time)
  double xi = 0.001;    // suppression per extra boson moved in one transition
  double beta = 0.0;    // inverse temperature; +inf is allowed for T = 0 generators
  int delta_k_max = 0;  // largest |dk| considered; 0 means N

  int max_jump(int bosons) const { return delta_k_max == 0 ? bosons : delta_k_max; }

  void validate(int bosons) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
    if (!(xi > 0.0 && xi <= 1.0)) throw InvalidArgument("xi must lie in (0, 1]");
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
    if (delta_k_max < 0 || max_jump(bosons) > bosons) throw InvalidArgument("delta_k_max must lie in [1, N]");
  }
};

struct TransitionWeight {
  int site = 0;
  int delta_k = 0;
  double log_rate = kNegInf;
};

// ln(1 + gamma) with gamma = tanh(-dk * beta * h). Written as
// ln 2 - softplus(2 dk beta h) so that it neither overflows at large beta nor
// produces NaN at beta = inf when h = 0.
inline double log_thermal_factor(int delta_k, double beta, double field) {
  const double drive = delta_k * field;
  if (drive == 0.0 || beta == 0.0) return 0.0;
  return std::log(2.0) - softplus(2.0 * beta * drive);
}

inline double glauber_gamma(int delta_k, double beta, double field) {
  const double drive = delta_k * field;
  if (drive == 0.0 || beta == 0.0) return 0.0;
  return std::tanh(-beta * drive);
}

inline double glauber_gamma(const ProblemInstance& instance, std::span<const int> state, int site, int delta_k,
                            double beta) {
  return glauber_gamma(delta_k, beta, local_field(instance, state, site));
}

inline void check_transition(int bosons, int k, int delta_k) {
  if (delta_k == 0) throw InvalidArgument("delta_k must be nonzero");
  if (k < 0 || k > bosons || k + delta_k < 0 || k + delta_k > bosons)
    throw InvalidArgument("transition k=" + std::to_string(k) + " dk=" + std::to_string(delta_k) +
                          " leaves [0, " + std::to_string(bosons) + "]");
}

// ln F(k, dk): the bosonic final-state stimulation factor
//   dk > 0:  prod_{m=1}^{dk}   (k + m)(N - k - dk + m)
//   dk < 0:  prod_{m=1}^{|dk|} (k - |dk| + m)(N - k + m)
inline double log_stimulation_factor(int bosons, int k, int delta_k) {
  check_transition(bosons, k, delta_k);
  const int steps = std::abs(delta_k);
  double sum = 0.0;
  for (int m = 1; m <= steps; ++m) {
    if (delta_k > 0)
      sum += std::log(static_cast<double>(k + m)) + std::log(static_cast<double>(bosons - k - delta_k + m));
    else
      sum += std::log(static_cast<double>(k - steps + m)) + std::log(static_cast<double>(bosons - k + m));
  }
  return sum;
}

// Temperature-independent part of ln w:
//   ln alpha + (|dk| - 1) ln xi - 2 ln((|dk| - 1)!) + ln F(k, dk).
inline double log_rate_prefactor(int bosons, int k, int delta_k, double alpha, double xi) {
  const int steps = std::abs(delta_k);
  return std::log(alpha) + (steps - 1) * std::log(xi) - 2.0 * std::lgamma(static_cast<double>(steps)) +
         log_stimulation_factor(bosons, k, delta_k);
}

// Prefactors for every (k, dk) pair of one boson number, so that samplers and
// generator assembly share a single evaluation path with
// transition_log_weight.
class RateKernel {
 public:
  RateKernel(int bosons, const DynamicsParams& params)
      : bosons_(bosons), max_jump_(params.max_jump(bosons)), span_(2 * bosons + 1) {
    params.validate(bosons);
    prefactor_.assign(static_cast<std::size_t>(bosons + 1) * span_, kNegInf);
    for (int k = 0; k <= bosons; ++k)
      for (int dk = -k; dk <= bosons - k; ++dk)
        if (dk != 0 && std::abs(dk) <= max_jump_) slot(k, dk) = log_rate_prefactor(bosons, k, dk, params.alpha, params.xi);
  }

  int bosons() const noexcept { return bosons_; }
  int max_jump() const noexcept { return max_jump_; }

  double prefactor(int k, int delta_k) const { return prefactor_[index(k, delta_k)]; }

  double log_weight(int k, int delta_k, double beta, double field) const {
    return log_thermal_factor(delta_k, beta, field) + prefactor(k, delta_k);
  }

 private:
  std::size_t index(int k, int delta_k) const {
    return static_cast<std::size_t>(k) * span_ + static_cast<std::size_t>(delta_k + bosons_);
  }
  double& slot(int k, int delta_k) { return prefactor_[index(k, delta_k)]; }

  int bosons_;
  int max_jump_;
  int span_;
  std::vector<double> prefactor_;
};

// ln w(k, dk e_i) = ln(1 + gamma_i(dk)) + ln alpha + (|dk|-1) ln xi
//                   - 2 ln((|dk|-1)!) + ln F(k_i, dk).
// -inf when the thermal factor vanishes (uphill moves at beta = inf).
inline double transition_log_weight(const ProblemInstance& instance, const DynamicsParams& params,
                                    std::span<const int> state, int site, int delta_k) {
  params.validate(instance.bosons());
  const double h = local_field(instance, state, site);
  check_transition(instance.bosons(), state[site], delta_k);
  if (std::abs(delta_k) > params.max_jump(instance.bosons()))
    throw InvalidArgument("|delta_k| exceeds delta_k_max");
  return log_thermal_factor(delta_k, params.beta, h) +
         log_rate_prefactor(instance.bosons(), state[site], delta_k, params.alpha, params.xi);
}

// Every transition out of `state`: sites in order, dk ascending, dk = 0 and
// |dk| > delta_k_max skipped.
inline std::vector<TransitionWeight> rate_table(const ProblemInstance& instance, const DynamicsParams& params,
                                                std::span<const int> state) {
  params.validate(instance.bosons());
  validate_state(instance, state);
  const int n = instance.bosons();
  const int jump = params.max_jump(n);
  std::vector<TransitionWeight> table;
  for (int i = 0; i < instance.sites(); ++i) {
    const double h = local_field(instance, state, i);
    const int k = state[i];
    for (int dk = -std::min(k, jump); dk <= std::min(n - k, jump); ++dk) {
      if (dk == 0) continue;
      table.push_back({i, dk,
                       log_thermal_factor(dk, params.beta, h) + log_rate_prefactor(n, k, dk, params.alpha, params.xi)});
    }
  }
  return table;
}

}  // namespace bosim
