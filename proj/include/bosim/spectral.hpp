#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "master_equation.hpp"

namespace bosim {

// Exact propagator exp(Q t) for a constant-temperature generator that obeys
// detailed balance with respect to `log_stationary` (ln of the stationary
// distribution, any normalization). With D = diag(sqrt(pi)), D^-1 Q D is
// symmetric; its eigendecomposition U diag(lambda) U^T gives
//   p(t) = D U exp(lambda t) U^T D^-1 p0
// at any t without time stepping, which is what long equilibration times
// (1e5 / alpha and beyond) need.
class SpectralPropagator {
 public:
  SpectralPropagator(const MasterGenerator& generator, std::span<const double> log_stationary)
      : n_(generator.size()), half_log_pi_(n_) {
    if (log_stationary.size() != n_) throw InvalidArgument("stationary distribution size mismatch");
    const double top = *std::max_element(log_stationary.begin(), log_stationary.end());
    for (std::size_t a = 0; a < n_; ++a) {
      half_log_pi_[a] = 0.5 * (log_stationary[a] - top);
      if (half_log_pi_[a] < -300.0)
        throw InvalidArgument("stationary weights span more than e^600; spectral route is ill-conditioned");
    }

    // Column-major symmetric matrix S_ab = Q_ab sqrt(pi_b / pi_a).
    modes_.assign(n_ * n_, 0.0);
    for (std::size_t b = 0; b < n_; ++b) {
      modes_[b * n_ + b] = -generator.exit_rate(b);
      for (const auto& edge : generator.outgoing(b)) {
        const std::size_t a = edge.target;
        modes_[b * n_ + a] += 0.5 * edge.rate * std::exp(half_log_pi_[b] - half_log_pi_[a]);
        modes_[a * n_ + b] += 0.5 * edge.rate * std::exp(half_log_pi_[b] - half_log_pi_[a]);
      }
    }
    eigenvalues_.resize(n_);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n_), modes_.data(),
                                           static_cast<lapack_int>(n_), eigenvalues_.data());
    if (info != 0) throw NotConverged("symmetric eigensolver failed (info=" + std::to_string(info) + ")");
  }

  std::size_t size() const noexcept { return n_; }

  // Ascending; the largest is 0 up to rounding.
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }

  // Slowest relaxation time -1/lambda_2.
  double relaxation_time() const { return n_ < 2 ? 0.0 : -1.0 / eigenvalues_[n_ - 2]; }

  std::vector<double> propagate(std::span<const double> p0, double t) const {
    const auto c = mode_coefficients(p0);
    std::vector<double> p(n_, 0.0);
    for (std::size_t m = 0; m < n_; ++m) {
      const double w = c[m] * decay(m, t);
      if (w == 0.0) continue;
      const double* u = &modes_[m * n_];
      for (std::size_t a = 0; a < n_; ++a) p[a] += w * u[a];
    }
    for (std::size_t a = 0; a < n_; ++a) p[a] *= std::exp(half_log_pi_[a]);
    return p;
  }

  // <f>(t) = sum_a f_a p_a(t) from a fixed p0, reduced to one weight per mode
  // so each evaluation is O(n).
  class Expectation {
   public:
    double at(double t) const {
      double sum = 0.0;
      for (std::size_t m = 0; m < weights_.size(); ++m) sum += weights_[m] * owner_->decay(m, t);
      return sum;
    }

   private:
    friend class SpectralPropagator;
    const SpectralPropagator* owner_ = nullptr;
    std::vector<double> weights_;
  };

  Expectation expectation(std::span<const double> observable, std::span<const double> p0) const {
    if (observable.size() != n_) throw InvalidArgument("observable size mismatch");
    const auto c = mode_coefficients(p0);
    Expectation out;
    out.owner_ = this;
    out.weights_.assign(n_, 0.0);
    std::vector<double> fd(n_);
    for (std::size_t a = 0; a < n_; ++a) fd[a] = observable[a] * std::exp(half_log_pi_[a]);
    for (std::size_t m = 0; m < n_; ++m) {
      const double* u = &modes_[m * n_];
      double dot = 0.0;
      for (std::size_t a = 0; a < n_; ++a) dot += fd[a] * u[a];
      out.weights_[m] = dot * c[m];
    }
    return out;
  }

 private:
  std::vector<double> mode_coefficients(std::span<const double> p0) const {
    if (p0.size() != n_) throw InvalidArgument("distribution size mismatch");
    std::vector<double> scaled(n_);
    for (std::size_t a = 0; a < n_; ++a) scaled[a] = p0[a] * std::exp(-half_log_pi_[a]);
    std::vector<double> c(n_, 0.0);
    for (std::size_t m = 0; m < n_; ++m) {
      const double* u = &modes_[m * n_];
      double dot = 0.0;
      for (std::size_t a = 0; a < n_; ++a) dot += u[a] * scaled[a];
      c[m] = dot;
    }
    return c;
  }

  // The stationary mode is pinned to exactly 1 so rounding in its eigenvalue
  // cannot leak probability at very long times.
  double decay(std::size_t m, double t) const {
    if (m + 1 == n_) return 1.0;
    return std::exp(std::min(eigenvalues_[m], 0.0) * t);
  }

  std::size_t n_;
  std::vector<double> half_log_pi_;
  std::vector<double> modes_;  // eigenvectors, column-major
  std::vector<double> eigenvalues_;
};

}  // namespace bosim
