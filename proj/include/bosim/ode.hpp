#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace bosim {

struct OdeTolerances {
  double rtol = 1e-8;
  double atol = 1e-12;
  std::size_t max_steps = 100'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

namespace detail {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*, the embedded 4th-order error weights
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

// Adaptive explicit Runge-Kutta (Dormand-Prince 5(4), FSAL) from t = t0 to
// each of `output_times` in turn. Steps are clipped to land on the output
// times exactly. rhs(t, y, dydt) must fill dydt (already sized). Returns the
// state at every output time.
template <typename T, typename Rhs>
std::vector<std::vector<T>> integrate_adaptive(Rhs&& rhs, std::vector<T> y, double t0,
                                               std::span<const double> output_times,
                                               const OdeTolerances& tol = {}, OdeStats* stats = nullptr) {
  using DP = detail::DormandPrince;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    if (output_times[i] < t0 || (i > 0 && output_times[i] < output_times[i - 1]))
      throw InvalidArgument("output times must be non-decreasing and >= t0");
  }

  std::vector<T> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n);
  OdeStats local;
  OdeStats& st = stats ? *stats : local;

  double t = t0;
  rhs(t, y, k1);
  ++st.rhs_evaluations;

  // Initial step from the size of the derivative (Hairer, Norsett & Wanner).
  double h = 0.0;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = tol.atol + tol.rtol * detail::magnitude(y[i]);
      d0 += std::pow(detail::magnitude(y[i]) / scale, 2);
      d1 += std::pow(detail::magnitude(k1[i]) / scale, 2);
    }
    d0 = std::sqrt(d0 / std::max<std::size_t>(n, 1));
    d1 = std::sqrt(d1 / std::max<std::size_t>(n, 1));
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }

  std::vector<std::vector<T>> outputs;
  outputs.reserve(output_times.size());
  for (double target : output_times) {
    while (t < target) {
      if (st.accepted + st.rejected >= tol.max_steps) throw NotConverged("ODE step budget exhausted");
      const bool last = h >= target - t;
      const double step = last ? target - t : h;
      if (step <= 1e-15 * std::max(1.0, std::abs(t))) throw NotConverged("ODE step size underflow");

      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (DP::a21 * k1[i]);
      rhs(t + DP::c2 * step, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (DP::a31 * k1[i] + DP::a32 * k2[i]);
      rhs(t + DP::c3 * step, tmp, k3);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i]);
      rhs(t + DP::c4 * step, tmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] + DP::a54 * k4[i]);
      rhs(t + DP::c5 * step, tmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + step * (DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] + DP::a64 * k4[i] +
                                DP::a65 * k5[i]);
      rhs(t + step, tmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        y_new[i] = y[i] + step * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] + DP::b5 * k5[i] +
                                  DP::b6 * k6[i]);
      rhs(t + step, y_new, k7);
      st.rhs_evaluations += 6;

      const double err = [&] {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const T e = step * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] +
                              DP::e6 * k6[i] + DP::e7 * k7[i]);
          const double scale =
              tol.atol + tol.rtol * std::max(detail::magnitude(y[i]), detail::magnitude(y_new[i]));
          const double r = detail::magnitude(e) / scale;
          sum += r * r;
        }
        return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
      }();

      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        t = last ? target : t + step;
        y.swap(y_new);
        k1.swap(k7);
        ++st.accepted;
        // Do not let a short landing step shrink the next regular step.
        h = last ? std::max(h, step * factor) : step * factor;
      } else {
        ++st.rejected;
        h = step * std::max(0.2, factor);
      }
    }
    outputs.push_back(y);
  }
  return outputs;
}

}  // namespace bosim
