#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bosim {

// Up-spin occupation per site: k[i] in [0, N] counts the sigma=+1 bosons on
// site i. The site spin is S_i = 2 k_i - N.
using OccupationState = std::vector<int>;

inline int site_spin(int bosons, int up_count) { return 2 * up_count - bosons; }

// An Ising problem lifted to N bosons per site:
//
//   E(k) = sum_{i<j} J_ij S_i S_j + lambda * N * sum_i S_i,   S_i = 2 k_i - N.
//
// J is stored densely (row-major) and must be symmetric with a zero diagonal.
class ProblemInstance {
 public:
  ProblemInstance(int sites, int bosons, std::vector<double> couplings, double field)
      : sites_(sites), bosons_(bosons), couplings_(std::move(couplings)), field_(field) {
    if (sites_ < 1) throw InvalidArgument("site count must be >= 1");
    if (bosons_ < 1) throw InvalidArgument("boson count must be >= 1");
    if (couplings_.size() != static_cast<std::size_t>(sites_) * sites_)
      throw InvalidArgument("coupling matrix must be M x M");
    if (!std::isfinite(field_)) throw InvalidArgument("field must be finite");
    for (int i = 0; i < sites_; ++i) {
      if (coupling(i, i) != 0.0) throw InvalidArgument("coupling diagonal must be zero");
      for (int j = 0; j < sites_; ++j) {
        if (!std::isfinite(coupling(i, j))) throw InvalidArgument("couplings must be finite");
        if (coupling(i, j) != coupling(j, i))
          throw InvalidArgument("coupling matrix must be symmetric (J[" + std::to_string(i) +
                                "][" + std::to_string(j) + "])");
      }
    }
  }

  int sites() const noexcept { return sites_; }
  int bosons() const noexcept { return bosons_; }
  double field() const noexcept { return field_; }
  double coupling(int i, int j) const { return couplings_[static_cast<std::size_t>(i) * sites_ + j]; }
  std::span<const double> couplings() const noexcept { return couplings_; }

  // Same couplings and field, different boson number.
  ProblemInstance with_bosons(int bosons) const {
    return ProblemInstance(sites_, bosons, couplings_, field_);
  }

  bool operator==(const ProblemInstance&) const = default;

 private:
  int sites_;
  int bosons_;
  std::vector<double> couplings_;
  double field_;
};

inline void validate_state(const ProblemInstance& instance, std::span<const int> state) {
  if (state.size() != static_cast<std::size_t>(instance.sites()))
    throw InvalidArgument("state has " + std::to_string(state.size()) + " sites, instance has " +
                          std::to_string(instance.sites()));
  for (int k : state)
    if (k < 0 || k > instance.bosons())
      throw InvalidArgument("occupation " + std::to_string(k) + " outside [0, N]");
}

inline double energy(const ProblemInstance& instance, std::span<const int> state) {
  validate_state(instance, state);
  const int n = instance.bosons();
  double pair = 0.0;
  double total_spin = 0.0;
  for (int i = 0; i < instance.sites(); ++i) {
    const double si = site_spin(n, state[i]);
    total_spin += si;
    for (int j = i + 1; j < instance.sites(); ++j) pair += instance.coupling(i, j) * si * site_spin(n, state[j]);
  }
  return pair + instance.field() * n * total_spin;
}

// h_i = lambda N + sum_{j != i} J_ij S_j. Changing k_i by dk changes the
// energy by exactly 2 dk h_i.
inline double local_field(const ProblemInstance& instance, std::span<const int> state, int site) {
  validate_state(instance, state);
  if (site < 0 || site >= instance.sites()) throw InvalidArgument("site index out of range");
  const int n = instance.bosons();
  double h = instance.field() * n;
  for (int j = 0; j < instance.sites(); ++j)
    if (j != site) h += instance.coupling(site, j) * site_spin(n, state[j]);
  return h;
}

// One site, N bosons, two levels separated by `gap` per particle.
inline ProblemInstance two_level_instance(int bosons, double gap) {
  if (!(gap > 0.0)) throw InvalidArgument("level gap must be positive");
  if (bosons < 1) throw InvalidArgument("boson count must be >= 1");
  return ProblemInstance(1, bosons, {0.0}, gap / (2.0 * bosons));
}

// All-to-all coupling J on M sites with uniform field.
inline ProblemInstance complete_graph_instance(int sites, int bosons, double coupling, double field) {
  std::vector<double> j(static_cast<std::size_t>(sites) * sites, coupling);
  for (int i = 0; i < sites; ++i) j[static_cast<std::size_t>(i) * sites + i] = 0.0;
  return ProblemInstance(sites, bosons, std::move(j), field);
}

// Two sites with H = -J S_1 S_2 - lambda N (S_1 + S_2), i.e. stored coupling
// -J and stored field -lambda.
inline ProblemInstance ferromagnetic_pair_instance(int bosons, double ferro_coupling, double bias) {
  return ProblemInstance(2, bosons, {0.0, -ferro_coupling, -ferro_coupling, 0.0}, -bias);
}

}  // namespace bosim
