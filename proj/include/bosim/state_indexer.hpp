#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "errors.hpp"
#include "problem.hpp"

namespace bosim {

inline constexpr std::size_t kDefaultStateLimit = 10'000'000;

// Mixed-radix bijection between occupation vectors and flat indices:
// index = sum_i k_i (N+1)^i. Site 0 is the fastest-varying digit.
class StateIndexer {
 public:
  StateIndexer(int sites, int bosons, std::size_t limit = kDefaultStateLimit)
      : sites_(sites), bosons_(bosons) {
    if (sites < 1 || bosons < 1) throw InvalidArgument("StateIndexer needs M >= 1 and N >= 1");
    std::size_t count = 1;
    for (int i = 0; i < sites; ++i) {
      if (count > limit / static_cast<std::size_t>(bosons + 1))
        throw StateSpaceTooLarge("(N+1)^M exceeds the state-count guard of " + std::to_string(limit));
      count *= static_cast<std::size_t>(bosons + 1);
    }
    if (count > limit)
      throw StateSpaceTooLarge("(N+1)^M exceeds the state-count guard of " + std::to_string(limit));
    size_ = count;
  }

  explicit StateIndexer(const ProblemInstance& instance, std::size_t limit = kDefaultStateLimit)
      : StateIndexer(instance.sites(), instance.bosons(), limit) {}

  int sites() const noexcept { return sites_; }
  int bosons() const noexcept { return bosons_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t radix() const noexcept { return static_cast<std::size_t>(bosons_) + 1; }

  std::size_t encode(std::span<const int> state) const {
    if (state.size() != static_cast<std::size_t>(sites_)) throw InvalidArgument("state length mismatch");
    std::size_t index = 0;
    for (int i = sites_ - 1; i >= 0; --i) {
      if (state[i] < 0 || state[i] > bosons_) throw InvalidArgument("occupation outside [0, N]");
      index = index * radix() + static_cast<std::size_t>(state[i]);
    }
    return index;
  }

  void decode(std::size_t index, std::span<int> out) const {
    if (index >= size_) throw InvalidArgument("state index out of range");
    if (out.size() != static_cast<std::size_t>(sites_)) throw InvalidArgument("state length mismatch");
    for (int i = 0; i < sites_; ++i) {
      out[i] = static_cast<int>(index % radix());
      index /= radix();
    }
  }

  OccupationState decode(std::size_t index) const {
    OccupationState state(static_cast<std::size_t>(sites_));
    decode(index, state);
    return state;
  }

  // Place value of site i, so that changing k_i by dk moves the index by
  // dk * stride(i).
  std::size_t stride(int site) const {
    std::size_t s = 1;
    for (int i = 0; i < site; ++i) s *= radix();
    return s;
  }

 private:
  int sites_;
  int bosons_;
  std::size_t size_ = 0;
};

// Visits every state in index order, reusing one buffer. fn(index, state).
template <typename Fn>
void for_each_state(const StateIndexer& indexer, Fn&& fn) {
  OccupationState state(static_cast<std::size_t>(indexer.sites()), 0);
  for (std::size_t index = 0; index < indexer.size(); ++index) {
    fn(index, std::as_const(state));
    for (int i = 0; i < indexer.sites(); ++i) {
      if (++state[i] <= indexer.bosons()) break;
      state[i] = 0;
    }
  }
}

}  // namespace bosim
