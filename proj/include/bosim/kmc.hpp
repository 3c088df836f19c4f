#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "equilibrium.hpp"
#include "errors.hpp"
#include "log_math.hpp"
#include "problem.hpp"
#include "rates.hpp"
#include "rng.hpp"

namespace bosim {

// Temperature protocol, applied as n_slices piecewise-constant pieces.
struct AnnealingSchedule {
  enum class Kind { constant, exponential };

  Kind kind = Kind::constant;
  double initial_temperature = std::numeric_limits<double>::infinity();
  double tau0 = 0.0;
  double t_end = 0.0;
  int n_slices = 400;

  static AnnealingSchedule constant(double temperature, double t_end) {
    AnnealingSchedule s;
    s.kind = Kind::constant;
    s.initial_temperature = temperature;
    s.t_end = t_end;
    s.n_slices = 1;
    s.validate();
    return s;
  }

  static AnnealingSchedule exponential(double initial_temperature, double tau0, int n_slices = 400) {
    AnnealingSchedule s;
    s.kind = Kind::exponential;
    s.initial_temperature = initial_temperature;
    s.tau0 = tau0;
    s.t_end = 4.0 * tau0;
    s.n_slices = n_slices;
    s.validate();
    return s;
  }

  void validate() const {
    if (!(initial_temperature > 0.0)) throw InvalidArgument("initial temperature must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be finite and >= 0");
    if (n_slices < 1) throw InvalidArgument("n_slices must be >= 1");
    if (kind == Kind::exponential) {
      if (!(tau0 > 0.0)) throw InvalidArgument("tau0 must be positive");
      if (!std::isfinite(initial_temperature))
        throw InvalidArgument("exponential schedule needs a finite initial temperature");
    }
  }

  double temperature_at(double t) const {
    return kind == Kind::constant ? initial_temperature : initial_temperature * std::exp(-t / tau0);
  }

  int slice_count() const { return kind == Kind::constant ? 1 : n_slices; }

  double slice_end(int slice) const {
    if (slice + 1 >= slice_count()) return t_end;
    return t_end * static_cast<double>(slice + 1) / slice_count();
  }

  // Temperature held during a slice: the value at the slice midpoint.
  double slice_beta(int slice) const {
    const double start = slice == 0 ? 0.0 : slice_end(slice - 1);
    const double temperature = temperature_at(0.5 * (start + slice_end(slice)));
    return std::isinf(temperature) ? 0.0 : 1.0 / temperature;
  }
};

enum class InitMode {
  half,       // k_i = floor(N/2) on every site
  uniform,    // each k_i uniform on [0, N]; the bosonic T = infinity law
  boltzmann,  // exact bosonic equilibrium at the schedule's initial temperature
};

inline OccupationState sample_initial_state(const ProblemInstance& instance, InitMode mode, Rng& rng) {
  OccupationState state(static_cast<std::size_t>(instance.sites()));
  switch (mode) {
    case InitMode::half:
      std::fill(state.begin(), state.end(), instance.bosons() / 2);
      break;
    case InitMode::uniform:
      for (int& k : state) k = static_cast<int>(rng.below(static_cast<std::uint64_t>(instance.bosons()) + 1));
      break;
    case InitMode::boltzmann:
      throw InvalidArgument("boltzmann initial states need an InitialStateSampler");
  }
  return state;
}

// Draws initial states; for InitMode::boltzmann it holds the cumulative
// equilibrium distribution of the whole state space.
class InitialStateSampler {
 public:
  InitialStateSampler(const ProblemInstance& instance, InitMode mode, double beta = 0.0,
                      const ExactEnsemble* ensemble = nullptr)
      : instance_(instance), mode_(mode) {
    if (mode != InitMode::boltzmann) return;
    std::optional<ExactEnsemble> owned;
    if (ensemble == nullptr) ensemble = &owned.emplace(instance, ReadoutRule::any_pattern);
    indexer_.emplace(ensemble->indexer());
    const auto p = ensemble->boltzmann(beta);
    cumulative_.resize(p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) cumulative_[i] = (sum += p[i]);
  }

  OccupationState operator()(Rng& rng) const {
    if (mode_ != InitMode::boltzmann) return sample_initial_state(instance_, mode_, rng);
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return indexer_->decode(static_cast<std::size_t>(it - cumulative_.begin()));
  }

 private:
  ProblemInstance instance_;
  InitMode mode_;
  std::optional<StateIndexer> indexer_;
  std::vector<double> cumulative_;
};

struct KmcEvent {
  double time = 0.0;
  int site = 0;
  int delta_k = 0;

  bool operator==(const KmcEvent&) const = default;
};

struct KmcStep {
  double dt = 0.0;
  int site = 0;
  int delta_k = 0;
};

// Gillespie direct-method sampler over the bosonic transition rates. Keeps
// the local fields h_j current (O(M) per event) and refreshes every channel
// rate after each event (O(M * delta_k_max)).
class KmcSampler {
 public:
  KmcSampler(const ProblemInstance& instance, const DynamicsParams& params)
      : instance_(instance), kernel_(instance.bosons(), params), beta_(params.beta) {}

  void reset(OccupationState state) {
    validate_state(instance_, state);
    state_ = std::move(state);
    fields_.resize(state_.size());
    for (int i = 0; i < instance_.sites(); ++i) fields_[i] = local_field(instance_, state_, i);
    stale_ = true;
  }

  void set_beta(double beta) {
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
    if (beta != beta_) stale_ = true;
    beta_ = beta;
  }

  double beta() const noexcept { return beta_; }
  const OccupationState& state() const noexcept { return state_; }

  // ln of the total escape rate from the current state.
  double log_total_rate() {
    refresh();
    return log_total_;
  }

  // Current channels with their log rates, in rate_table order.
  std::vector<TransitionWeight> channels() {
    refresh();
    return channels_;
  }

  // Draws the waiting time and the channel but does not apply the move.
  KmcStep sample(Rng& rng) {
    refresh();
    if (log_total_ == kNegInf) throw InvalidArgument("total rate is zero: absorbing state");
    const double total = std::exp(log_total_);
    KmcStep step;
    step.dt = -std::log(rng.uniform_open_closed()) / total;
    // Channel weights relative to the largest one: exp(log_rate - max).
    const double u = rng.uniform() * scaled_sum_;
    double acc = 0.0;
    std::size_t chosen = channels_.size() - 1;
    for (std::size_t c = 0; c < channels_.size(); ++c) {
      acc += scaled_[c];
      if (u < acc) {
        chosen = c;
        break;
      }
    }
    while (scaled_[chosen] == 0.0) --chosen;  // never land on a zero-rate channel through rounding
    step.site = channels_[chosen].site;
    step.delta_k = channels_[chosen].delta_k;
    return step;
  }

  void apply(int site, int delta_k) {
    check_transition(instance_.bosons(), state_[site], delta_k);
    state_[site] += delta_k;
    const double spin_change = 2.0 * delta_k;
    for (int j = 0; j < instance_.sites(); ++j)
      if (j != site) fields_[j] += instance_.coupling(j, site) * spin_change;
    stale_ = true;
  }

  KmcStep step(Rng& rng) {
    const KmcStep s = sample(rng);
    apply(s.site, s.delta_k);
    return s;
  }

 private:
  void refresh() {
    if (!stale_) return;
    const int n = instance_.bosons();
    const int jump = kernel_.max_jump();
    channels_.clear();
    double max_log = kNegInf;
    for (int i = 0; i < instance_.sites(); ++i) {
      const int k = state_[i];
      for (int dk = -std::min(k, jump); dk <= std::min(n - k, jump); ++dk) {
        if (dk == 0) continue;
        const double lw = kernel_.log_weight(k, dk, beta_, fields_[i]);
        channels_.push_back({i, dk, lw});
        max_log = std::max(max_log, lw);
      }
    }
    scaled_.resize(channels_.size());
    scaled_sum_ = 0.0;
    if (max_log == kNegInf) {
      std::fill(scaled_.begin(), scaled_.end(), 0.0);
      log_total_ = kNegInf;
    } else {
      for (std::size_t c = 0; c < channels_.size(); ++c) scaled_sum_ += (scaled_[c] = std::exp(channels_[c].log_rate - max_log));
      log_total_ = max_log + std::log(scaled_sum_);
    }
    stale_ = false;
  }

  ProblemInstance instance_;
  RateKernel kernel_;
  double beta_;
  OccupationState state_;
  std::vector<double> fields_;
  std::vector<TransitionWeight> channels_;
  std::vector<double> scaled_;
  double scaled_sum_ = 0.0;
  double log_total_ = kNegInf;
  bool stale_ = true;
};

// One Gillespie step from `state` (free-function form of KmcSampler).
inline KmcStep kmc_step(const ProblemInstance& instance, const DynamicsParams& params, OccupationState& state,
                        Rng& rng) {
  KmcSampler sampler(instance, params);
  sampler.reset(state);
  const KmcStep s = sampler.step(rng);
  state = sampler.state();
  return s;
}

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<KmcEvent> events;  // empty unless requested
  std::size_t event_count = 0;
  std::vector<OccupationState> sampled_states;  // one per output time
  OccupationState initial_state;
  OccupationState final_state;
  double final_energy = 0.0;

  bool operator==(const TrajectoryRecord&) const = default;
};

// Runs one trajectory through `schedule`. Within a slice the rates are
// constant; a waiting time that crosses the slice end is discarded, the clock
// moves to the boundary and a fresh time is drawn at the new temperature
// (exact for piecewise-constant rates by memorylessness).
inline TrajectoryRecord run_trajectory(const ProblemInstance& instance, const DynamicsParams& params,
                                       const AnnealingSchedule& schedule, const InitialStateSampler& init,
                                       std::span<const double> output_times, std::uint64_t seed,
                                       bool record_events = false) {
  schedule.validate();
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    if (output_times[i] < 0.0 || output_times[i] > schedule.t_end || (i > 0 && output_times[i] < output_times[i - 1]))
      throw InvalidArgument("output times must be sorted within [0, t_end]");
  }
  Rng rng(seed);
  TrajectoryRecord record;
  record.seed = seed;
  record.initial_state = init(rng);

  KmcSampler sampler(instance, params);
  sampler.reset(record.initial_state);

  std::size_t next_output = 0;
  auto emit_until = [&](double t_exclusive) {
    while (next_output < output_times.size() && output_times[next_output] < t_exclusive) {
      record.sampled_states.push_back(sampler.state());
      ++next_output;
    }
  };

  double t = 0.0;
  for (int slice = 0; slice < schedule.slice_count(); ++slice) {
    const double end = schedule.slice_end(slice);
    sampler.set_beta(schedule.slice_beta(slice));
    while (true) {
      if (sampler.log_total_rate() == kNegInf) break;  // frozen until the temperature changes
      const KmcStep s = sampler.sample(rng);
      if (t + s.dt >= end) break;
      t += s.dt;
      emit_until(t);
      sampler.apply(s.site, s.delta_k);
      ++record.event_count;
      if (record_events) record.events.push_back({t, s.site, s.delta_k});
    }
    t = end;
  }
  while (next_output < output_times.size()) {
    record.sampled_states.push_back(sampler.state());
    ++next_output;
  }
  record.final_state = sampler.state();
  record.final_energy = energy(instance, record.final_state);
  return record;
}

struct EnsembleOptions {
  std::size_t n_traj = 1000;
  std::uint64_t master_seed = 20100101;
  int threads = 1;
  InitMode init = InitMode::uniform;
  ReadoutRule rule = ReadoutRule::unique_pattern;
};

struct EnsembleSummary {
  std::size_t n_traj = 0;
  std::vector<double> times;
  std::vector<double> error;         // fraction of failed sign readouts at each time
  std::vector<double> error_stderr;  // binomial sqrt(e (1 - e) / n)
  std::vector<double> mean_energy;
  double min_energy = 0.0;
  double final_mean_energy = 0.0;
  double residual_energy = 0.0;  // final mean energy - E_min
  double residual_stderr = 0.0;
  std::vector<OccupationState> final_states;  // by trajectory index

  bool operator==(const EnsembleSummary&) const = default;
};

// Runs body(j) for j in [0, count) on `threads` workers. Callers write
// results into slot j, so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for_index(std::size_t count, int threads, Body&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t j = 0; j < count; ++j) body(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t j = next++; j < count; j = next++) body(j);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Independent trajectories with seeds stream_seed(master, j), merged by j.
inline EnsembleSummary ensemble_statistics(const ExactEnsemble& exact, const DynamicsParams& params,
                                           const AnnealingSchedule& schedule, std::span<const double> output_times,
                                           const EnsembleOptions& options) {
  if (options.n_traj == 0) throw InvalidArgument("ensemble needs at least one trajectory");
  const auto mask = exact.success_mask();
  if (mask.empty()) (void)exact.ground_sign_patterns();  // throws DegenerateGroundState

  const ProblemInstance& instance = exact.instance();
  const double init_beta = std::isinf(schedule.initial_temperature) ? 0.0 : 1.0 / schedule.initial_temperature;
  const InitialStateSampler init(instance, options.init, init_beta, &exact);

  const std::size_t n_out = output_times.size();
  std::vector<char> failed(options.n_traj * n_out);
  std::vector<double> energies(options.n_traj * n_out);
  std::vector<double> final_energy(options.n_traj);
  std::vector<OccupationState> final_states(options.n_traj);

  parallel_for_index(options.n_traj, options.threads, [&](std::size_t j) {
    const auto record = run_trajectory(instance, params, schedule, init, output_times,
                                       stream_seed(options.master_seed, j));
    for (std::size_t o = 0; o < n_out; ++o) {
      const std::size_t index = exact.indexer().encode(record.sampled_states[o]);
      failed[j * n_out + o] = mask[index] ? 0 : 1;
      energies[j * n_out + o] = exact.energies()[index];
    }
    final_energy[j] = record.final_energy;
    final_states[j] = record.final_state;
  });

  EnsembleSummary out;
  out.n_traj = options.n_traj;
  out.times.assign(output_times.begin(), output_times.end());
  out.min_energy = exact.min_energy();
  const double n = static_cast<double>(options.n_traj);
  for (std::size_t o = 0; o < n_out; ++o) {
    double fails = 0.0;
    double e_sum = 0.0;
    for (std::size_t j = 0; j < options.n_traj; ++j) {
      fails += failed[j * n_out + o];
      e_sum += energies[j * n_out + o];
    }
    const double e_hat = fails / n;
    out.error.push_back(e_hat);
    out.error_stderr.push_back(std::sqrt(e_hat * (1.0 - e_hat) / n));
    out.mean_energy.push_back(e_sum / n);
  }
  double mean = 0.0;
  for (double e : final_energy) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : final_energy) var += (e - mean) * (e - mean);
  var = options.n_traj > 1 ? var / (n - 1.0) : 0.0;
  out.final_mean_energy = mean;
  out.residual_energy = mean - exact.min_energy();
  out.residual_stderr = std::sqrt(var / n);
  out.final_states = std::move(final_states);
  return out;
}

inline EnsembleSummary ensemble_statistics(const ProblemInstance& instance, const DynamicsParams& params,
                                           const AnnealingSchedule& schedule, std::span<const double> output_times,
                                           const EnsembleOptions& options) {
  const ExactEnsemble exact(instance, options.rule);
  return ensemble_statistics(exact, params, schedule, output_times, options);
}

// First output index from which the estimated error stays within
// (1 + band) * target for `persistence` consecutive checkpoints.
inline std::optional<std::size_t> first_persistent_crossing(std::span<const double> error, double target,
                                                            double band = 0.05, std::size_t persistence = 3) {
  const double threshold = (1.0 + band) * target;
  for (std::size_t i = 0; i + persistence <= error.size(); ++i) {
    bool ok = true;
    for (std::size_t r = 0; r < persistence && ok; ++r) ok = error[i + r] <= threshold;
    if (ok) return i;
  }
  return std::nullopt;
}

struct KmcEquilibration {
  double tau = 0.0;
  double beta = 0.0;
  EnsembleSummary summary;
};

// Equilibration time at fixed equilibrium error: the temperature is chosen
// so that the equilibrium error equals target_error, trajectories start from
// the T = infinity law, and tau is the first checkpoint where the estimated
// error enters the (1 + band) * target band and stays there for three
// checkpoints.
inline KmcEquilibration equilibration_time_kmc(const ProblemInstance& instance, DynamicsParams params,
                                               double target_error, std::span<const double> output_times,
                                               EnsembleOptions options, double band = 0.05) {
  if (output_times.empty()) throw InvalidArgument("need output times");
  const ExactEnsemble exact(instance, options.rule);
  KmcEquilibration out;
  out.beta = exact.beta_for_error(target_error, Statistics::bosonic);
  params.beta = out.beta;
  options.init = InitMode::uniform;
  const auto schedule = AnnealingSchedule::constant(
      out.beta == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / out.beta, output_times.back());
  out.summary = ensemble_statistics(exact, params, schedule, output_times, options);
  const auto hit = first_persistent_crossing(out.summary.error, target_error, band);
  if (!hit) throw NotConverged("estimated error did not settle within the band before t_end");
  out.tau = output_times[*hit];
  return out;
}

struct AnnealOptions {
  double initial_error = 0.7;                    // sets T0 through beta_for_error
  std::optional<double> initial_temperature;     // overrides initial_error when set
  int n_slices = 400;
};

struct AnnealResult {
  double initial_temperature = 0.0;
  AnnealingSchedule schedule;
  EnsembleSummary summary;
};

// Exponential anneal T(t) = T0 exp(-t / tau0) over [0, 4 tau0], starting from
// the exact equilibrium at T0. summary.residual_energy is <E>_final - E_min.
inline AnnealResult anneal_ensemble(const ExactEnsemble& exact, const DynamicsParams& params, double tau0,
                                    EnsembleOptions options, const AnnealOptions& anneal = {}) {
  AnnealResult out;
  out.initial_temperature = anneal.initial_temperature
                                ? *anneal.initial_temperature
                                : 1.0 / exact.beta_for_error(anneal.initial_error, Statistics::bosonic);
  out.schedule = AnnealingSchedule::exponential(out.initial_temperature, tau0, anneal.n_slices);
  options.init = InitMode::boltzmann;
  const double times[] = {0.0, out.schedule.t_end};
  out.summary = ensemble_statistics(exact, params, out.schedule, times, options);
  return out;
}

inline AnnealResult anneal_ensemble(const ProblemInstance& instance, const DynamicsParams& params, double tau0,
                                    const EnsembleOptions& options, const AnnealOptions& anneal = {}) {
  const ExactEnsemble exact(instance, options.rule);
  return anneal_ensemble(exact, params, tau0, options, anneal);
}

}  // namespace bosim
