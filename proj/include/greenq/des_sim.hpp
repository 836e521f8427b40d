#pragma once

// Event-driven simulation of the make-to-stock queue. The simulator tracks
// the number of outstanding replenishment orders N (a single-server FIFO
// queue) and derives inventory (s - N)^+ and backlog (N - s)^+ from it.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace greenq {

struct DistSpec {
  enum class Kind { exponential, hyperexp2, truncated_normal };

  Kind kind = Kind::exponential;
  double rate = 1.0;   // exponential
  double prob = 0.5;   // hyperexp2: probability of phase 1
  double rate1 = 1.0;  // hyperexp2
  double rate2 = 1.0;  // hyperexp2
  double mean = 1.0;   // truncated_normal: mean of the parent normal
  double cv = 0.5;     // truncated_normal: sd / mean of the parent normal
  double floor = 1e-6; // truncated_normal: samples below are redrawn

  static DistSpec exponential(double rate);
  static DistSpec hyperexp2(double prob, double rate1, double rate2);
  static DistSpec truncated_normal(double mean, double cv, double floor);
  // Truncated normal with floor = 1e-6 x mean whose *truncated* mean equals
  // `mean`; the family is a scale family so the parent mean is a fixed
  // multiple of it.
  static DistSpec truncated_normal_with_mean(double mean, double cv);

  void validate() const;
  double sample(std::mt19937_64& rng) const;
  // Exact moments of the distribution as sampled (after truncation).
  double expected() const;
  double scv() const;  // squared coefficient of variation
};

struct SimConfig {
  DistSpec arrival = DistSpec::exponential(1.0);
  DistSpec service = DistSpec::exponential(2.0);
  int base_stock = 0;
  std::uint64_t horizon = 2'000'000;  // total events, warmup included
  std::uint64_t warmup = 200'000;
  std::uint64_t seed = 1;
  int batches = 20;
};

struct SimStats {
  double mean_outstanding = 0.0;  // time average of N
  double mean_waiting = 0.0;      // time average of (N - 1)^+
  double mean_inventory = 0.0;    // time average of (s - N)^+
  double mean_backlog = 0.0;      // time average of (N - s)^+
  std::vector<double> pdf;        // fraction of time with N = j
  double ci_halfwidth = 0.0;      // 95% half-width for mean_outstanding
  double stderr_inventory = 0.0;  // batch-means standard errors
  double stderr_backlog = 0.0;
  double stderr_outstanding = 0.0;
  double observed_time = 0.0;
  std::uint64_t events = 0;  // post-warmup events
  int replications = 1;
};

// Observer invoked after every event with the clock and the new N.
using SimObserver = std::function<void(double time, long outstanding)>;

inline constexpr std::uint64_t kMaxUnstableHorizon = 100'000'000;

// Runs one replication. Deterministic for a fixed config. An unstable
// configuration logs a warning to stderr; with a horizon above
// kMaxUnstableHorizon it is refused with DomainError.
SimStats simulate(const SimConfig& config, const SimObserver& observer = {});

// Sup-distance between the empirical pmf of N and (1 - rho) rho^j. Throws
// DomainError for an empty run.
double empirical_pdf_compare(const SimStats& stats, double rho);

// Replication r runs with seed config.seed + r. Results are pooled in
// replication order, so the report does not depend on `threads`.
SimStats replicate(const SimConfig& config, int n_reps, int threads = 1);

}  // namespace greenq
