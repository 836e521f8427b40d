#include "greenq/des_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "greenq/errors.hpp"

namespace greenq {

namespace {

// Seeds are passed through splitmix64 so that consecutive replication seeds
// give unrelated generator states.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double std_normal_upper(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

struct TruncMoments {
  double mean;
  double var;
};

TruncMoments truncated_moments(double mean, double cv, double floor) {
  const double sd = cv * mean;
  const double a = (floor - mean) / sd;
  const double hazard = std_normal_pdf(a) / std_normal_upper(a);
  return {mean + sd * hazard, sd * sd * (1.0 + a * hazard - hazard * hazard)};
}

double t_quantile(int dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.975);
}

struct Batch {
  double time = 0.0;
  double outstanding = 0.0;
  double inventory = 0.0;
  double backlog = 0.0;
};

double stderr_of(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

DistSpec DistSpec::exponential(double rate) {
  DistSpec d;
  d.kind = Kind::exponential;
  d.rate = rate;
  return d;
}

DistSpec DistSpec::hyperexp2(double prob, double rate1, double rate2) {
  DistSpec d;
  d.kind = Kind::hyperexp2;
  d.prob = prob;
  d.rate1 = rate1;
  d.rate2 = rate2;
  return d;
}

DistSpec DistSpec::truncated_normal(double mean, double cv, double floor) {
  DistSpec d;
  d.kind = Kind::truncated_normal;
  d.mean = mean;
  d.cv = cv;
  d.floor = floor;
  return d;
}

DistSpec DistSpec::truncated_normal_with_mean(double mean, double cv) {
  if (!(mean > 0.0)) throw DomainError("mean must be > 0");
  if (!(cv > 0.0)) throw DomainError("cv must be > 0");
  const double ratio = truncated_moments(1.0, cv, 1e-6).mean;
  const double parent = mean / ratio;
  return truncated_normal(parent, cv, 1e-6 * parent);
}

void DistSpec::validate() const {
  switch (kind) {
    case Kind::exponential:
      if (!(rate > 0.0)) throw DomainError("exponential rate must be > 0");
      break;
    case Kind::hyperexp2:
      if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("hyperexponential prob must lie in [0, 1]");
      if (!(rate1 > 0.0 && rate2 > 0.0)) throw DomainError("hyperexponential rates must be > 0");
      break;
    case Kind::truncated_normal:
      if (!(mean > 0.0)) throw DomainError("truncated normal mean must be > 0");
      if (!(cv > 0.0)) throw DomainError("truncated normal cv must be > 0");
      if (!(floor > 0.0)) throw DomainError("truncated normal floor must be > 0");
      break;
  }
}

double DistSpec::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::exponential:
      return std::exponential_distribution<double>(rate)(rng);
    case Kind::hyperexp2: {
      const bool first = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < prob;
      return std::exponential_distribution<double>(first ? rate1 : rate2)(rng);
    }
    case Kind::truncated_normal: {
      std::normal_distribution<double> normal(mean, cv * mean);
      double x = normal(rng);
      while (x < floor) x = normal(rng);
      return x;
    }
  }
  return 0.0;
}

double DistSpec::expected() const {
  switch (kind) {
    case Kind::exponential: return 1.0 / rate;
    case Kind::hyperexp2: return prob / rate1 + (1.0 - prob) / rate2;
    case Kind::truncated_normal: return truncated_moments(mean, cv, floor).mean;
  }
  return 0.0;
}

double DistSpec::scv() const {
  switch (kind) {
    case Kind::exponential: return 1.0;
    case Kind::hyperexp2: {
      const double m1 = expected();
      const double m2 = 2.0 * prob / (rate1 * rate1) + 2.0 * (1.0 - prob) / (rate2 * rate2);
      return (m2 - m1 * m1) / (m1 * m1);
    }
    case Kind::truncated_normal: {
      const auto m = truncated_moments(mean, cv, floor);
      return m.var / (m.mean * m.mean);
    }
  }
  return 0.0;
}

SimStats simulate(const SimConfig& config, const SimObserver& observer) {
  config.arrival.validate();
  config.service.validate();
  if (config.base_stock < 0) throw DomainError("base stock must be >= 0");
  if (!(config.horizon > config.warmup)) throw DomainError("horizon must exceed warmup");
  if (config.batches < 2) throw DomainError("need at least two batches");
  const std::uint64_t observed = config.horizon - config.warmup;
  if (observed < static_cast<std::uint64_t>(config.batches))
    throw DomainError("fewer observed events than batches");

  const double load = config.service.expected() / config.arrival.expected();
  if (load >= 1.0) {
    if (config.horizon > kMaxUnstableHorizon)
      throw DomainError("unstable queue: refusing a horizon beyond 1e8 events");
    std::cerr << "warning: unstable queue (load " << load << "), averages will not settle\n";
  }

  std::mt19937_64 rng(splitmix64(config.seed));
  const double inf = std::numeric_limits<double>::infinity();
  const long s = config.base_stock;

  double clock = 0.0;
  long n = 0;
  double next_arrival = config.arrival.sample(rng);
  double next_departure = inf;

  std::vector<Batch> batches(config.batches);
  std::vector<double> occupancy;
  double waiting_area = 0.0;
  const std::uint64_t per_batch = observed / config.batches;

  for (std::uint64_t e = 1; e <= config.horizon; ++e) {
    const bool arrival = next_arrival <= next_departure;
    const double t = arrival ? next_arrival : next_departure;

    if (e > config.warmup) {
      const double dt = t - clock;
      const std::uint64_t k = std::min<std::uint64_t>((e - config.warmup - 1) / per_batch,
                                                      batches.size() - 1);
      Batch& b = batches[k];
      b.time += dt;
      b.outstanding += dt * n;
      b.inventory += dt * std::max(0L, s - n);
      b.backlog += dt * std::max(0L, n - s);
      waiting_area += dt * std::max(0L, n - 1);
      if (occupancy.size() <= static_cast<std::size_t>(n)) occupancy.resize(n + 1, 0.0);
      occupancy[n] += dt;
    }
    clock = t;

    if (arrival) {
      ++n;
      if (n == 1) next_departure = clock + config.service.sample(rng);
      next_arrival = clock + config.arrival.sample(rng);
    } else {
      --n;
      next_departure = n > 0 ? clock + config.service.sample(rng) : inf;
    }
    if (observer) observer(clock, n);
  }

  SimStats st;
  st.events = observed;
  std::vector<double> bo, bi, bb;
  Batch total;
  for (const auto& b : batches) {
    total.time += b.time;
    total.outstanding += b.outstanding;
    total.inventory += b.inventory;
    total.backlog += b.backlog;
    if (b.time > 0.0) {
      bo.push_back(b.outstanding / b.time);
      bi.push_back(b.inventory / b.time);
      bb.push_back(b.backlog / b.time);
    }
  }
  st.observed_time = total.time;
  if (total.time <= 0.0) return st;
  st.mean_outstanding = total.outstanding / total.time;
  st.mean_inventory = total.inventory / total.time;
  st.mean_backlog = total.backlog / total.time;
  st.mean_waiting = waiting_area / total.time;
  st.pdf.reserve(occupancy.size());
  for (double x : occupancy) st.pdf.push_back(x / total.time);
  st.stderr_outstanding = stderr_of(bo);
  st.stderr_inventory = stderr_of(bi);
  st.stderr_backlog = stderr_of(bb);
  st.ci_halfwidth = bo.size() >= 2 ? t_quantile(static_cast<int>(bo.size()) - 1) * st.stderr_outstanding
                                   : 0.0;
  return st;
}

double empirical_pdf_compare(const SimStats& stats, double rho) {
  if (stats.pdf.empty() || stats.observed_time <= 0.0)
    throw DomainError("empty simulation run");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("load factor rho must lie in (0, 1)");
  double worst = 0.0;
  double geometric = 1.0 - rho;
  // Past the observed support the empirical mass is zero; the geometric tail
  // decreases, so its first value there bounds the remaining deviations.
  for (std::size_t j = 0; j <= stats.pdf.size(); ++j) {
    const double empirical = j < stats.pdf.size() ? stats.pdf[j] : 0.0;
    worst = std::max(worst, std::abs(empirical - geometric));
    geometric *= rho;
  }
  return worst;
}

SimStats replicate(const SimConfig& config, int n_reps, int threads) {
  if (n_reps < 1) throw DomainError("need at least one replication");
  if (n_reps == 1) return simulate(config);

  std::vector<SimStats> runs(n_reps);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < n_reps; r = next++) {
      SimConfig c = config;
      c.seed = config.seed + static_cast<std::uint64_t>(r);
      runs[r] = simulate(c);
    }
  };
  const int pool = std::clamp(threads, 1, n_reps);
  std::vector<std::thread> workers;
  for (int w = 1; w < pool; ++w) workers.emplace_back(worker);
  worker();
  for (auto& w : workers) w.join();

  SimStats pooled;
  pooled.replications = n_reps;
  std::vector<double> outs, invs, backs;
  for (const auto& r : runs) {
    pooled.mean_outstanding += r.mean_outstanding / n_reps;
    pooled.mean_waiting += r.mean_waiting / n_reps;
    pooled.mean_inventory += r.mean_inventory / n_reps;
    pooled.mean_backlog += r.mean_backlog / n_reps;
    pooled.observed_time += r.observed_time;
    pooled.events += r.events;
    if (pooled.pdf.size() < r.pdf.size()) pooled.pdf.resize(r.pdf.size(), 0.0);
    for (std::size_t j = 0; j < r.pdf.size(); ++j) pooled.pdf[j] += r.pdf[j] / n_reps;
    outs.push_back(r.mean_outstanding);
    invs.push_back(r.mean_inventory);
    backs.push_back(r.mean_backlog);
  }
  pooled.stderr_outstanding = stderr_of(outs);
  pooled.stderr_inventory = stderr_of(invs);
  pooled.stderr_backlog = stderr_of(backs);
  pooled.ci_halfwidth = t_quantile(n_reps - 1) * pooled.stderr_outstanding;
  return pooled;
}

}  // namespace greenq
