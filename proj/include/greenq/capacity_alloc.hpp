#pragma once

// Multi-BS capacity allocation: one supplier with capacity mu0 sells supply
// rate to N base stations at an incentive price p per unit rate. Each BS
// splits its load between renewable energy (price p1) and the grid (p2).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace greenq {

struct BsProfile {
  double lambda_bar = 1.0;  // total connection arrival rate
  double b = 0.0;           // normalized backlog cost
  int index = 0;            // stable identifier, also the tie-breaker
};

struct Prices {
  double p = 2.0;    // incentive price per unit supply rate
  double p1 = 1.0;   // renewable energy price
  double p2 = 10.0;  // grid energy price
};

struct Market {
  std::vector<BsProfile> profiles;
  double mu0 = 20.0;
  Prices prices;
};

using OrderVector = std::vector<double>;

struct AllocationResult {
  std::vector<double> grants;
  std::optional<int> n_hat;          // split index, adaptive uniform only
  std::vector<std::size_t> rejected;  // positions zeroed by the take-or-leave step
};

enum class Mechanism { proportional, pareto_priority, adaptive_uniform };

std::string_view to_string(Mechanism m);
std::optional<Mechanism> mechanism_from_string(std::string_view name);

// Throws DomainError on N < 2, mu0 <= 0, negative rates or prices.
void validate(const Market& market);

struct OptimalDemand {
  double mu_hat = 0.0;  // sqrt(lambda ln(1+b) / p) + lambda
  double s_hat = 0.0;   // sqrt(p lambda ln(1+b))
  double cost = 0.0;    // 2 sqrt(p lambda ln(1+b)) + (p + p1) lambda + p2 (lambda_bar - lambda)
};

// Cost-minimizing supply rate and base stock when `lambda` of the BS's load
// is served by renewable energy. Throws DomainError when p <= 0.
OptimalDemand optimal_demand(const BsProfile& profile, const Prices& prices, double lambda);

// Load at which serving everything with renewable energy breaks even with the
// grid: 4 p ln(1+b) / (p2 - p1 - p)^2. nullopt in the all-grid regime
// p2 <= p1 + p.
std::optional<double> breakeven_lambda(const BsProfile& profile, const Prices& prices);

// Supply rate optimal at the break-even load; grants at or below it are
// refused. Infinite in the all-grid regime.
double breakeven_supply(const BsProfile& profile, const Prices& prices);

// Orders every BS would place when reporting truthfully: mu_hat at full load,
// zero in the all-grid regime.
OrderVector truthful_orders(const Market& market);

AllocationResult proportional_allocation(const Market& market, const OrderVector& orders);
AllocationResult pareto_priority_allocation(const Market& market, const OrderVector& orders);
AllocationResult adaptive_uniform_allocation(const Market& market, const OrderVector& orders);
AllocationResult allocate(Mechanism mechanism, const Market& market, const OrderVector& orders);

struct PostAllocation {
  double lambda = 0.0;  // renewable-served load
  double cost = 0.0;
};

// Cost of a BS granted supply rate `granted`, re-optimizing its renewable load:
//   p a + p1 lambda + p2 (lambda_bar - lambda) + ln(1+b) lambda / (a - lambda)
// with lambda = clamp(a - sqrt(a ln(1+b) / (p2 - p1)), 0, min(lambda_bar, a (1 - 1e-9))).
PostAllocation post_allocation_cost(const BsProfile& profile, const Prices& prices, double granted);

// Same cost formula, but the BS keeps the renewable load whose optimal supply
// rate equals the grant (capped at lambda_bar). This is the concave objective
// over which extreme-point enumeration is exact.
PostAllocation planned_allocation_cost(const BsProfile& profile, const Prices& prices,
                                       double granted);

enum class Valuation { reoptimized, planned };

double social_cost(const Market& market, const std::vector<double>& grants,
                   Valuation valuation = Valuation::reoptimized);

struct SocialOptimum {
  std::vector<double> grants;
  double cost = 0.0;
};

inline constexpr std::size_t kMaxBruteForceStations = 12;

// Exhaustive search over extreme allocations of the planned objective: every
// BS is served in full (mu_hat at lambda_bar) or not at all, except at most
// one BS that absorbs the residual capacity. Throws DomainError above
// kMaxBruteForceStations.
SocialOptimum social_optimum_bruteforce(const Market& market);

struct AuditSpec {
  int grid_points = 200;         // deviations per BS and scenario
  double deviation_span = 2.5;   // deviations cover [0, span * m_i*]
  int perturbed_scenarios = 20;  // opponent scenarios besides the truthful one
  double perturb_span = 2.5;     // opponent orders drawn as m_j* U(0, span)
  std::uint64_t seed = 1;
  double improvement_tol = 1e-9;
};

struct BsAudit {
  int index = 0;
  double max_improvement = 0.0;  // truthful cost minus best deviation cost
  double best_deviation = 0.0;   // order achieving it
  int worst_scenario = 0;        // 0 = truthful opponents
};

struct AuditReport {
  Mechanism mechanism = Mechanism::adaptive_uniform;
  std::vector<BsAudit> per_bs;
  double max_improvement = 0.0;
  bool truthful_dominant = false;
};

// Cost BS `position` incurs under `mechanism` when the orders are `orders`.
double station_cost(Mechanism mechanism, const Market& market, const OrderVector& orders,
                    std::size_t position);

// Scans unilateral deviations from truthful reporting for every BS against
// truthful and randomly perturbed opponent orders.
AuditReport truthfulness_audit(const Market& market, Mechanism mechanism,
                               const AuditSpec& spec = {});

}  // namespace greenq
