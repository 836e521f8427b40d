#include "greenq/capacity_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "greenq/errors.hpp"

namespace greenq {

namespace {

void check_orders(const Market& market, const OrderVector& orders) {
  if (orders.size() != market.profiles.size())
    throw DomainError("order vector does not match the number of base stations");
  if (!(market.mu0 >= 0.0)) throw DomainError("capacity mu0 must be >= 0");
  for (double m : orders)
    if (!(m >= 0.0)) throw DomainError("orders must be >= 0");
}

// Positions sorted by descending order, ties broken by BS index.
std::vector<std::size_t> descending(const Market& market, const OrderVector& orders) {
  std::vector<std::size_t> pos(orders.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    if (orders[a] != orders[b]) return orders[a] > orders[b];
    return market.profiles[a].index < market.profiles[b].index;
  });
  return pos;
}

double allocation_cost(const BsProfile& profile, const Prices& prices, double granted,
                       double lambda) {
  const double gamma = std::log1p(profile.b);
  const double holding = (gamma > 0.0 && lambda > 0.0) ? gamma * lambda / (granted - lambda) : 0.0;
  return prices.p * granted + prices.p1 * lambda + prices.p2 * (profile.lambda_bar - lambda) +
         holding;
}

// Upper bound on the renewable load that keeps the queue stable.
double load_cap(const BsProfile& profile, double granted) {
  return std::min(profile.lambda_bar, granted * (1.0 - 1e-9));
}

}  // namespace

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::proportional: return "proportional";
    case Mechanism::pareto_priority: return "pareto_priority";
    case Mechanism::adaptive_uniform: return "adaptive_uniform";
  }
  return "unknown";
}

std::optional<Mechanism> mechanism_from_string(std::string_view name) {
  for (auto m : {Mechanism::proportional, Mechanism::pareto_priority, Mechanism::adaptive_uniform})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

void validate(const Market& market) {
  if (market.profiles.size() < 2) throw DomainError("a market needs at least two base stations");
  if (!(market.mu0 > 0.0)) throw DomainError("capacity mu0 must be > 0");
  const auto& pr = market.prices;
  if (!(pr.p > 0.0)) throw DomainError("incentive price p must be > 0");
  if (!(pr.p1 >= 0.0 && pr.p2 >= 0.0)) throw DomainError("energy prices must be >= 0");
  for (const auto& bs : market.profiles) {
    if (!(bs.lambda_bar > 0.0)) throw DomainError("lambda_bar must be > 0");
    if (!(bs.b >= 0.0)) throw DomainError("backlog cost b must be >= 0");
  }
}

OptimalDemand optimal_demand(const BsProfile& profile, const Prices& prices, double lambda) {
  if (!(prices.p > 0.0)) throw DomainError("incentive price p must be > 0");
  if (!(lambda >= 0.0 && lambda <= profile.lambda_bar))
    throw DomainError("renewable load must lie in [0, lambda_bar]");
  const double gamma = std::log1p(profile.b);
  OptimalDemand d;
  d.s_hat = std::sqrt(prices.p * lambda * gamma);
  d.mu_hat = std::sqrt(lambda * gamma / prices.p) + lambda;
  d.cost = 2.0 * d.s_hat + (prices.p + prices.p1) * lambda +
           prices.p2 * (profile.lambda_bar - lambda);
  return d;
}

std::optional<double> breakeven_lambda(const BsProfile& profile, const Prices& prices) {
  if (!(prices.p > 0.0)) throw DomainError("incentive price p must be > 0");
  const double margin = prices.p2 - prices.p1 - prices.p;
  if (margin <= 0.0) return std::nullopt;
  return 4.0 * prices.p * std::log1p(profile.b) / (margin * margin);
}

double breakeven_supply(const BsProfile& profile, const Prices& prices) {
  const auto lambda = breakeven_lambda(profile, prices);
  if (!lambda) return std::numeric_limits<double>::infinity();
  return std::sqrt(*lambda * std::log1p(profile.b) / prices.p) + *lambda;
}

OrderVector truthful_orders(const Market& market) {
  OrderVector orders;
  orders.reserve(market.profiles.size());
  for (const auto& bs : market.profiles) {
    if (!breakeven_lambda(bs, market.prices)) {
      orders.push_back(0.0);
    } else {
      orders.push_back(optimal_demand(bs, market.prices, bs.lambda_bar).mu_hat);
    }
  }
  return orders;
}

AllocationResult proportional_allocation(const Market& market, const OrderVector& orders) {
  check_orders(market, orders);
  AllocationResult out;
  out.grants.assign(orders.size(), 0.0);
  const double total = std::accumulate(orders.begin(), orders.end(), 0.0);
  if (total <= 0.0) return out;
  for (std::size_t i = 0; i < orders.size(); ++i)
    out.grants[i] = std::min(orders[i], market.mu0 * orders[i] / total);
  return out;
}

AllocationResult pareto_priority_allocation(const Market& market, const OrderVector& orders) {
  check_orders(market, orders);
  AllocationResult out;
  out.grants.assign(orders.size(), 0.0);
  double remaining = market.mu0;
  for (std::size_t i : descending(market, orders)) {
    const double grant = std::min(orders[i], remaining);
    remaining -= grant;
    // A refused grant stays unassigned until the next allocation period.
    if (grant > 0.0 && grant < breakeven_supply(market.profiles[i], market.prices)) {
      out.rejected.push_back(i);
      continue;
    }
    out.grants[i] = grant;
  }
  std::sort(out.rejected.begin(), out.rejected.end());
  return out;
}

AllocationResult adaptive_uniform_allocation(const Market& market, const OrderVector& orders) {
  check_orders(market, orders);
  const std::size_t n = orders.size();
  AllocationResult out;
  out.grants = orders;
  if (n == 0) return out;

  const double total = std::accumulate(orders.begin(), orders.end(), 0.0);
  if (total <= market.mu0) {
    out.n_hat = static_cast<int>(n);
  } else {
    const auto sorted = descending(market, orders);
    // tail = sum of the orders ranked below k.
    double tail = 0.0;
    for (std::size_t k = n; k >= 1; --k) {
      const double level = (market.mu0 - tail) / static_cast<double>(k);
      const double order_k = orders[sorted[k - 1]];
      if (level <= order_k) {
        out.n_hat = static_cast<int>(k);
        for (std::size_t r = 0; r < k; ++r) out.grants[sorted[r]] = level;
        break;
      }
      tail += order_k;
    }
  }

  // Take-or-leave: a BS refuses a grant that does not beat the grid.
  for (std::size_t i = 0; i < n; ++i) {
    const double g = out.grants[i];
    if (g > 0.0 && g <= breakeven_supply(market.profiles[i], market.prices)) {
      out.grants[i] = 0.0;
      out.rejected.push_back(i);
    }
  }
  return out;
}

AllocationResult allocate(Mechanism mechanism, const Market& market, const OrderVector& orders) {
  switch (mechanism) {
    case Mechanism::proportional: return proportional_allocation(market, orders);
    case Mechanism::pareto_priority: return pareto_priority_allocation(market, orders);
    case Mechanism::adaptive_uniform: return adaptive_uniform_allocation(market, orders);
  }
  throw DomainError("unknown mechanism");
}

PostAllocation post_allocation_cost(const BsProfile& profile, const Prices& prices,
                                    double granted) {
  if (!(granted >= 0.0)) throw DomainError("granted rate must be >= 0");
  if (granted == 0.0) return {0.0, prices.p2 * profile.lambda_bar};
  const double gamma = std::log1p(profile.b);
  const double spread = prices.p2 - prices.p1;
  double lambda = 0.0;
  if (spread > 0.0) {
    lambda = granted - std::sqrt(granted * gamma / spread);
    lambda = std::clamp(lambda, 0.0, load_cap(profile, granted));
  }
  return {lambda, allocation_cost(profile, prices, granted, lambda)};
}

PostAllocation planned_allocation_cost(const BsProfile& profile, const Prices& prices,
                                       double granted) {
  if (!(granted >= 0.0)) throw DomainError("granted rate must be >= 0");
  if (!(prices.p > 0.0)) throw DomainError("incentive price p must be > 0");
  if (granted == 0.0) return {0.0, prices.p2 * profile.lambda_bar};
  // Invert mu = sqrt(lambda gamma / p) + lambda through x = sqrt(lambda).
  const double k = std::sqrt(std::log1p(profile.b) / prices.p);
  const double x = 0.5 * (-k + std::sqrt(k * k + 4.0 * granted));
  const double lambda = std::min(x * x, load_cap(profile, granted));
  return {lambda, allocation_cost(profile, prices, granted, lambda)};
}

double social_cost(const Market& market, const std::vector<double>& grants, Valuation valuation) {
  if (grants.size() != market.profiles.size())
    throw DomainError("grant vector does not match the number of base stations");
  double total = 0.0;
  for (std::size_t i = 0; i < grants.size(); ++i) {
    const auto& bs = market.profiles[i];
    total += valuation == Valuation::reoptimized
                 ? post_allocation_cost(bs, market.prices, grants[i]).cost
                 : planned_allocation_cost(bs, market.prices, grants[i]).cost;
  }
  return total;
}

SocialOptimum social_optimum_bruteforce(const Market& market) {
  const std::size_t n = market.profiles.size();
  if (n > kMaxBruteForceStations) throw DomainError("too many base stations for enumeration");
  const OrderVector full = [&] {
    OrderVector v;
    for (const auto& bs : market.profiles)
      v.push_back(optimal_demand(bs, market.prices, bs.lambda_bar).mu_hat);
    return v;
  }();

  SocialOptimum best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<double> grants(n);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double used = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      grants[i] = (mask >> i & 1u) ? full[i] : 0.0;
      used += grants[i];
    }
    if (used > market.mu0 + 1e-12) continue;
    const double residual = std::max(0.0, market.mu0 - used);
    // k == n stands for "no fractional BS".
    for (std::size_t k = 0; k <= n; ++k) {
      if (k < n && ((mask >> k & 1u) || residual <= 0.0)) continue;
      if (k < n) grants[k] = std::min(residual, full[k]);
      const double cost = social_cost(market, grants, Valuation::planned);
      if (cost < best.cost) best = {grants, cost};
      if (k < n) grants[k] = 0.0;
    }
  }
  return best;
}

double station_cost(Mechanism mechanism, const Market& market, const OrderVector& orders,
                    std::size_t position) {
  const auto result = allocate(mechanism, market, orders);
  return post_allocation_cost(market.profiles.at(position), market.prices,
                              result.grants.at(position))
      .cost;
}

AuditReport truthfulness_audit(const Market& market, Mechanism mechanism, const AuditSpec& spec) {
  if (spec.grid_points < 2) throw DomainError("audit grid needs at least two points");
  const std::size_t n = market.profiles.size();
  const OrderVector truthful = truthful_orders(market);

  // Scenario 0 keeps every opponent truthful.
  std::vector<OrderVector> scenarios{truthful};
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> scale(0.0, spec.perturb_span);
  for (int k = 0; k < spec.perturbed_scenarios; ++k) {
    OrderVector perturbed(n);
    for (std::size_t j = 0; j < n; ++j) perturbed[j] = truthful[j] * scale(rng);
    scenarios.push_back(std::move(perturbed));
  }

  AuditReport report;
  report.mechanism = mechanism;
  for (std::size_t i = 0; i < n; ++i) {
    BsAudit audit;
    audit.index = market.profiles[i].index;
    audit.max_improvement = -std::numeric_limits<double>::infinity();
    for (std::size_t sc = 0; sc < scenarios.size(); ++sc) {
      OrderVector orders = scenarios[sc];
      orders[i] = truthful[i];
      const double honest = station_cost(mechanism, market, orders, i);
      for (int d = 0; d < spec.grid_points; ++d) {
        orders[i] = spec.deviation_span * truthful[i] * d / (spec.grid_points - 1);
        const double gain = honest - station_cost(mechanism, market, orders, i);
        if (gain > audit.max_improvement) {
          audit.max_improvement = gain;
          audit.best_deviation = orders[i];
          audit.worst_scenario = static_cast<int>(sc);
        }
      }
    }
    report.max_improvement = i == 0 ? audit.max_improvement
                                    : std::max(report.max_improvement, audit.max_improvement);
    report.per_bs.push_back(audit);
  }
  report.truthful_dominant = n == 0 || report.max_improvement <= spec.improvement_tol;
  return report;
}

}  // namespace greenq
