#include "greenq/supply_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "greenq/errors.hpp"
#include "greenq/numeric.hpp"

namespace greenq {

namespace {

void check_game(const GameInstance& g) {
  const auto& n = g.norm;
  if (!(n.phi > 0.0)) throw DomainError("phi must be > 0");
  if (!(n.b_n >= 0.0)) throw DomainError("normalized backlog cost must be >= 0");
  if (!(n.cs_n >= 0.0)) throw DomainError("normalized supply cost must be >= 0");
  if (!(n.alpha >= 0.0 && n.alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
}

void check_point(const GameInstance& g, StrategyPair x) {
  check_game(g);
  if (!(x.s >= 0.0)) throw DomainError("base stock s must be >= 0");
  if (!(x.nu > kDomainTol)) throw DomainError("nu must be > 0");
  if (!(x.nu < g.norm.phi - kDomainTol)) throw DomainError("nu must be < phi");
}

void require_nondegenerate(const GameInstance& g) {
  const auto& n = g.norm;
  if (n.alpha >= 1.0) throw DegenerateError("alpha = 1: supplier has no incentive to supply");
  if (n.b_n <= 0.0) throw DegenerateError("b = 0: no backlog cost, no interior equilibrium");
  if (n.cs_n <= 0.0) throw DegenerateError("cs = 0: supply cost vanishes, no interior equilibrium");
}

// Backlog share terms are written with exp(-nu s) / nu throughout.
double backlog_term(StrategyPair x) { return std::exp(-x.nu * x.s) / x.nu; }

}  // namespace

double cost_bs(const GameInstance& g, StrategyPair x) {
  check_point(g, x);
  const auto& n = g.norm;
  return mean_inventory(x.s, x.nu) + n.alpha * n.b_n * backlog_term(x);
}

double cost_rps(const GameInstance& g, StrategyPair x) {
  check_point(g, x);
  const auto& n = g.norm;
  return (1.0 - n.alpha) * n.b_n * backlog_term(x) + n.cs_n * (x.nu + 1.0) / (n.phi - x.nu);
}

double total_cost(const GameInstance& g, StrategyPair x) { return cost_bs(g, x) + cost_rps(g, x); }

double auxiliary_f(const GameInstance& g) {
  check_game(g);
  const auto& n = g.norm;
  if (n.cs_n <= 0.0) throw DegenerateError("cs = 0: auxiliary function undefined");
  const double ab = n.alpha * n.b_n;
  const double share = n.b_n - ab;
  return std::sqrt((share + share * std::log1p(ab)) / (n.cs_n * (1.0 + ab)));
}

double bs_best_response(const GameInstance& g, double nu) {
  check_game(g);
  if (!(nu > 0.0)) throw DomainError("nu must be > 0");
  return std::log1p(g.norm.alpha * g.norm.b_n) / nu;
}

std::optional<double> rps_best_response(const GameInstance& g, double s) {
  check_game(g);
  if (!(s >= 0.0)) throw DomainError("base stock s must be >= 0");
  const auto& n = g.norm;
  const double share = (1.0 - n.alpha) * n.b_n;
  if (share <= 0.0 || n.cs_n <= 0.0) return std::nullopt;

  // Marginal backlog saving minus marginal supply cost; strictly decreasing.
  auto foc = [&](double nu) {
    const double saving = share * std::exp(-nu * s) * (nu * s + 1.0) / (nu * nu);
    const double gap = n.phi - nu;
    return saving - n.cs_n * (1.0 + n.phi) / (gap * gap);
  };
  return numeric::bisect(foc, kDomainTol, n.phi - kDomainTol, 1e-10);
}

StrategyPair nash_equilibrium(const GameInstance& g) {
  check_game(g);
  require_nondegenerate(g);
  const auto& n = g.norm;
  const double f = auxiliary_f(g);
  const double root = std::sqrt(1.0 + n.phi);
  StrategyPair ne;
  ne.nu = f * n.phi / (root + f);
  ne.s = std::log1p(n.alpha * n.b_n) / ne.nu;
  return ne;
}

DynamicsResult best_response_dynamics(const GameInstance& g, StrategyPair start, double tol,
                                      int max_iter) {
  check_point(g, start);
  if (!(tol > 0.0)) throw DomainError("tolerance must be > 0");
  require_nondegenerate(g);

  DynamicsResult out;
  out.trace.push_back(start);
  StrategyPair cur = start;
  for (int it = 1; it <= max_iter; ++it) {
    StrategyPair next;
    next.s = bs_best_response(g, cur.nu);
    auto nu = rps_best_response(g, next.s);
    if (!nu) throw DegenerateError("supplier best response has no interior minimum");
    next.nu = *nu;
    out.trace.push_back(next);
    out.iterations = it;
    const double change = std::max(std::abs(next.s - cur.s), std::abs(next.nu - cur.nu));
    cur = next;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  out.point = cur;
  return out;
}

StrategyPair centralized_optimum(const GameInstance& g) {
  check_game(g);
  const auto& n = g.norm;
  if (n.b_n <= 0.0) throw DegenerateError("b = 0: centralized optimum has no interior solution");
  if (n.cs_n <= 0.0) throw DegenerateError("cs = 0: centralized optimum has no interior solution");
  const double gamma = std::log1p(n.b_n);
  const double root = std::sqrt(n.cs_n * gamma);
  StrategyPair x;
  x.nu = n.phi * root / (root + n.cs_n * std::sqrt(n.phi + 1.0));
  x.s = gamma / x.nu;
  return x;
}

double centralized_cost(const GameInstance& g) {
  centralized_optimum(g);  // validation
  const auto& n = g.norm;
  const double gamma = std::log1p(n.b_n);
  return (n.cs_n + gamma + 2.0 * std::sqrt(n.cs_n * gamma * (1.0 + n.phi))) / n.phi;
}

CostPair equilibrium_costs(const GameInstance& g) {
  const StrategyPair ne = nash_equilibrium(g);
  return {cost_bs(g, ne), cost_rps(g, ne)};
}

double competition_penalty(const GameInstance& g) {
  const CostPair ne = equilibrium_costs(g);
  return (ne.bs + ne.rps) / centralized_cost(g) - 1.0;
}

Interval epsilon_range(const GameInstance& g) {
  const CostPair ne = equilibrium_costs(g);
  const double central = centralized_cost(g);
  const double penalty = (ne.bs + ne.rps) / central - 1.0;
  const double upper = ne.rps / central;
  return {std::max(0.0, upper - penalty), std::min(1.0, upper)};
}

double transfer_payment(const GameInstance& g, TransferContract contract, StrategyPair x) {
  const double eps = contract.epsilon;
  return eps * cost_bs(g, x) - (1.0 - eps) * cost_rps(g, x);
}

CostPair coordinated_costs(const GameInstance& g, TransferContract contract, StrategyPair x) {
  if (!(contract.epsilon >= 0.0 && contract.epsilon <= 1.0))
    throw DomainError("contract epsilon must lie in [0, 1]");
  const double transfer = transfer_payment(g, contract, x);
  return {cost_bs(g, x) - transfer, cost_rps(g, x) + transfer};
}

EquilibriumReport equilibrium_report(const GameInstance& g) {
  EquilibriumReport r;
  r.ne = nash_equilibrium(g);
  r.cost_bs_ne = cost_bs(g, r.ne);
  r.cost_rps_ne = cost_rps(g, r.ne);
  r.central = centralized_optimum(g);
  r.cost_central = centralized_cost(g);
  r.penalty = (r.cost_bs_ne + r.cost_rps_ne) / r.cost_central - 1.0;
  const double upper = r.cost_rps_ne / r.cost_central;
  r.epsilon_range = {std::max(0.0, upper - r.penalty), std::min(1.0, upper)};
  return r;
}

double load_split_cost(const PowerSplitParams& params, double lambda) {
  if (!(lambda >= 0.0) || lambda > params.total_lambda)
    throw DomainError("renewable load must lie in [0, total_lambda]");
  const double grid = params.p2 * (params.total_lambda - lambda);
  if (lambda == 0.0) return grid;
  if (lambda >= params.mu0) return std::numeric_limits<double>::infinity();

  GameInstance g{{params.b_n, params.cs_n, params.mu0 / lambda - 1.0, params.alpha}};
  try {
    // The BS's equilibrium cost equals its base stock.
    return nash_equilibrium(g).s + params.p1 * lambda + grid;
  } catch (const DegenerateError&) {
    return std::numeric_limits<double>::infinity();
  }
}

PowerSplit power_split(const PowerSplitParams& params) {
  if (!(params.total_lambda > 0.0)) throw DomainError("total_lambda must be > 0");
  if (!(params.mu0 > 0.0)) throw DomainError("mu0 must be > 0");
  const double hi = std::min(params.total_lambda, params.mu0 * (1.0 - 1e-6));
  auto cost = [&](double lambda) { return load_split_cost(params, lambda); };

  const auto interior = numeric::golden_section(cost, 0.0, hi, 1e-6);
  PowerSplit best{0.0, cost(0.0)};
  if (const double at_hi = cost(hi); at_hi < best.cost) best = {hi, at_hi};
  if (interior.value < best.cost) best = {interior.x, interior.value};
  return best;
}

}  // namespace greenq
