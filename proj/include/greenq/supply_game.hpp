#pragma once

// Two-player supply/inventory game between a base station (chooses the base
// stock s) and a renewable power supplier (chooses the normalized supply rate
// nu). All costs are normalized by the reservation cost coefficient.

#include <optional>
#include <vector>

#include "greenq/queue_core.hpp"

namespace greenq {

struct GameInstance {
  NormalizedParams norm;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool empty() const { return lo > hi; }
  bool contains(double x) const { return !empty() && x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

// Fraction of the centralized cost borne by the supplier under the
// cost-sharing transfer payment.
struct TransferContract {
  double epsilon = 0.5;
};

struct CostPair {
  double bs = 0.0;
  double rps = 0.0;
};

struct EquilibriumReport {
  StrategyPair ne;
  double cost_bs_ne = 0.0;
  double cost_rps_ne = 0.0;
  StrategyPair central;
  double cost_central = 0.0;
  double penalty = 0.0;
  Interval epsilon_range;
};

struct DynamicsResult {
  StrategyPair point;
  std::vector<StrategyPair> trace;  // every iterate, starting point first
  int iterations = 0;
  bool converged = false;
};

// BS cost: s - (1 - e^{-nu s})/nu + alpha b e^{-nu s}/nu.
double cost_bs(const GameInstance& g, StrategyPair x);

// Supplier cost: (1 - alpha) b e^{-nu s}/nu + cs (nu + 1)/(phi - nu).
// Throws DomainError when nu >= phi.
double cost_rps(const GameInstance& g, StrategyPair x);

// Centralized objective cost_bs + cost_rps; independent of alpha.
double total_cost(const GameInstance& g, StrategyPair x);

// f = sqrt(((1-alpha) b (1 + ln(1 + alpha b))) / (cs (1 + alpha b))).
// Throws DegenerateError when cs == 0.
double auxiliary_f(const GameInstance& g);

// s*(nu) = ln(1 + alpha b) / nu.
double bs_best_response(const GameInstance& g, double nu);

// Minimizer of cost_rps over nu in (0, phi) for a fixed s, from the exact
// first-order condition
//   (1-alpha) b e^{-nu s} (nu s + 1) / nu^2 = cs (1 + phi) / (phi - nu)^2
// solved by bisection to |dnu| <= 1e-10. Returns nullopt when there is no
// interior minimum (alpha == 1 or b == 0: the cost increases in nu).
std::optional<double> rps_best_response(const GameInstance& g, double s);

// Closed-form unique equilibrium. Throws DegenerateError for alpha == 1,
// b == 0 or cs == 0.
StrategyPair nash_equilibrium(const GameInstance& g);

// Alternating best responses from `start` until both coordinates move by
// less than `tol`. Non-convergence is reported through `converged`.
DynamicsResult best_response_dynamics(const GameInstance& g, StrategyPair start,
                                      double tol = 1e-9, int max_iter = 1000);

// Joint minimizer of total_cost, gamma = ln(1 + b):
//   nu = phi sqrt(cs gamma) / (sqrt(cs gamma) + cs sqrt(phi + 1)), s = gamma / nu.
StrategyPair centralized_optimum(const GameInstance& g);

// (cs + gamma + 2 sqrt(cs gamma (1 + phi))) / phi.
double centralized_cost(const GameInstance& g);

// Costs of both players at the equilibrium, by direct substitution.
CostPair equilibrium_costs(const GameInstance& g);

// (C_r* + C_o*) / C_central - 1.
double competition_penalty(const GameInstance& g);

// Sharing fractions that leave both players no worse off than at the
// equilibrium: [C_r*/C - P, C_r*/C] clipped to [0, 1].
Interval epsilon_range(const GameInstance& g);

// Side payment from BS to supplier: eps C_o - (1 - eps) C_r.
double transfer_payment(const GameInstance& g, TransferContract contract, StrategyPair x);

// Costs after the transfer: BS pays (1 - eps) C, supplier pays eps C.
CostPair coordinated_costs(const GameInstance& g, TransferContract contract, StrategyPair x);

EquilibriumReport equilibrium_report(const GameInstance& g);

// Load split between renewable and grid energy for one BS. phi is rebuilt
// for each candidate renewable load lambda as mu0 / lambda - 1.
struct PowerSplitParams {
  double b_n = 5.0;
  double cs_n = 5.0;
  double alpha = 0.5;
  double total_lambda = 1.8;
  double mu0 = 2.0;
  double p1 = 1.0;
  double p2 = 10.0;
};

struct PowerSplit {
  double lambda = 0.0;  // renewable-served load; 0 means all-grid
  double cost = 0.0;
};

// C_ls(lambda) = s*(lambda) + p1 lambda + p2 (total - lambda). Infinite where
// the equilibrium is degenerate or lambda >= mu0.
double load_split_cost(const PowerSplitParams& params, double lambda);

// Golden-section minimum of load_split_cost over
// [0, min(total_lambda, mu0 (1 - 1e-6))], compared with both end points.
PowerSplit power_split(const PowerSplitParams& params);

}  // namespace greenq
