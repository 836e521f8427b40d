#pragma once

// Parameters, normalization and make-to-stock queue analytics.
//
// The BS keeps a base stock of s energy units and places one replenishment
// order with the renewable supplier at every connection arrival. Outstanding
// orders N form an M/M/1 queue with arrival rate lambda and service rate mu,
// so inventory is (s - N)^+ and backlog is (N - s)^+. The continuous
// approximation replaces the geometric law of N by an exponential law with
// parameter nu = (mu - lambda) / lambda.

namespace greenq {

// Raw physical and economic parameters of one BS / supplier pair.
struct SystemParams {
  double lambda = 1.0;   // connection arrival rate
  double mu0 = 2.0;      // maximum renewable production rate
  double b = 10.0;       // backlog cost per backlogged connection
  double c = 1.0;        // reservation cost per stored energy unit
  double cs_raw = 5.0;   // supplier cost per unit load-factor increase
  double lambda0 = 2.0;  // external demand rate at the supplier
  double alpha = 0.5;    // share of the backlog cost charged to the BS
  double p1 = 1.0;       // renewable energy price
  double p2 = 10.0;      // grid energy price
  double p = 0.0;        // incentive price per unit supply rate
};

// Dimensionless parameters after dividing all costs by c.
struct NormalizedParams {
  double b_n = 0.0;    // b / c
  double cs_n = 0.0;   // (cs_raw / c) * (lambda0 / mu0)
  double phi = 0.0;    // mu0 / lambda - 1
  double alpha = 0.0;
};

// A point (s, nu) of the joint strategy space.
struct StrategyPair {
  double s = 0.0;
  double nu = 0.0;
};

// Tolerance used for the open-interval checks 0 < nu < phi.
inline constexpr double kDomainTol = 1e-12;

// Throws DomainError unless the raw parameters satisfy their invariants.
void validate(const SystemParams& params);

// Throws DomainError when mu0 <= lambda or c == 0.
NormalizedParams normalize(const SystemParams& params);

// Expected stored energy E[(s - N)^+] = s - (1 - e^{-nu s}) / nu.
double mean_inventory(double s, double nu);

// Expected backlog E[(N - s)^+] = e^{-nu s} / nu.
double mean_backlog(double s, double nu);

// Exact backlog for the geometric law p_j = (1 - rho) rho^j with integer s.
// Throws DomainError unless 0 < rho < 1.
double exact_backlog_discrete(int s, double rho);

// Relative error of the exponential backlog against the geometric one,
// evaluated with nu = (1 - rho) / rho.
double approximation_error(int s, double rho);

// nu = (1 - rho) / rho and its inverse.
double nu_from_rho(double rho);
double rho_from_nu(double nu);

// Heavy-traffic variability factor (ca2 + cs2) / 2 from squared
// coefficients of variation of interarrival and service times.
double kappa(double ca2, double cs2);

}  // namespace greenq
