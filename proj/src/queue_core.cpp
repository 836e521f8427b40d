#include "greenq/queue_core.hpp"

#include <cmath>
#include <string>

#include "greenq/errors.hpp"

namespace greenq {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void check_s_nu(double s, double nu) {
  require(s >= 0.0, "base stock s must be >= 0");
  require(nu > kDomainTol, "normalized supply rate nu must be > 0");
}

}  // namespace

void validate(const SystemParams& p) {
  require(p.lambda > 0.0, "lambda must be > 0");
  require(p.mu0 > p.lambda, "mu0 must exceed lambda (no capacity headroom)");
  require(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha must lie in [0, 1]");
  require(p.c > 0.0, "reservation cost c must be > 0");
  require(p.b >= 0.0 && p.cs_raw >= 0.0 && p.lambda0 >= 0.0, "b, cs_raw, lambda0 must be >= 0");
  require(p.p1 >= 0.0 && p.p2 >= 0.0 && p.p >= 0.0, "prices must be >= 0");
}

NormalizedParams normalize(const SystemParams& params) {
  validate(params);
  NormalizedParams n;
  n.b_n = params.b / params.c;
  n.cs_n = (params.cs_raw / params.c) * (params.lambda0 / params.mu0);
  n.phi = params.mu0 / params.lambda - 1.0;
  n.alpha = params.alpha;
  return n;
}

double mean_inventory(double s, double nu) {
  check_s_nu(s, nu);
  // -expm1 keeps precision when nu * s is tiny.
  return s + std::expm1(-nu * s) / nu;
}

double mean_backlog(double s, double nu) {
  check_s_nu(s, nu);
  return std::exp(-nu * s) / nu;
}

double exact_backlog_discrete(int s, double rho) {
  require(s >= 0, "base stock s must be >= 0");
  require(rho > 0.0 && rho < 1.0, "load factor rho must lie in (0, 1)");
  return std::pow(rho, s + 1) / (1.0 - rho);
}

double approximation_error(int s, double rho) {
  const double exact = exact_backlog_discrete(s, rho);
  return std::abs(mean_backlog(s, nu_from_rho(rho)) - exact) / exact;
}

double nu_from_rho(double rho) {
  require(rho > 0.0 && rho < 1.0, "load factor rho must lie in (0, 1)");
  return (1.0 - rho) / rho;
}

double rho_from_nu(double nu) {
  require(nu > 0.0, "nu must be > 0");
  return 1.0 / (1.0 + nu);
}

double kappa(double ca2, double cs2) {
  require(ca2 >= 0.0 && cs2 >= 0.0, "squared coefficients of variation must be >= 0");
  return 0.5 * (ca2 + cs2);
}

}  // namespace greenq
