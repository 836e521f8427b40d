#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "greenq/errors.hpp"
#include "greenq/supply_game.hpp"

using namespace greenq;

namespace {

GameInstance reference(double alpha = 0.5) { return GameInstance{{10.0, 5.0, 1.0, alpha}}; }

GameInstance random_game(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> b(1.0, 50.0), cs(0.5, 20.0), phi(0.2, 5.0), alpha(0.05, 0.95);
  return GameInstance{{b(rng), cs(rng), phi(rng), alpha(rng)}};
}

// Central finite differences.
double d_s(double (*f)(const GameInstance&, StrategyPair), const GameInstance& g, StrategyPair x,
           double h = 1e-5) {
  return (f(g, {x.s + h, x.nu}) - f(g, {x.s - h, x.nu})) / (2 * h);
}

double d_nu(double (*f)(const GameInstance&, StrategyPair), const GameInstance& g, StrategyPair x,
            double h = 1e-6) {
  return (f(g, {x.s, x.nu + h}) - f(g, {x.s, x.nu - h})) / (2 * h);
}

double d_s_nu(double (*f)(const GameInstance&, StrategyPair), const GameInstance& g, StrategyPair x,
              double h = 1e-4) {
  return (f(g, {x.s + h, x.nu + h}) - f(g, {x.s + h, x.nu - h}) - f(g, {x.s - h, x.nu + h}) +
          f(g, {x.s - h, x.nu - h})) /
         (4 * h * h);
}

// Brute-force minimizer of the total cost: coarse grid, then a refined grid
// around the best cell.
StrategyPair grid_minimum(const GameInstance& g, double s_max) {
  double s_lo = 0.0, s_hi = s_max, n_lo = 0.0, n_hi = g.norm.phi;
  StrategyPair best{};
  for (int round = 0; round < 6; ++round) {
    double best_cost = std::numeric_limits<double>::infinity();
    const int n = 200;
    for (int i = 0; i <= n; ++i)
      for (int j = 1; j < n; ++j) {
        const StrategyPair x{s_lo + (s_hi - s_lo) * i / n, n_lo + (n_hi - n_lo) * j / n};
        if (x.nu <= 0.0 || x.nu >= g.norm.phi) continue;
        const double c = total_cost(g, x);
        if (c < best_cost) best_cost = c, best = x;
      }
    const double ds = 2 * (s_hi - s_lo) / n, dn = 2 * (n_hi - n_lo) / n;
    s_lo = std::max(0.0, best.s - ds), s_hi = best.s + ds;
    n_lo = std::max(0.0, best.nu - dn), n_hi = std::min(g.norm.phi, best.nu + dn);
  }
  return best;
}

}  // namespace

TEST_CASE("reference equilibrium and optimum") {
  const auto g = reference();
  CHECK(auxiliary_f(g) == doctest::Approx(0.68212).epsilon(1e-4));
  const auto ne = nash_equilibrium(g);
  CHECK(ne.nu == doctest::Approx(0.32539).epsilon(1e-4));
  CHECK(ne.s == doctest::Approx(5.5065).epsilon(1e-4));
  CHECK(cost_rps(g, ne) == doctest::Approx(12.3844).epsilon(1e-4));
  const auto opt = centralized_optimum(g);
  CHECK(std::abs(opt.nu - 0.33) <= 0.01);
  CHECK(std::abs(opt.s - 7.29) <= 0.01);
  CHECK(std::abs(centralized_cost(g) - 17.19) <= 0.01);
  CHECK(std::abs(competition_penalty(g) - 0.0407) <= 0.0005);
  const auto eps = epsilon_range(g);
  CHECK(eps.lo == doctest::Approx(0.6797).epsilon(1e-3));
  CHECK(eps.hi == doctest::Approx(0.7204).epsilon(1e-3));
}

TEST_CASE("costs match their definitions") {
  const auto g = reference();
  const StrategyPair x{3.0, 0.4};
  const double e = std::exp(-0.4 * 3.0);
  CHECK(cost_bs(g, x) == doctest::Approx(3.0 - (1 - e) / 0.4 + 5.0 * e / 0.4));
  CHECK(cost_rps(g, x) == doctest::Approx(5.0 * e / 0.4 + 5.0 * 1.4 / 0.6));
  CHECK(total_cost(g, x) == doctest::Approx(cost_bs(g, x) + cost_rps(g, x)));
  CHECK_THROWS_AS(cost_rps(g, {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(cost_bs(g, {-1.0, 0.5}), DomainError);
}

TEST_CASE("equilibrium satisfies both first-order conditions") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 100; ++k) {
    const auto g = random_game(rng);
    const auto ne = nash_equilibrium(g);
    REQUIRE(ne.nu > 0.0);
    REQUIRE(ne.nu < g.norm.phi);
    CHECK(std::abs(d_s(cost_bs, g, ne)) <= 1e-5);
    const double scale = std::max(1.0, cost_rps(g, ne));
    CHECK(std::abs(d_nu(cost_rps, g, ne)) <= 1e-5 * scale);
    CHECK(ne.nu * ne.s == doctest::Approx(std::log1p(g.norm.alpha * g.norm.b_n)).epsilon(1e-9));
    CHECK(bs_best_response(g, ne.nu) == doctest::Approx(ne.s).epsilon(1e-9));
    const auto r = rps_best_response(g, ne.s);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(ne.nu).epsilon(1e-8));
  }
}

TEST_CASE("best responses are decreasing and cross partials positive") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const auto g = random_game(rng);
    const double phi = g.norm.phi;
    double prev = std::numeric_limits<double>::infinity();
    for (double nu = 0.05 * phi; nu < phi; nu += 0.1 * phi) {
      const double s = bs_best_response(g, nu);
      CHECK(s < prev);
      prev = s;
    }
    prev = std::numeric_limits<double>::infinity();
    for (double s = 0.0; s < 20.0; s += 1.0) {
      const double nu = rps_best_response(g, s).value();
      CHECK(nu <= prev + 1e-9);
      prev = nu;
    }
    const StrategyPair x{2.0, 0.5 * phi};
    CHECK(d_s_nu(cost_bs, g, x) > 0.0);
    CHECK(d_s_nu(cost_rps, g, x) > 0.0);
  }
}

TEST_CASE("centralized optimum against a grid search") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto g = random_game(rng);
    const auto opt = centralized_optimum(g);
    const auto grid = grid_minimum(g, 3.0 * opt.s + 5.0);
    CHECK(centralized_cost(g) <= total_cost(g, grid) + 1e-9);
    CHECK(total_cost(g, grid) == doctest::Approx(centralized_cost(g)).epsilon(1e-6));
    CHECK(opt.s * opt.nu == doctest::Approx(std::log1p(g.norm.b_n)));
  }
}

TEST_CASE("comparative statics in alpha") {
  double prev_s = 0.0, prev_nu = std::numeric_limits<double>::infinity();
  for (double a = 0.1; a < 0.95; a += 0.1) {
    const auto ne = nash_equilibrium(reference(a));
    CHECK(ne.s > prev_s);
    CHECK(ne.nu < prev_nu);
    prev_s = ne.s;
    prev_nu = ne.nu;
  }
}

TEST_CASE("best-response dynamics converge to the closed form") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const auto g = random_game(rng);
    const auto r = best_response_dynamics(g, {1.0, 0.5 * g.norm.phi});
    const auto ne = nash_equilibrium(g);
    CHECK(r.converged);
    CHECK(r.iterations < 200);
    CHECK(std::abs(r.point.s - ne.s) <= 1e-6);
    CHECK(std::abs(r.point.nu - ne.nu) <= 1e-6);
    CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations) + 1);
  }
}

TEST_CASE("penalty, contract range and coordinated costs") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const auto g = random_game(rng);
    const auto rep = equilibrium_report(g);
    CHECK(rep.penalty >= -1e-12);
    CHECK(rep.cost_bs_ne + rep.cost_rps_ne >= rep.cost_central - 1e-9);
    const double c = rep.cost_central;
    // unclipped interval width equals the penalty
    CHECK((rep.cost_rps_ne / c) - (rep.cost_rps_ne / c - rep.penalty) == doctest::Approx(rep.penalty));
    if (rep.epsilon_range.empty()) continue;
    for (double eps : {rep.epsilon_range.lo, rep.epsilon_range.hi}) {
      const auto cc = coordinated_costs(g, {eps}, rep.central);
      CHECK(cc.bs == doctest::Approx((1 - eps) * c));
      CHECK(cc.rps == doctest::Approx(eps * c));
      CHECK(cc.bs <= rep.cost_bs_ne + 1e-9 * c);
      CHECK(cc.rps <= rep.cost_rps_ne + 1e-9 * c);
    }
  }
  CHECK_THROWS_AS(coordinated_costs(reference(), {1.5}, {1.0, 0.5}), DomainError);
}

TEST_CASE("degenerate games") {
  auto g = reference(1.0);
  CHECK_THROWS_AS(nash_equilibrium(g), DegenerateError);
  CHECK_FALSE(rps_best_response(g, 1.0).has_value());
  g = GameInstance{{10.0, 0.0, 1.0, 0.5}};
  CHECK_THROWS_AS(nash_equilibrium(g), DegenerateError);
  g = GameInstance{{10.0, 5.0, 0.0, 0.5}};
  CHECK_THROWS(centralized_optimum(g));
}

TEST_CASE("power split against a scan") {
  PowerSplitParams p;
  CHECK(load_split_cost(p, 0.0) == doctest::Approx(p.p2 * p.total_lambda));
  PowerSplitParams big = p;
  big.total_lambda = 3.0;
  CHECK(std::isinf(load_split_cost(big, big.mu0)));
  CHECK_THROWS_AS(load_split_cost(p, 2.5), DomainError);
  double prev = -1.0;
  const double expected[] = {0.6105, 0.9449, 1.1109};
  int k = 0;
  for (double p2 : {5.0, 7.5, 10.0}) {
    p.p2 = p2;
    const auto best = power_split(p);
    double arg = 0.0, val = load_split_cost(p, 0.0);
    for (double l = 1e-3; l <= p.total_lambda; l += 1e-3)
      if (const double c = load_split_cost(p, l); c < val) val = c, arg = l;
    CHECK(std::abs(best.lambda - arg) <= 1e-3);
    CHECK(best.cost <= val + 1e-9);
    CHECK(best.lambda == doctest::Approx(expected[k++]).epsilon(1e-3));
    CHECK(best.lambda >= prev);
    prev = best.lambda;
  }
  // cheap grid power makes renewable energy unattractive
  p.p2 = 0.5;
  CHECK(power_split(p).lambda == doctest::Approx(0.0));
}
