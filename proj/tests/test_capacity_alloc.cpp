#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <doctest.h>

#include "greenq/capacity_alloc.hpp"
#include "greenq/errors.hpp"

using namespace greenq;

namespace {

Market reference_market() {
  Market m;
  m.mu0 = 20.0;
  m.prices = {2.0, 1.0, 10.0};
  for (int i = 1; i <= 8; ++i) m.profiles.push_back({0.5 * i, 2.0, i});
  return m;
}

Market random_market(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> load(0.2, 5.0), b(0.5, 5.0), scarcity(0.3, 1.1);
  Market m;
  m.prices = {2.0, 1.0, 10.0};
  for (int i = 0; i < n; ++i) m.profiles.push_back({load(rng), b(rng), i + 1});
  const auto orders = truthful_orders(m);
  m.mu0 = std::max(0.1, scarcity(rng) * std::accumulate(orders.begin(), orders.end(), 0.0));
  return m;
}

// Supply rate minimizing p mu + gamma lambda / (mu - lambda), ternary search.
double numeric_mu_hat(const BsProfile& bs, const Prices& pr, double lambda) {
  const double gamma = std::log1p(bs.b);
  auto f = [&](double mu) { return pr.p * mu + gamma * lambda / (mu - lambda); };
  double lo = lambda + 1e-12, hi = lambda + 100.0;
  for (int i = 0; i < 300; ++i) {
    const double a = lo + (hi - lo) / 3, c = hi - (hi - lo) / 3;
    if (f(a) < f(c)) {
      hi = c;
    } else {
      lo = a;
    }
  }
  return 0.5 * (lo + hi);
}

void check_feasible(const Market& m, const OrderVector& orders, const AllocationResult& r) {
  REQUIRE(r.grants.size() == orders.size());
  double used = 0.0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    CHECK(r.grants[i] >= 0.0);
    CHECK(r.grants[i] <= orders[i] + 1e-9);
    used += r.grants[i];
  }
  CHECK(used <= m.mu0 + 1e-9);
}

constexpr Mechanism kAll[] = {Mechanism::proportional, Mechanism::pareto_priority,
                              Mechanism::adaptive_uniform};

}  // namespace

TEST_CASE("optimal demand against a numeric minimizer") {
  const auto m = reference_market();
  for (const auto& bs : m.profiles) {
    const auto d = optimal_demand(bs, m.prices, bs.lambda_bar);
    CHECK(d.mu_hat == doctest::Approx(numeric_mu_hat(bs, m.prices, bs.lambda_bar)).epsilon(1e-6));
    const double gamma = std::log1p(bs.b);
    CHECK(d.s_hat == doctest::Approx(std::sqrt(m.prices.p * bs.lambda_bar * gamma)));
    const double direct = m.prices.p * d.mu_hat + gamma * bs.lambda_bar / (d.mu_hat - bs.lambda_bar) +
                          m.prices.p1 * bs.lambda_bar;
    CHECK(d.cost == doctest::Approx(direct));
  }
  CHECK_THROWS_AS(optimal_demand(m.profiles[0], m.prices, 10.0), DomainError);
}

TEST_CASE("break-even load solves the cost equality") {
  const auto m = reference_market();
  const auto& bs = m.profiles[0];
  const auto lhat = breakeven_lambda(bs, m.prices);
  REQUIRE(lhat.has_value());
  // bisection on the saving of moving load l from the grid to renewables
  BsProfile wide = bs;
  wide.lambda_bar = 100.0;
  auto gap = [&](double l) {
    return optimal_demand(wide, m.prices, l).cost - m.prices.p2 * wide.lambda_bar;
  };
  double lo = 1e-9, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  CHECK(*lhat == doctest::Approx(lo).epsilon(1e-8));
  CHECK(breakeven_supply(bs, m.prices) == doctest::Approx(0.49325).epsilon(1e-4));

  Prices dear{2.0, 1.0, 2.5};
  CHECK_FALSE(breakeven_lambda(bs, dear).has_value());
  CHECK(std::isinf(breakeven_supply(bs, dear)));
}

TEST_CASE("reference market allocations") {
  const auto m = reference_market();
  const auto orders = truthful_orders(m);
  CHECK(std::accumulate(orders.begin(), orders.end(), 0.0) == doctest::Approx(26.5455).epsilon(1e-4));

  const auto prop = proportional_allocation(m, orders);
  for (std::size_t i = 0; i < orders.size(); ++i)
    CHECK(prop.grants[i] == doctest::Approx(0.75342 * orders[i]).epsilon(1e-4));

  const auto au = adaptive_uniform_allocation(m, orders);
  REQUIRE(au.n_hat.has_value());
  CHECK(*au.n_hat == 5);
  for (std::size_t i = 0; i < 3; ++i) CHECK(au.grants[i] == doctest::Approx(orders[i]));
  for (std::size_t i = 3; i < 8; ++i) CHECK(std::abs(au.grants[i] - 2.9654) <= 1e-3);
  CHECK(au.rejected.empty());

  const auto pp = pareto_priority_allocation(m, orders);
  const double expected[] = {0, 0, 0, 1.6756, 3.6718, 4.2837, 4.8866, 5.4823};
  for (std::size_t i = 0; i < 8; ++i) CHECK(pp.grants[i] == doctest::Approx(expected[i]).epsilon(1e-4));

  for (auto mech : kAll) check_feasible(m, orders, allocate(mech, m, orders));
}

TEST_CASE("mechanism names round-trip") {
  for (auto mech : kAll) CHECK(mechanism_from_string(to_string(mech)) == mech);
  CHECK_FALSE(mechanism_from_string("lottery").has_value());
}

TEST_CASE("invalid markets") {
  auto m = reference_market();
  m.profiles.resize(1);
  CHECK_THROWS_AS(validate(m), DomainError);
  m = reference_market();
  m.mu0 = 0.0;
  CHECK_THROWS_AS(validate(m), DomainError);
  m = reference_market();
  CHECK_THROWS_AS(proportional_allocation(m, {1.0, 2.0}), DomainError);
  OrderVector bad(8, 1.0);
  bad[2] = -1.0;
  CHECK_THROWS_AS(adaptive_uniform_allocation(m, bad), DomainError);
}

TEST_CASE("feasibility on random orders") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> size(2, 10);
  std::uniform_real_distribution<double> order(0.0, 6.0), cap(0.5, 40.0);
  for (int k = 0; k < 1000; ++k) {
    Market m;
    for (int i = 0, n = size(rng); i < n; ++i) m.profiles.push_back({1.0 + 0.3 * i, 2.0, i + 1});
    m.mu0 = cap(rng);
    OrderVector orders;
    for (std::size_t i = 0; i < m.profiles.size(); ++i) orders.push_back(order(rng));
    for (auto mech : kAll) check_feasible(m, orders, allocate(mech, m, orders));
  }
}

TEST_CASE("scarcity never raises a proportional grant or the uniform level") {
  auto m = reference_market();
  const auto orders = truthful_orders(m);
  std::vector<double> prev_prop(orders.size(), std::numeric_limits<double>::infinity());
  double prev_level = std::numeric_limits<double>::infinity();
  for (double cap = 30.0; cap > 1.0; cap -= 0.5) {
    m.mu0 = cap;
    const auto prop = proportional_allocation(m, orders);
    for (std::size_t i = 0; i < orders.size(); ++i) {
      CHECK(prop.grants[i] <= prev_prop[i] + 1e-12);
      prev_prop[i] = prop.grants[i];
    }
    // the largest order always receives the uniform level (or its full order)
    const auto au = adaptive_uniform_allocation(m, orders);
    const double level = std::min(orders.back(), au.grants.back());
    CHECK(level <= prev_level + 1e-12);
    prev_level = level;
  }
}

TEST_CASE("adaptive uniform is truthful on random markets") {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> size(2, 8);
  AuditSpec spec;
  spec.grid_points = 60;
  spec.perturbed_scenarios = 5;
  for (int k = 0; k < 25; ++k) {
    const auto m = random_market(rng, size(rng));
    spec.seed = static_cast<std::uint64_t>(k) + 1;
    const auto rep = truthfulness_audit(m, Mechanism::adaptive_uniform, spec);
    CHECK(rep.max_improvement <= 1e-9);
    CHECK(rep.truthful_dominant);
  }
}

TEST_CASE("pareto priority rewards inflated orders under scarcity") {
  const auto rep = truthfulness_audit(reference_market(), Mechanism::pareto_priority);
  CHECK_FALSE(rep.truthful_dominant);
  CHECK(rep.max_improvement > 1e-9);
  const auto& worst = *std::max_element(rep.per_bs.begin(), rep.per_bs.end(),
                                        [](const BsAudit& a, const BsAudit& b) {
                                          return a.max_improvement < b.max_improvement;
                                        });
  const auto orders = truthful_orders(reference_market());
  CHECK(worst.best_deviation > orders[static_cast<std::size_t>(worst.index - 1)]);
}

TEST_CASE("extreme-point optimum of the planned cost") {
  const auto m = reference_market();
  const auto orders = truthful_orders(m);
  const auto opt = social_optimum_bruteforce(m);
  CHECK(opt.cost == doctest::Approx(106.5248).epsilon(1e-5));
  CHECK(std::accumulate(opt.grants.begin(), opt.grants.end(), 0.0) <= m.mu0 + 1e-9);

  const auto pp = pareto_priority_allocation(m, orders);
  const auto prop = proportional_allocation(m, orders);
  CHECK(social_cost(m, pp.grants, Valuation::planned) == doctest::Approx(opt.cost).epsilon(1e-9));
  CHECK(social_cost(m, prop.grants, Valuation::planned) > opt.cost + 1e-6);

  // no random feasible allocation beats it
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20000; ++k) {
    std::vector<double> grants(orders.size());
    double used = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) used += grants[i] = u(rng) * orders[i];
    if (used > m.mu0)
      for (double& g : grants) g *= m.mu0 / used;
    CHECK(social_cost(m, grants, Valuation::planned) >= opt.cost - 1e-9);
  }
}

TEST_CASE("planned and re-optimized valuations") {
  const auto m = reference_market();
  const auto orders = truthful_orders(m);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto& bs = m.profiles[i];
    // a full grant reproduces the optimal-demand cost either way
    const auto full = optimal_demand(bs, m.prices, bs.lambda_bar);
    CHECK(planned_allocation_cost(bs, m.prices, orders[i]).cost == doctest::Approx(full.cost));
    CHECK(post_allocation_cost(bs, m.prices, orders[i]).cost <= full.cost + 1e-9);
    for (double frac : {0.2, 0.5, 0.9}) {
      const double a = frac * orders[i];
      CHECK(post_allocation_cost(bs, m.prices, a).cost <=
            planned_allocation_cost(bs, m.prices, a).cost + 1e-9);
    }
    CHECK(post_allocation_cost(bs, m.prices, 0.0).cost == doctest::Approx(m.prices.p2 * bs.lambda_bar));
  }
}

TEST_CASE("two symmetric stations share scarce capacity equally") {
  Market m;
  m.prices = {2.0, 1.0, 10.0};
  m.profiles = {{3.0, 2.0, 1}, {3.0, 2.0, 2}};
  const auto orders = truthful_orders(m);
  m.mu0 = orders[0];
  const auto au = adaptive_uniform_allocation(m, orders);
  CHECK(au.grants[0] == doctest::Approx(0.5 * m.mu0));
  CHECK(au.grants[1] == doctest::Approx(0.5 * m.mu0));
  const auto prop = proportional_allocation(m, orders);
  CHECK(prop.grants[0] == doctest::Approx(prop.grants[1]));
  // ties in the pareto ranking go to the lower index
  const auto pp = pareto_priority_allocation(m, orders);
  CHECK(pp.grants[0] == doctest::Approx(m.mu0));
  CHECK(pp.grants[1] == doctest::Approx(0.0));
}
