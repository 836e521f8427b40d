#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "greenq/bench.hpp"
#include "greenq/capacity_alloc.hpp"
#include "greenq/des_sim.hpp"
#include "greenq/errors.hpp"
#include "greenq/supply_game.hpp"

namespace greenq::bench {

namespace {

using Params = std::map<std::string, double>;

// Result columns and rows of one run before parameter echoing.
struct Output {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> notes;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Context {
  const Params& params;
  std::uint64_t seed;
  int jobs;

  double operator[](const std::string& key) const { return params.at(key); }
  bool has(const std::string& key) const { return params.count(key) != 0; }
};

struct Scenario {
  Params defaults;
  std::set<std::string> optional_keys;  // accepted without a default
  std::function<Output(const Context&)> run;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool defaults_unchanged(const Context& ctx, const Params& reference) {
  for (const auto& [key, value] : reference)
    if (!ctx.has(key) || ctx[key] != value) return false;
  return true;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// phi can be given directly or through the capacity ratio mu0 / lambda.
double resolve_phi(const Context& ctx) {
  return ctx.has("mu0_over_lambda") ? ctx["mu0_over_lambda"] - 1.0 : ctx["phi"];
}

GameInstance game_from(const Context& ctx, double alpha) {
  return GameInstance{{ctx["b"], ctx["cs"], resolve_phi(ctx), alpha}};
}

Output run_central(const Context& ctx) {
  const GameInstance g = game_from(ctx, 0.0);
  const StrategyPair x = centralized_optimum(g);
  const double cost = centralized_cost(g);
  const double direct = total_cost(g, x);

  Output out;
  out.columns = {"nu_bar", "s_bar", "cost", "cost_direct", "rho_bar"};
  out.rows.push_back({x.nu, x.s, cost, direct, rho_from_nu(x.nu)});
  out.expect(near(x.s * x.nu, std::log1p(g.norm.b_n), 1e-9), "s_bar * nu_bar != ln(1 + b)");
  out.expect(near(cost, direct, 1e-9 * std::max(1.0, cost)), "closed-form cost != direct cost");
  if (defaults_unchanged(ctx, {{"b", 10}, {"cs", 5}, {"phi", 1}}) && !ctx.has("mu0_over_lambda")) {
    out.expect(near(x.nu, 0.33, 0.01), "nu_bar not within 0.01 of 0.33");
    out.expect(near(x.s, 7.29, 0.01), "s_bar not within 0.01 of 7.29");
    out.expect(near(cost, 17.19, 0.01), "cost not within 0.01 of 17.19");
  }
  return out;
}

Output run_nash(const Context& ctx) {
  const GameInstance g = game_from(ctx, ctx["alpha"]);
  const StrategyPair ne = nash_equilibrium(g);
  const auto brd = best_response_dynamics(g, {1.0, 0.5 * g.norm.phi}, 1e-9, 10000);

  Output out;
  out.columns = {"f", "nu_star", "s_star", "cost_bs", "cost_rps", "brd_nu", "brd_s", "brd_iterations"};
  const double cbs = cost_bs(g, ne);
  out.rows.push_back({auxiliary_f(g), ne.nu, ne.s, cbs, cost_rps(g, ne), brd.point.nu, brd.point.s,
                      static_cast<double>(brd.iterations)});
  out.expect(near(ne.nu * ne.s, std::log1p(g.norm.alpha * g.norm.b_n), 1e-9),
             "nu* s* != ln(1 + alpha b)");
  out.expect(near(cbs, ne.s, 1e-9), "BS equilibrium cost != s*");
  out.expect(brd.converged, "best-response dynamics did not converge");
  out.expect(near(brd.point.nu, ne.nu, 1e-6) && near(brd.point.s, ne.s, 1e-6),
             "best-response fixed point differs from the closed form");
  return out;
}

Output run_penalty_contract(const Context& ctx) {
  const GameInstance g = game_from(ctx, ctx["alpha"]);
  const EquilibriumReport r = equilibrium_report(g);
  const double eps = ctx.has("epsilon") ? ctx["epsilon"]
                     : r.epsilon_range.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : 0.5 * (r.epsilon_range.lo + r.epsilon_range.hi);

  Output out;
  out.columns = {"cost_bs_ne", "cost_rps_ne", "cost_central", "penalty", "eps_lo", "eps_hi",
                 "epsilon", "coord_bs", "coord_rps", "transfer"};
  double coord_bs = std::numeric_limits<double>::quiet_NaN();
  double coord_rps = coord_bs, transfer = coord_bs;
  if (std::isfinite(eps)) {
    const auto coord = coordinated_costs(g, {eps}, r.central);
    coord_bs = coord.bs;
    coord_rps = coord.rps;
    transfer = transfer_payment(g, {eps}, r.central);
    out.expect(eps * r.cost_central <= r.cost_rps_ne + 1e-9 &&
                   (1.0 - eps) * r.cost_central <= r.cost_bs_ne + 1e-9,
               "contract leaves a player worse off than the equilibrium");
  }
  out.rows.push_back({r.cost_bs_ne, r.cost_rps_ne, r.cost_central, r.penalty, r.epsilon_range.lo,
                      r.epsilon_range.hi, eps, coord_bs, coord_rps, transfer});
  out.expect(r.penalty >= -1e-9, "negative competition penalty");
  if (defaults_unchanged(ctx, {{"b", 10}, {"cs", 5}, {"phi", 1}, {"alpha", 0.5}}) &&
      !ctx.has("mu0_over_lambda"))
    out.expect(near(r.penalty, 0.0407, 0.0005), "penalty not within 0.0005 of 0.0407");
  return out;
}

Output run_power_split(const Context& ctx) {
  PowerSplitParams p;
  p.b_n = ctx["b"];
  p.cs_n = ctx["cs"];
  p.alpha = ctx["alpha"];
  p.mu0 = ctx["mu0"];
  p.total_lambda = ctx["lambda_bar"];
  p.p1 = ctx["p1"];
  p.p2 = ctx["p2"];
  const PowerSplit best = power_split(p);
  const double grid = p.p2 * p.total_lambda;

  Output out;
  out.columns = {"lambda_star", "cost", "grid_only_cost", "saving", "renewable_share"};
  out.rows.push_back({best.lambda, best.cost, grid, grid - best.cost, best.lambda / p.total_lambda});

  // Coarse scan as a cross-check of the golden-section result.
  const double hi = std::min(p.total_lambda, p.mu0 * (1.0 - 1e-6));
  double scan_arg = 0.0, scan_val = load_split_cost(p, 0.0);
  for (double l = 1e-3; l <= hi; l += 1e-3)
    if (const double c = load_split_cost(p, l); c < scan_val) scan_val = c, scan_arg = l;
  out.expect(near(best.lambda, scan_arg, 1e-3 + 1e-9), "golden-section result disagrees with the scan");
  const bool reference = defaults_unchanged(
      ctx, {{"b", 5}, {"cs", 5}, {"alpha", 0.5}, {"mu0", 2}, {"lambda_bar", 1.8}, {"p1", 1}});
  if (reference && ctx["p2"] == 5) out.expect(near(best.lambda, 0.67, 0.1), "lambda* not near 0.67");
  if (reference && ctx["p2"] == 10) out.expect(near(best.lambda, 1.11, 0.1), "lambda* not near 1.11");
  return out;
}

Output run_queue_validate(const Context& ctx) {
  const auto events = static_cast<std::uint64_t>(ctx["events"]);
  const auto reps = static_cast<int>(ctx["reps"]);
  const DistSpec general_arrival =
      DistSpec::hyperexp2(ctx["h2_prob"], ctx["h2_rate1"], ctx["h2_rate2"]);
  const double mean_gap = general_arrival.expected();

  Output out;
  out.columns = {"rho", "analysis_mm1", "kappa", "analysis_kappa", "sim_mm1_outstanding",
                 "sim_mm1_waiting", "sim_mm1_ci", "pdf_sup_distance", "sim_general_outstanding",
                 "sim_general_waiting", "sim_general_ci"};
  const double rhos[] = {0.39, 0.70, 0.80, 0.93};
  std::uint64_t seed = ctx.seed;
  for (double rho : rhos) {
    SimConfig mm1;
    mm1.arrival = DistSpec::exponential(1.0 / mean_gap);
    mm1.service = DistSpec::exponential(1.0 / (rho * mean_gap));
    mm1.horizon = events;
    mm1.warmup = static_cast<std::uint64_t>(ctx["warmup_fraction"] * static_cast<double>(events));
    mm1.seed = seed++;
    SimConfig general = mm1;
    general.arrival = general_arrival;
    general.service = DistSpec::truncated_normal_with_mean(rho * mean_gap, ctx["cv"]);
    general.seed = seed++;

    const SimStats a = replicate(mm1, reps, ctx.jobs);
    const SimStats b = replicate(general, reps, ctx.jobs);
    const double base = rho / (1.0 - rho);
    const double k = kappa(general.arrival.scv(), general.service.scv());
    const double pdf = empirical_pdf_compare(a, rho);
    out.rows.push_back({rho, base, k, k * base, a.mean_outstanding, a.mean_waiting, a.ci_halfwidth,
                        pdf, b.mean_outstanding, b.mean_waiting, b.ci_halfwidth});
    out.expect(std::abs(a.mean_outstanding / base - 1.0) <= 0.05,
               "M/M/1 mean outstanding off by more than 5% at rho=" + fmt(rho));
    out.expect(pdf < 0.01, "M/M/1 pmf sup-distance >= 0.01 at rho=" + fmt(rho));
    if (rho == 0.80)
      out.expect(std::abs(b.mean_outstanding / (k * base) - 1.0) <= 0.15,
                 "general-distribution run off the corrected formula by more than 15%");
  }
  return out;
}

Market market_from(const Context& ctx) {
  const auto n = static_cast<int>(ctx["n"]);
  if (n < 2 || n > 64) throw ConfigError("params.n", "'n' must lie in [2, 64]");
  Market m;
  m.mu0 = ctx["mu0"];
  m.prices = {ctx["p"], ctx["p1"], ctx["p2"]};
  for (int i = 1; i <= n; ++i) m.profiles.push_back({ctx["lambda_step"] * i, ctx["b"], i});
  validate(m);
  return m;
}

Output run_allocate(const Context& ctx) {
  const Market market = market_from(ctx);
  const OrderVector orders = truthful_orders(market);
  const Mechanism mechs[] = {Mechanism::proportional, Mechanism::pareto_priority,
                             Mechanism::adaptive_uniform};
  std::vector<AllocationResult> results;
  for (auto m : mechs) results.push_back(allocate(m, market, orders));

  Output out;
  out.columns = {"index", "lambda_bar", "order", "grant_proportional", "grant_pareto",
                 "grant_adaptive", "cost_proportional", "cost_pareto", "cost_adaptive"};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto& bs = market.profiles[i];
    std::vector<double> row{static_cast<double>(bs.index), bs.lambda_bar, orders[i]};
    for (const auto& r : results) row.push_back(r.grants[i]);
    for (const auto& r : results) row.push_back(post_allocation_cost(bs, market.prices, r.grants[i]).cost);
    out.rows.push_back(std::move(row));
  }

  const auto& adaptive = results[2];
  out.notes.push_back({"n_hat", std::to_string(adaptive.n_hat.value_or(0))});
  for (std::size_t k = 0; k < results.size(); ++k) {
    const std::string name(to_string(mechs[k]));
    out.notes.push_back({"social_cost " + name, fmt(social_cost(market, results[k].grants))});
    out.notes.push_back({"planned_cost " + name,
                         fmt(social_cost(market, results[k].grants, Valuation::planned))});
    double used = 0.0;
    bool within = true;
    for (std::size_t i = 0; i < orders.size(); ++i) {
      used += results[k].grants[i];
      within = within && results[k].grants[i] <= orders[i] + 1e-9;
    }
    out.expect(used <= market.mu0 + 1e-9 && within, name + " allocation is infeasible");
  }
  if (market.profiles.size() <= kMaxBruteForceStations)
    out.notes.push_back({"planned_cost social_optimum", fmt(social_optimum_bruteforce(market).cost)});

  if (defaults_unchanged(ctx, {{"n", 8}, {"mu0", 20}, {"p", 2}, {"p1", 1}, {"p2", 10}, {"b", 2},
                               {"lambda_step", 0.5}})) {
    out.expect(adaptive.n_hat == 5, "adaptive uniform n_hat != 5");
    const double top = *std::max_element(adaptive.grants.begin(), adaptive.grants.end());
    out.expect(near(top, 2.9654, 1e-3), "uniform grant not within 1e-3 of 2.9654");
  }
  return out;
}

Output run_audit(const Context& ctx) {
  const Market market = market_from(ctx);
  AuditSpec spec;
  spec.grid_points = static_cast<int>(ctx["grid_points"]);
  spec.perturbed_scenarios = static_cast<int>(ctx["scenarios"]);
  spec.deviation_span = ctx["span"];
  spec.perturb_span = ctx["span"];
  spec.seed = ctx.seed;
  const OrderVector orders = truthful_orders(market);

  const Mechanism mechs[] = {Mechanism::proportional, Mechanism::pareto_priority,
                             Mechanism::adaptive_uniform};
  std::vector<AuditReport> reports;
  for (auto m : mechs) reports.push_back(truthfulness_audit(market, m, spec));

  Output out;
  out.columns = {"index", "lambda_bar", "order", "gain_proportional", "gain_pareto", "gain_adaptive"};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    std::vector<double> row{static_cast<double>(market.profiles[i].index),
                            market.profiles[i].lambda_bar, orders[i]};
    for (const auto& r : reports) row.push_back(r.per_bs[i].max_improvement);
    out.rows.push_back(std::move(row));
  }
  for (const auto& r : reports)
    out.notes.push_back({"verdict " + std::string(to_string(r.mechanism)),
                         r.truthful_dominant ? "truthful-dominant" : "manipulable"});

  out.expect(reports[2].truthful_dominant, "adaptive uniform audit found a profitable deviation");
  const double demand = std::accumulate(orders.begin(), orders.end(), 0.0);
  if (demand > market.mu0)
    out.expect(!reports[1].truthful_dominant, "pareto priority audit found no profitable inflation");
  return out;
}

const std::map<std::string, Scenario>& registry() {
  static const std::map<std::string, Scenario> r = [] {
    std::map<std::string, Scenario> m;
    m["central"] = {{{"b", 10}, {"cs", 5}, {"phi", 1}}, {"mu0_over_lambda"}, run_central};
    m["nash"] = {{{"b", 10}, {"cs", 5}, {"phi", 1}, {"alpha", 0.5}}, {"mu0_over_lambda"}, run_nash};
    m["penalty-contract"] = {{{"b", 10}, {"cs", 5}, {"phi", 1}, {"alpha", 0.5}},
                             {"mu0_over_lambda", "epsilon"},
                             run_penalty_contract};
    m["power-split"] = {{{"b", 5}, {"cs", 5}, {"alpha", 0.5}, {"mu0", 2}, {"lambda_bar", 1.8},
                         {"p1", 1}, {"p2", 10}},
                        {},
                        run_power_split};
    m["queue-validate"] = {{{"events", 2e6}, {"warmup_fraction", 0.1}, {"reps", 1}, {"cv", 0.5},
                            {"h2_prob", 0.5}, {"h2_rate1", 2.3}, {"h2_rate2", 3.5}},
                           {},
                           run_queue_validate};
    const Params market = {{"n", 8}, {"mu0", 20}, {"p", 2}, {"p1", 1}, {"p2", 10}, {"b", 2},
                           {"lambda_step", 0.5}};
    m["allocate"] = {market, {}, run_allocate};
    Params audit = market;
    audit.insert({{"grid_points", 200}, {"scenarios", 20}, {"span", 2.5}});
    m["audit"] = {audit, {}, run_audit};
    return m;
  }();
  return r;
}

const Scenario& lookup(const std::string& name) {
  const auto& r = registry();
  const auto it = r.find(name);
  if (it == r.end()) throw ConfigError("scenario", "unknown scenario '" + name + "'");
  return it->second;
}

Params resolve(const Scenario& sc, const Params& overrides) {
  Params p = sc.defaults;
  for (const auto& [key, value] : overrides) {
    if (!sc.defaults.count(key) && !sc.optional_keys.count(key))
      throw ConfigError("params." + key, "unknown parameter '" + key + "' for this scenario");
    if (!std::isfinite(value)) throw ConfigError("params." + key, "'" + key + "' must be finite");
    p[key] = value;
  }
  return p;
}

std::string timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// First parameter named in a library error message, "params" if none is.
std::string offending_key(const Params& params, const std::string& message) {
  std::string word;
  for (std::size_t i = 0; i <= message.size(); ++i) {
    const char c = i < message.size() ? message[i] : ' ';
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      word += c;
      continue;
    }
    if (params.count(word)) return "params." + word;
    word.clear();
  }
  return "params";
}

// Runs one scenario and prefixes every row with the resolved parameters.
ResultTable run_one(const ScenarioConfig& config, const Params& overrides) {
  const Scenario& sc = lookup(config.scenario);
  Params params = resolve(sc, overrides);
  if (params.count("mu0_over_lambda")) params["phi"] = params["mu0_over_lambda"] - 1.0;
  Output out;
  try {
    out = sc.run(Context{params, config.seed, config.jobs});
  } catch (const DomainError& e) {
    throw ConfigError(offending_key(params, e.what()), std::string("invalid parameters: ") + e.what());
  } catch (const DegenerateError& e) {
    throw ConfigError(offending_key(params, e.what()), std::string("degenerate parameters: ") + e.what());
  }

  ResultTable t;
  for (const auto& [key, value] : params) t.columns.push_back(key);
  t.columns.insert(t.columns.end(), out.columns.begin(), out.columns.end());
  for (auto& row : out.rows) {
    std::vector<double> full;
    for (const auto& [key, value] : params) full.push_back(value);
    full.insert(full.end(), row.begin(), row.end());
    t.add_row(std::move(full));
  }
  t.provenance = std::move(out.notes);
  t.check_failures = std::move(out.failures);
  return t;
}

std::vector<std::pair<std::string, std::string>> header(const ScenarioConfig& config) {
  return {{"scenario", config.scenario},
          {"seed", std::to_string(config.seed)},
          {"toolkit_version", kToolkitVersion},
          {"timestamp", timestamp()}};
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, sc] : registry()) v.push_back(name);
    return v;
  }();
  return names;
}

std::map<std::string, double> default_params(const std::string& scenario) {
  return lookup(scenario).defaults;
}

ResultTable run_scenario(const ScenarioConfig& config) {
  ResultTable t = run_one(config, config.params);
  auto prov = header(config);
  prov.insert(prov.end(), t.provenance.begin(), t.provenance.end());
  t.provenance = std::move(prov);
  return t;
}

ResultTable sweep(const ScenarioConfig& config) {
  if (!config.sweep) throw ConfigError("sweep", "no sweep block given");
  const SweepSpec& spec = *config.sweep;
  const std::vector<double> values = spec.values();
  resolve(lookup(config.scenario), {{spec.param, values.front()}});

  std::vector<ResultTable> parts(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        Params p = config.params;
        p[spec.param] = values[i];
        parts[i] = run_one(config, p);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int pool = std::clamp<int>(config.jobs, 1, static_cast<int>(values.size()));
  std::vector<std::thread> threads;
  for (int w = 1; w < pool; ++w) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ResultTable t;
  t.columns = parts.front().columns;
  t.provenance = header(config);
  t.provenance.push_back({"sweep", spec.param + " from " + fmt(spec.from) + " to " + fmt(spec.to) +
                                       " step " + fmt(spec.step)});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (auto& row : parts[i].rows) t.add_row(std::move(row));
    for (const auto& [key, value] : parts[i].provenance)
      t.provenance.push_back({spec.param + "=" + fmt(values[i]) + " " + key, value});
    for (const auto& f : parts[i].check_failures)
      t.check_failures.push_back(spec.param + "=" + fmt(values[i]) + ": " + f);
  }
  return t;
}

}  // namespace greenq::bench
