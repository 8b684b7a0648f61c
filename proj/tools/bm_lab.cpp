// bm-lab: command-line driver for the broad-match auction laboratory.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bmlab/analysis.hpp"
#include "bmlab/equilibrium.hpp"
#include "bmlab/error.hpp"
#include "bmlab/expressiveness.hpp"
#include "bmlab/io.hpp"
#include "bmlab/reserve.hpp"

namespace fs = std::filesystem;
using namespace bmlab;

namespace {

struct RunConfig {
  std::string scenario;
  std::string bids;
  std::string corpus;
  std::string generate_corpus;
  std::string out;
  std::string mode = "enumerate";
  std::uint64_t seed = kDefaultSeed;
  std::size_t rounds = 0;
  std::size_t samples = 100000;
  double grid_delta = 1.0;
  int max_iters = 100;
  double epsilon = -1.0;
  bool conservative = false;
  bool winner_truthful = false;
  double eps1 = 0.01;
  double eps2 = 1e-5;
  int M = 11;
  std::vector<double> thetas = default_theta_grid();
};

// Writes to <out>/<name> when --out is set, and always echoes to stdout.
void emit(const RunConfig& cfg, const std::string& name, const std::string& text) {
  std::cout << text;
  if (cfg.out.empty()) return;
  fs::create_directories(cfg.out);
  std::ofstream f(fs::path(cfg.out) / name, std::ios::binary);
  f << text;
  if (!f) throw Error(Errc::InvalidInput, (fs::path(cfg.out) / name).string(), "cannot write output");
}

void write_only(const RunConfig& cfg, const std::string& name, const std::string& text) {
  if (cfg.out.empty()) return;
  fs::create_directories(cfg.out);
  std::ofstream f(fs::path(cfg.out) / name, std::ios::binary);
  f << text;
}

Scenario require_scenario(const RunConfig& cfg) {
  if (cfg.scenario.empty()) throw Error(Errc::InvalidInput, "--scenario", "required");
  return build_scenario(load_scenario(cfg.scenario));
}

BidGrid grid_of(const RunConfig& cfg) { return BidGrid{cfg.grid_delta, std::nullopt, cfg.conservative}; }

double epsilon_of(const RunConfig& cfg, const Scenario& sc) {
  return cfg.epsilon >= 0.0 ? cfg.epsilon : default_epsilon(sc);
}

int cmd_simulate(const RunConfig& cfg) {
  const Scenario sc = require_scenario(cfg);
  if (cfg.bids.empty()) throw Error(Errc::InvalidInput, "--bids", "required");
  const BidProfile bids = load_bid_profile(cfg.bids, sc);
  const Market& market = sc.market();
  Rng rng(cfg.seed);

  std::ostringstream log;
  log << kRoundLogHeader << '\n';
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const auto mass = market.query_mass();
    const auto q = static_cast<Index>(sample_discrete(std::span<const double>(mass.data(), mass.size()), rng));
    const auto outcome = pbm_run_round(sc, bids, q, rng);
    write_round_log(log, sc, r + 1, outcome);
    sum += outcome.welfare;
    sum_sq += outcome.welfare * outcome.welfare;
  }
  write_only(cfg, "rounds.csv", log.str());

  // a round's welfare never exceeds the full slot ladder filled at the top value
  double cap = 0.0;
  const double vmax = sc.values().maxCoeff();
  for (Index k = 0; k < market.slot_weights().size(); ++k) cap += market.slot_weights()[k] * vmax;

  const double exact = pbm_expected_welfare(sc, bids);
  ordered_json summary;
  summary["rounds"] = cfg.rounds;
  summary["seed"] = cfg.seed;
  summary["expected_welfare"] = exact;
  if (cfg.rounds > 0) {
    const double n = static_cast<double>(cfg.rounds);
    const double mean = sum / n;
    const double se = cfg.rounds > 1 ? std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / (n - 1)) : 0.0;
    const double tol = 4.0 * cap / std::sqrt(n);
    summary["empirical_welfare"] = mean;
    summary["std_error"] = se;
    summary["tolerance"] = tol;
    summary["within_tolerance"] = std::abs(mean - exact) <= tol;
  }
  emit(cfg, "summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_equilibrium(const RunConfig& cfg) {
  const Scenario sc = require_scenario(cfg);
  const BidGrid grid = grid_of(cfg);
  const double eps = epsilon_of(cfg, sc);
  ordered_json j;
  j["mode"] = cfg.mode;
  j["grid"] = {{"delta", grid.delta}, {"conservative", grid.conservative}};
  j["epsilon"] = eps;
  if (cfg.mode == "dynamics") {
    const auto rep = best_response_dynamics(sc, BidProfile::empty(sc), grid, eps, cfg.max_iters);
    j["report"] = equilibrium_report_to_json(sc, rep);
  } else if (cfg.mode == "enumerate") {
    EnumerationOptions opt;
    opt.winner_truthful = cfg.winner_truthful;
    opt.epsilon = eps;
    const auto res = enumerate_pure_nash(sc, grid, opt);
    j["count"] = res.count;
    j["exhaustive"] = res.exhaustive;
    j["eps_cont"] = res.eps_cont;
    j["profiles_examined"] = res.profiles_examined;
    j["worst"] = res.worst ? equilibrium_report_to_json(sc, *res.worst) : ordered_json(nullptr);
    j["equilibria"] = ordered_json::array();
    for (const auto& eq : res.equilibria) j["equilibria"].push_back(equilibrium_report_to_json(sc, eq));
  } else if (cfg.mode == "single-slot-dominant") {
    EquilibriumReport rep{single_slot_dominant_profile(sc, top_kappa_keywords(sc)), {}, true, 0, 0.0};
    rep.regrets = regrets(sc, rep.profile, grid);
    rep.welfare = pbm_expected_welfare(sc, rep.profile);
    j["report"] = equilibrium_report_to_json(sc, rep);
  } else {
    throw Error(Errc::InvalidInput, "--mode", "expected dynamics, enumerate or single-slot-dominant");
  }
  emit(cfg, "equilibrium.json", j.dump(2) + "\n");
  return 0;
}

std::string bound_table(const BoundSet& b) {
  std::ostringstream t;
  t << "setting,pure_poa,bayes_nash_poa,revenue_fraction\n";
  t << "single_slot," << format_number(b.pure_single) << ',' << format_number(b.bayes_single) << ','
    << format_number(b.revenue_single) << '\n';
  t << "multi_slot," << format_number(b.pure_multi) << ',' << format_number(b.bayes_multi) << ','
    << format_number(b.revenue_multi) << '\n';
  t << "sbm," << format_number(b.sbm_pure) << ",,\n";
  return t.str();
}

int cmd_poa(const RunConfig& cfg) {
  const Scenario sc = require_scenario(cfg);
  const BidGrid grid = grid_of(cfg);
  EnumerationOptions opt;
  opt.winner_truthful = cfg.winner_truthful;
  opt.epsilon = epsilon_of(cfg, sc);
  const auto res = enumerate_pure_nash(sc, grid, opt);
  PoaOptions popt;
  popt.label = fs::path(cfg.scenario).stem().string();
  popt.eps_cont = res.eps_cont;
  popt.exhaustive = res.exhaustive;
  std::string csv = std::string(kRatioHeader) + "\n";
  if (res.count == 0) {
    csv += popt.label + ",pure_poa,,,,no equilibrium on the grid\n";
  } else {
    csv += ratio_csv_row(empirical_poa(sc, res.equilibria, popt)) + "\n";
  }
  emit(cfg, "poa.csv", csv);
  const double c = homogeneity(sc);
  if (std::isfinite(c)) {
    BoundInputs in;
    in.c = c;
    in.beta = kl_expressiveness(sc);
    write_only(cfg, "bounds.csv", bound_table(compute_bounds(in)));
  }
  return 0;
}

int cmd_revenue(const RunConfig& cfg) {
  if (cfg.scenario.empty()) throw Error(Errc::InvalidInput, "--scenario", "required");
  const BayesScenario bayes = load_bayes_scenario(cfg.scenario);
  Rng rng(cfg.seed);
  const ReserveVector reserve = keyword_reserves(bayes, cfg.samples, rng);
  // eta: worst estimated slope bound over the distributions that have one
  double eta = 1.0;
  for (Index i = 0; i < bayes.num_advertisers(); ++i) {
    for (Index q = 0; q < bayes.market().num_queries(); ++q) {
      const auto& d = bayes.value_dist(i, q);
      if (d.has_density()) eta = std::max(eta, mhr_bounded_derivative_check(d).eta_estimate);
    }
  }
  const std::string label = fs::path(cfg.scenario).stem().string();
  const auto rep = empirical_revenue_ratio(bayes, truthful_strategy(bayes.market_ptr()), reserve, cfg.samples, rng,
                                           eta, label);
  RatioReport zero;
  zero.scenario = label;
  zero.metric = "revenue_ratio_zero_reserve";
  zero.empirical = rep.zero_reserve_revenue > 0.0 ? rep.welfare / rep.zero_reserve_revenue
                                                  : std::numeric_limits<double>::infinity();
  zero.notes = "baseline without reserve";
  RatioReport frac;
  frac.scenario = label;
  frac.metric = "revenue_fraction";
  frac.empirical = rep.fraction;
  frac.bound = rep.fraction_bound;
  frac.satisfied = rep.ratio.satisfied;
  frac.notes = "revenue se " + format_number(rep.revenue_se) + "; c " + format_number(rep.inputs.c) +
               "; beta " + format_number(rep.inputs.beta) + "; eta " + format_number(eta);
  std::string csv = std::string(kRatioHeader) + "\n" + ratio_csv_row(rep.ratio) + "\n" + ratio_csv_row(zero) + "\n" +
                    ratio_csv_row(frac) + "\n";
  emit(cfg, "revenue.csv", csv);
  return 0;
}

int cmd_counterexample(const RunConfig& cfg) {
  const auto ex = example5_scenario(cfg.eps1, cfg.eps2, cfg.M);
  const auto& r = ex.report;
  std::ostringstream t;
  auto check = [&](const std::string& what, bool ok) { t << (ok ? "[ok]   " : "[FAIL] ") << what << '\n'; };
  t << "eps1 = " << format_number(r.eps1) << ", eps2 = " << format_number(r.eps2) << ", M = " << r.M << "\n";
  check("phi_1(eps1) = " + format_number(r.phi1_at_eps1) + " > 0", r.phi1_at_eps1 > 0);
  check("phi_2(2^M - eps2) = " + format_number(r.phi2_low) + " < 0", r.phi2_low < 0);
  check("phi_2(2^M - eps2/2) = " + format_number(r.phi2_high) + " > 0", r.phi2_high > 0);
  check("r_1 = " + format_number(r.r1) + " < eps1", r.r1 < r.eps1);
  check("2^M - eps2 < r_2 = " + format_number(r.r2) + " < 2^M - eps2/2", r.reserves_ok);
  check("c = " + format_number(r.c) + " <= 2", r.homogeneity_ok);
  t << "revenue = " << format_number(r.revenue) << ", optimal welfare = " << format_number(r.optimal_welfare)
    << ", ratio = " << format_number(r.ratio) << "\n\n";
  t << "eps1,eps2,ratio\n";
  for (double e1 : {0.05, 0.01, 0.002}) {
    const double e2 = e1 * e1 / 10.0;
    t << format_number(e1) << ',' << format_number(e2) << ','
      << format_number(example5_scenario(e1, e2, cfg.M).report.ratio) << '\n';
  }
  emit(cfg, "counterexample.txt", t.str());
  return r.signs_ok && r.reserves_ok && r.homogeneity_ok ? 0 : 1;
}

int cmd_expressiveness(const RunConfig& cfg) {
  std::string dir = cfg.corpus;
  if (!cfg.generate_corpus.empty()) {
    SyntheticCorpusOptions opt;
    opt.seed = cfg.seed;
    write_corpus(synthetic_corpus(opt), cfg.generate_corpus);
    if (dir.empty()) dir = cfg.generate_corpus;
  }
  if (dir.empty()) throw Error(Errc::InvalidInput, "--corpus", "required");
  for (double th : cfg.thetas) {
    if (!(th >= 0.0 && th < 1.0)) throw Error(Errc::InvalidInput, "--theta", "must lie in [0, 1)");
  }
  const auto markets = extract_micro_markets(read_corpus(dir));
  const auto table = expressiveness_sweep(markets, cfg.thetas);
  std::ostringstream t;
  write_expressiveness_table(t, table);
  emit(cfg, "expressiveness.csv", t.str());

  std::ostringstream p;
  p << "term,theta,kappa,gamma,alpha,beta,lower_ok,upper_ok\n";
  std::size_t violations = 0;
  for (const auto& e : table.prop_a1) {
    p << e.term << ',' << format_number(e.theta) << ',' << e.kappa << ',' << e.report.gamma << ','
      << format_number(e.report.alpha) << ',' << format_number(e.report.beta) << ','
      << (e.report.lower_ok ? "true" : "false") << ',' << (e.report.upper_ok ? "true" : "false") << '\n';
    violations += !(e.report.lower_ok && e.report.upper_ok);
  }
  write_only(cfg, "sandwich.csv", p.str());
  for (const auto& s : table.skipped) std::cerr << "skipped " << s << '\n';
  std::cerr << markets.size() << " markets, " << table.skipped.size() << " skipped, " << violations
            << " alpha/beta sandwich violations\n";
  return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broad-match sponsored search auction laboratory"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults; flags win");
  RunConfig cfg;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", cfg.scenario, "Scenario JSON file");
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--out", cfg.out, "Output directory (created if absent)");
  };
  auto grid = [&](CLI::App* sub) {
    sub->add_option("--grid-delta", cfg.grid_delta, "Bid grid step")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", cfg.epsilon, "Equilibrium tolerance (default 1e-9 * max value)");
    sub->add_flag("--conservative", cfg.conservative, "Only bids at or below value");
    sub->add_flag("--winner-truthful", cfg.winner_truthful, "Keep profiles whose winners bid their value");
  };

  auto* sim = app.add_subcommand("simulate", "Run PBM-GSP rounds and compare with expected welfare");
  common(sim);
  sim->add_option("--bids", cfg.bids, "Bid profile JSON file");
  sim->add_option("--rounds", cfg.rounds, "Number of rounds")->capture_default_str();

  auto* eq = app.add_subcommand("equilibrium", "Pure Nash search on the bid grid");
  common(eq);
  grid(eq);
  eq->add_option("--mode", cfg.mode, "dynamics | enumerate | single-slot-dominant")
      ->check(CLI::IsMember({"dynamics", "enumerate", "single-slot-dominant"}))
      ->capture_default_str();
  eq->add_option("--max-iters", cfg.max_iters, "Best-response sweeps")->capture_default_str();

  auto* poa = app.add_subcommand("poa", "Empirical price of anarchy against the bounds");
  common(poa);
  grid(poa);

  auto* rev = app.add_subcommand("revenue", "Revenue with Myerson reserves against the guarantee");
  common(rev);
  rev->add_option("--samples", cfg.samples, "Monte Carlo type samples")->capture_default_str();

  auto* cex = app.add_subcommand("counterexample", "Low-revenue instance with exact reserves");
  cex->add_option("--eps1", cfg.eps1, "eps1")->capture_default_str();
  cex->add_option("--eps2", cfg.eps2, "eps2")->capture_default_str();
  cex->add_option("--M", cfg.M, "log2 of the high value")->capture_default_str();
  cex->add_option("--out", cfg.out, "Output directory");

  auto* ex = app.add_subcommand("expressiveness", "Alpha and beta sweep over a query/bid corpus");
  ex->add_option("--corpus", cfg.corpus, "Directory with bids.csv and queries.csv");
  ex->add_option("--generate-corpus", cfg.generate_corpus, "Write the synthetic corpus here first");
  ex->add_option("--theta", cfg.thetas, "Similarity thresholds (default 0.9 ... 0)");
  ex->add_option("--seed", cfg.seed, "Seed for --generate-corpus")->capture_default_str();
  ex->add_option("--out", cfg.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(cfg);
    if (eq->parsed()) return cmd_equilibrium(cfg);
    if (poa->parsed()) return cmd_poa(cfg);
    if (rev->parsed()) return cmd_revenue(cfg);
    if (cex->parsed()) return cmd_counterexample(cfg);
    if (ex->parsed()) return cmd_expressiveness(cfg);
  } catch (const Error& e) {
    std::cerr << "bm-lab: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "bm-lab: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
