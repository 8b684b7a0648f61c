#include "bmlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bmlab/error.hpp"
#include "bmlab/expressiveness.hpp"
#include "bmlab/numerics.hpp"
#include "bmlab/reserve.hpp"

namespace bmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* field, const std::string& detail) {
  if (!ok) throw Error(Errc::DomainError, field, detail);
}

struct MeanAndError {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double std_error() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

// Ratio over ordered pairs inside each keyword neighborhood; numerator and
// denominator are supplied per (advertiser, query).
template <class Top, class Bottom>
double neighborhood_ratio(const Market& market, Index advertisers, Top top, Bottom bottom) {
  const auto& g = market.graph();
  double c = 1.0;
  for (Index s = 0; s < g.num_keywords(); ++s) {
    const auto qs = g.queries_of(s);
    for (Index i = 0; i < advertisers; ++i) {
      for (Index q1 : qs) {
        const double num = top(i, q1);
        for (Index q2 : qs) {
          const double den = bottom(i, q2);
          if (den > 0.0) c = std::max(c, num / den);
          else if (num > 0.0) return kInf;
        }
      }
    }
  }
  return c;
}

}  // namespace

double homogeneity(const Scenario& scenario) {
  const auto& v = scenario.values();
  const auto value = [&](Index i, Index q) { return v(i, q); };
  return neighborhood_ratio(scenario.market(), scenario.num_advertisers(), value, value);
}

double expected_homogeneity(const BayesScenario& bayes) {
  for (Index i = 0; i < bayes.num_advertisers(); ++i) {
    for (Index q = 0; q < bayes.market().num_queries(); ++q) {
      if (!std::isfinite(bayes.value_dist(i, q).upper())) {
        throw Error(Errc::UnboundedSupport, bayes.advertiser_ids()[static_cast<std::size_t>(i)] + "/" +
                                                bayes.market().graph().query_id(q),
                    "support has no finite upper bound");
      }
    }
  }
  return neighborhood_ratio(
      bayes.market(), bayes.num_advertisers(),
      [&](Index i, Index q) { return bayes.value_dist(i, q).upper(); },
      [&](Index i, Index q) { return bayes.value_dist(i, q).mean(); });
}

BoundSet compute_bounds(const BoundInputs& in) {
  require(in.c >= 1.0 && std::isfinite(in.c), "c", "must be finite and >= 1");
  require(in.beta > 0.0 && in.beta <= 1.0, "beta", "must lie in (0, 1]");
  require(in.alpha > 0.0 && in.alpha <= 1.0, "alpha", "must lie in (0, 1]");
  require(in.eta >= 1.0 && std::isfinite(in.eta), "eta", "must be finite and >= 1");
  require(in.lambda > 0.0 && in.lambda <= 1.0, "lambda", "must lie in (0, 1]");
  require(in.mu >= 0.0 && std::isfinite(in.mu), "mu", "must be finite and >= 0");

  BoundSet b;
  b.inputs = in;
  const double c = in.c, beta = in.beta;
  b.pure_single = c / beta;
  b.pure_multi = c * (beta + 1.0) / beta;
  b.bayes_single = c * (beta + 1.0) / beta;
  b.bayes_multi = c * (beta * in.mu + 1.0) / (beta * in.lambda);
  b.sbm_pure = (c * c + c) / in.alpha;
  const double ce = c * std::numbers::e;
  b.revenue_single = beta / (1.0 + beta) / (in.eta * ce * ce);
  b.revenue_multi = b.revenue_single / 2.0;
  return b;
}

RatioReport empirical_poa(const Scenario& scenario, std::span<const EquilibriumReport> equilibria,
                          const PoaOptions& options) {
  if (equilibria.empty()) throw Error(Errc::InvalidInput, options.label, "no equilibria to evaluate");
  RatioReport rep;
  rep.scenario = options.label;
  rep.metric = "pure_poa";
  rep.exhaustive = options.exhaustive;
  rep.optimal = optimal_welfare(scenario);
  rep.achieved = kInf;
  for (const auto& eq : equilibria) rep.achieved = std::min(rep.achieved, eq.welfare);

  std::vector<std::string> notes;
  if (rep.achieved > 0.0) {
    rep.empirical = rep.optimal / rep.achieved;
  } else {
    rep.empirical = kInf;
    notes.push_back(std::string(to_string(Errc::ZeroWelfareEquilibrium)));
  }

  const double c = homogeneity(scenario);
  const double beta = kl_expressiveness(scenario);
  const bool single = scenario.market().single_slot();
  if (std::isfinite(c)) {
    const BoundSet bounds = compute_bounds({c, beta});
    rep.bound = single ? bounds.pure_single : bounds.pure_multi;
    rep.satisfied = rep.empirical <= *rep.bound + options.eps_cont + options.tolerance;
  } else {
    notes.push_back("homogeneity not finite; bound skipped");
  }
  if (!options.exhaustive) notes.push_back("heuristic search; ratio is a lower estimate");
  for (std::size_t k = 0; k < notes.size(); ++k) rep.notes += (k ? "; " : "") + notes[k];
  return rep;
}

RevenueReport empirical_revenue_ratio(const BayesScenario& bayes, const Strategy& strategy,
                                      const ReserveVector& reserve, std::size_t samples, Rng& rng,
                                      double eta, const std::string& label) {
  if (samples == 0) throw Error(Errc::InvalidInput, "samples", "must be positive");
  const Market& market = bayes.market();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(market.num_keywords());
  MeanAndError rev, rev0, opt;
  for (std::size_t t = 0; t < samples; ++t) {
    const Scenario sc = bayes.realize(bayes.sample_profile(rng));
    Eigen::MatrixXd b(sc.num_advertisers(), market.num_keywords());
    for (Index i = 0; i < b.rows(); ++i) b.row(i) = strategy(i, sc.keyword_values().row(i));
    const BidProfile bids(b);
    rev.add(revenue_with_reserve(sc, bids, reserve));
    rev0.add(revenue_with_reserve(sc, bids, zero));
    opt.add(optimal_welfare(sc));
  }

  RevenueReport out;
  out.revenue = rev.mean();
  out.revenue_se = rev.std_error();
  out.zero_reserve_revenue = rev0.mean();
  out.zero_reserve_se = rev0.std_error();
  out.welfare = opt.mean();
  out.welfare_se = opt.std_error();
  out.fraction = out.welfare > 0.0 ? out.revenue / out.welfare : 0.0;

  std::vector<std::string> notes;
  BoundInputs in;
  try {
    in.c = expected_homogeneity(bayes);
  } catch (const Error& e) {
    if (e.code() != Errc::UnboundedSupport) throw;
    in.c = kInf;
    notes.push_back("unbounded support; bound skipped");
  }
  in.beta = kl_expressiveness(bayes.mean_scenario());
  in.eta = eta;
  out.inputs = in;

  RatioReport& r = out.ratio;
  r.scenario = label;
  r.metric = "revenue_ratio";
  r.optimal = out.welfare;
  r.achieved = out.revenue;
  r.empirical = out.revenue > 0.0 ? out.welfare / out.revenue : kInf;
  if (std::isfinite(in.c)) {
    const BoundSet bounds = compute_bounds(in);
    out.fraction_bound = market.single_slot() ? bounds.revenue_single : bounds.revenue_multi;
    r.bound = 1.0 / out.fraction_bound;
    r.satisfied = out.fraction >= out.fraction_bound;
  }
  notes.push_back("zero-reserve revenue " + std::to_string(out.zero_reserve_revenue));
  for (std::size_t k = 0; k < notes.size(); ++k) r.notes += (k ? "; " : "") + notes[k];
  return out;
}

Example5 example5_scenario(double eps1, double eps2, int M) {
  if (!(eps1 > 0.0 && eps1 < 0.1 && eps2 > 0.0 && eps2 < eps1 / 10.0 && M > 10)) {
    throw Error(Errc::ParameterRange, "example5",
                "requires 0 < eps1 < 0.1, 0 < eps2 < eps1/10 and M > 10");
  }
  // keyword 1: a steep power ramp carrying mass eps1 up to eps1, then a
  // plateau at 1/eps1
  const double top1 = 2.0 * eps1 - eps1 * eps1;
  auto t1 = Distribution::piecewise({{0.0, eps1, 0.0, 1.0 / eps1, 1.0 / eps1 - 1.0},
                                     {eps1, top1, 1.0 / eps1, 0.0, 0.0}});
  // keyword 2: mass eps2 below a, then two linear pieces through the
  // prescribed density values at a and m
  const double top2 = std::ldexp(1.0, M);
  const double h = std::ldexp(1.0, -(M + 1));
  const double a = top2 - eps2, m = top2 - eps2 / 2.0;
  // masses from the representable widths, not the nominal eps2 / 2
  const double w2 = m - a, w3 = top2 - m;
  const double tail = (1.0 - eps2 - 1.5 * h * w2 - 2.0 * h * w3) * 2.0 / w3;
  auto t2 = Distribution::piecewise({{0.0, a, 0.0, h, h * a / eps2 - 1.0},
                                     {a, m, h, h, 1.0},
                                     {m, top2, 2.0 * h, tail, 1.0}});

  RawScenario raw;
  raw.queries = {"q1", "q2"};
  raw.keywords = {"s1", "s2"};
  raw.edges = {{"q1", "s1"}, {"q2", "s2"}};
  raw.query_dist = {{"q1", 0.5}, {"q2", 0.5}};
  raw.matching["q1"]["s1"] = 1.0;
  raw.matching["q2"]["s2"] = 1.0;
  raw.slot_weights = {1.0};
  raw.kappa = 1;
  BayesScenario bayes(build_market(raw), {"a1"}, {{t1, t2}});

  Example5Report rep;
  rep.eps1 = eps1;
  rep.eps2 = eps2;
  rep.M = M;
  rep.phi1_at_eps1 = virtual_value(t1, eps1);
  rep.phi2_low = virtual_value(t2, a);
  rep.phi2_high = virtual_value(t2, m);
  rep.signs_ok = rep.phi1_at_eps1 > 0.0 && rep.phi2_low < 0.0 && rep.phi2_high > 0.0;
  rep.r1 = myerson_reserve(t1);
  rep.r2 = myerson_reserve(t2);
  rep.reserves_ok = rep.r1 < eps1 && a < rep.r2 && rep.r2 < m;
  rep.c = expected_homogeneity(bayes);
  rep.homogeneity_ok = rep.c <= 2.0;

  // The lone advertiser bids the keyword with the larger surplus v - r
  // (keyword 1 on ties) and pays that keyword's reserve.
  const double r1 = rep.r1, r2 = rep.r2, shift = r2 - r1;
  std::vector<double> breaks = {eps1};
  for (double b : {a, m, top2}) breaks.push_back(b - shift);
  std::sort(breaks.begin(), breaks.end());
  const double pick1 = integrate_with_breaks(
      [&](double v) { return t1.pdf(v) * t2.cdf(v + shift); }, r1, top1, breaks, 1e-14);
  const double pick2_given_high = integrate_with_breaks(
      [&](double v) { return t1.pdf(v) * t2.sf(v + shift); }, r1, top1, breaks, 1e-14);
  const double pick2 = t1.cdf(r1) * t2.sf(r2) + pick2_given_high;
  rep.revenue = 0.5 * r1 * pick1 + 0.5 * r2 * pick2;
  rep.optimal_welfare = 0.5 * t1.mean() + 0.5 * t2.mean();
  rep.ratio = rep.revenue / rep.optimal_welfare;
  return {std::move(bayes), rep};
}

}  // namespace bmlab
