#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmlab/distributions.hpp"
#include "bmlab/equilibrium.hpp"
#include "bmlab/mechanisms.hpp"

namespace bmlab {

/// Worst ratio v_i(q1) / v_i(q2) over advertisers and query pairs sharing a
/// keyword neighborhood. Infinite when a neighborhood mixes a positive and a
/// zero value for one advertiser; 1 for a fully homogeneous scenario.
double homogeneity(const Scenario& scenario);

/// Same ratio with support sup in the numerator and mean in the
/// denominator. Throws UnboundedSupport for unbounded value distributions.
double expected_homogeneity(const BayesScenario& bayes);

struct BoundInputs {
  double c = 1.0;
  double beta = 1.0;
  double alpha = 1.0;
  double eta = 1.0;
  double lambda = 1.0 - 1.0 / 2.718281828459045235;
  double mu = 1.0;
};

struct BoundSet {
  BoundInputs inputs;
  double pure_single = 0.0;      ///< c / beta
  double pure_multi = 0.0;       ///< c (beta + 1) / beta
  double bayes_single = 0.0;     ///< semi-smooth bound with (lambda, mu) = (1, 1)
  double bayes_multi = 0.0;      ///< c (beta mu + 1) / (beta lambda)
  double sbm_pure = 0.0;         ///< (c^2 + c) / alpha
  double revenue_single = 0.0;   ///< beta / (1 + beta) / (eta (c e)^2)
  double revenue_multi = 0.0;    ///< half the single-slot fraction
};

/// Every welfare and revenue bound for one set of constants. Throws
/// DomainError unless c >= 1, beta and alpha in (0, 1], eta >= 1,
/// lambda in (0, 1] and mu >= 0.
BoundSet compute_bounds(const BoundInputs& inputs);

struct RatioReport {
  std::string scenario;
  std::string metric;
  double optimal = 0.0;
  double achieved = 0.0;  ///< worst equilibrium welfare, or expected revenue
  double empirical = 0.0;
  std::optional<double> bound;
  std::optional<bool> satisfied;  ///< empty when the bound is not finite
  bool exhaustive = true;
  std::string notes;
};

struct PoaOptions {
  std::string label = "scenario";
  double eps_cont = 0.0;  ///< added to the bound before comparing
  bool exhaustive = true;
  double tolerance = 1e-9;
};

/// SW(OPT) over the worst equilibrium welfare, against c / beta for single
/// slot and c (beta + 1) / beta otherwise. Throws InvalidInput on an empty
/// list; a zero-welfare equilibrium yields an infinite ratio and a note.
RatioReport empirical_poa(const Scenario& scenario, std::span<const EquilibriumReport> equilibria,
                          const PoaOptions& options = {});

struct RevenueReport {
  RatioReport ratio;  ///< empirical = E[SW(OPT)] / E[R_r]
  double revenue = 0.0;
  double revenue_se = 0.0;
  double zero_reserve_revenue = 0.0;
  double zero_reserve_se = 0.0;
  double welfare = 0.0;  ///< E[SW(OPT)]
  double welfare_se = 0.0;
  double fraction = 0.0;        ///< E[R_r] / E[SW(OPT)]
  double fraction_bound = 0.0;  ///< guaranteed fraction
  BoundInputs inputs;
};

/// Monte Carlo over types: everyone bids by the strategy, revenue under the
/// reserve versus optimal welfare. c comes from expected homogeneity (1 if
/// the support is unbounded, noted), beta from the mean scenario.
RevenueReport empirical_revenue_ratio(const BayesScenario& bayes, const Strategy& strategy,
                                      const ReserveVector& reserve, std::size_t samples, Rng& rng,
                                      double eta = 1.0, const std::string& label = "scenario");

struct Example5Report {
  double eps1 = 0.0, eps2 = 0.0;
  int M = 0;
  double phi1_at_eps1 = 0.0;
  double phi2_low = 0.0;   ///< phi_2(2^M - eps2)
  double phi2_high = 0.0;  ///< phi_2(2^M - eps2 / 2)
  double r1 = 0.0, r2 = 0.0;
  double c = 0.0;
  double revenue = 0.0;
  double optimal_welfare = 0.0;
  double ratio = 0.0;  ///< revenue / optimal welfare
  bool signs_ok = false;
  bool reserves_ok = false;
  bool homogeneity_ok = false;
};

struct Example5 {
  BayesScenario bayes;
  Example5Report report;
};

/// One advertiser, two queries each feeding its own keyword, kappa = 1,
/// one slot; keyword 1 values are small and spread, keyword 2 values sit
/// just under 2^M. Revenue assumes the advertiser bids the keyword with the
/// larger surplus over its reserve. Throws ParameterRange unless
/// 0 < eps1 < 0.1, 0 < eps2 < eps1 / 10 and M > 10.
Example5 example5_scenario(double eps1, double eps2, int M);

}  // namespace bmlab
