#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bmlab/distributions.hpp"
#include "bmlab/mechanisms.hpp"

namespace bmlab {

/// phi(v) = v - (1 - T(v)) / t(v). Throws ZeroDensity when t(v) = 0 and
/// DomainError for distributions without a density.
double virtual_value(const Distribution& dist, double v);

/// Analytic phi'(v) = 2 + (1 - T(v)) t'(v) / t(v)^2.
double virtual_value_slope(const Distribution& dist, double v);

/// Root of phi on the support by bisection. Empirical distributions have no
/// phi; for them the reserve is the sample point maximizing r * P(v >= r).
/// Throws NoRoot when phi keeps one sign on the search interval.
double myerson_reserve(const Distribution& dist);

struct VirtualValueReport {
  std::string subject;  ///< keyword or family label
  double reserve = 0.0;
  double min_slope = 0.0;     ///< central-difference min of phi' over v >= 0
  double eta_estimate = 0.0;  ///< central-difference max of phi' over v >= reserve
  double eta_exact = 0.0;     ///< max of the analytic slope on the same grid
  bool mhr_ok = false;
  std::vector<std::pair<double, double>> grid;  ///< (v, phi(v))
};

/// Samples phi on `resolution` evenly spaced points of the working support.
/// mhr_ok iff the sampled slope never drops below 1 - tol.
VirtualValueReport mhr_bounded_derivative_check(const Distribution& dist, int resolution = 10000,
                                                double tol = 1e-6);

/// Empirical distribution of one advertiser's keyword value v^s, obtained by
/// drawing query values from F and averaging with the keyword's weights.
Distribution induced_keyword_distribution(const BayesScenario& bayes, Index keyword,
                                          std::size_t samples, Rng& rng, Index advertiser = 0);

/// Per-keyword Myerson reserves. A keyword fed by one query uses that query's
/// distribution for advertiser 0 directly; otherwise the induced empirical
/// distribution is used.
ReserveVector keyword_reserves(const BayesScenario& bayes, std::size_t samples, Rng& rng);

}  // namespace bmlab
