#pragma once

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bmlab/market.hpp"
#include "bmlab/random.hpp"

namespace bmlab {

struct UniformFamily {
  double lo;
  double hi;
};

struct ExponentialFamily {
  double rate;
};

struct TruncatedExponentialFamily {
  double rate;
  double hi;
};

/// Density base + amp * u^power on [x0, x1), u = (x - x0) / (x1 - x0).
/// power = 0 with amp = 0 is a plateau, power = 1 a linear ramp, large
/// powers give steep convex ramps.
struct DensitySegment {
  double x0;
  double x1;
  double base;
  double amp;
  double power;
};

struct PiecewiseDensityFamily {
  std::vector<DensitySegment> segments;
};

/// Sorted samples; CDF is the empirical step function. No density.
struct EmpiricalFamily {
  std::vector<double> samples;
};

/// One-dimensional valuation distribution T with CDF, survival function and
/// (for all families but empirical) density and density derivative.
class Distribution {
 public:
  using Family = std::variant<UniformFamily, ExponentialFamily, TruncatedExponentialFamily,
                              PiecewiseDensityFamily, EmpiricalFamily>;

  static Distribution uniform(double lo, double hi);
  static Distribution exponential(double rate);
  static Distribution truncated_exponential(double rate, double hi);
  /// Segments must be contiguous, nonnegative and integrate to one within 1e-9.
  static Distribution piecewise(std::vector<DensitySegment> segments);
  static Distribution empirical(std::vector<double> samples);
  static Distribution point_mass(double value) { return empirical({value}); }

  const Family& family() const { return family_; }
  std::string_view family_name() const;

  bool has_density() const;
  double lower() const;
  /// +infinity for the exponential family.
  double upper() const;
  /// Upper end for grid work: upper(), or the 1 - 1e-12 quantile when the
  /// support is unbounded.
  double working_upper() const;

  double pdf(double x) const;
  double pdf_derivative(double x) const;
  double cdf(double x) const;
  /// 1 - cdf, computed without cancellation.
  double sf(double x) const;
  double mean() const;
  double quantile(double p) const;
  double sample(Rng& rng) const;

  /// Interior points where the density has a kink or jump.
  std::vector<double> breakpoints() const;

 private:
  explicit Distribution(Family family) : family_(std::move(family)) {}
  Family family_;
};

/// Bayesian instance: a market plus independent per-(advertiser, query)
/// valuation distributions F.
class BayesScenario {
 public:
  BayesScenario(std::shared_ptr<const Market> market, std::vector<std::string> advertisers,
                std::vector<std::vector<Distribution>> value_dists);

  const Market& market() const { return *market_; }
  std::shared_ptr<const Market> market_ptr() const { return market_; }
  Index num_advertisers() const { return static_cast<Index>(advertisers_.size()); }
  const std::vector<std::string>& advertiser_ids() const { return advertisers_; }
  const Distribution& value_dist(Index advertiser, Index query) const {
    return dists_[static_cast<std::size_t>(advertiser)][static_cast<std::size_t>(query)];
  }

  /// Draws v_i^q for one advertiser, queries in index order.
  Eigen::VectorXd sample_values(Index advertiser, Rng& rng) const;
  /// Draws the whole n x |Q| type profile, advertiser-major.
  Eigen::MatrixXd sample_profile(Rng& rng) const;
  /// Full-information scenario for a realized type profile.
  Scenario realize(Eigen::MatrixXd values) const;
  /// Scenario whose values are the per-query means.
  Scenario mean_scenario() const;

 private:
  std::shared_ptr<const Market> market_;
  std::vector<std::string> advertisers_;
  std::vector<std::vector<Distribution>> dists_;
};

}  // namespace bmlab
