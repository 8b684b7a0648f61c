#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bmlab/distributions.hpp"
#include "bmlab/mechanisms.hpp"

namespace bmlab {

/// Discretized strategy space: bids {0, delta, 2 delta, ...} up to a cap,
/// plus the advertiser's own keyword value so truthful bidding is always
/// representable.
struct BidGrid {
  double delta = 1.0;
  /// Overrides the per-keyword cap max_i v_i^s.
  std::optional<double> cap;
  /// Only bids b_i^s <= v_i^s.
  bool conservative = false;

  /// Sorted candidate bids for one advertiser on one keyword, 0 first.
  std::vector<double> points(const Scenario& scenario, Index advertiser, Index keyword) const;
};

/// Default tolerance for on-grid checks: 1e-9 times the largest value.
double default_epsilon(const Scenario& scenario);

struct SearchLimits {
  Index max_keywords = 20;  ///< |positive keywords| per best response
  int max_kappa = 4;
  double max_profiles = 1e7;
};

struct BestResponse {
  Eigen::RowVectorXd bids;                 ///< full row over all keywords
  double utility = 0.0;
  Eigen::RowVectorXd keyword_utilities;    ///< best achievable u_i^s per keyword
};

/// Exhaustive grid best response for one advertiser, searching each
/// positive keyword separately and keeping the top-kappa keywords. Ties go
/// to the lowest winning bid, then to not bidding, then to the lower
/// keyword index. Throws TooLarge past the limits.
BestResponse best_response(const Scenario& scenario, const BidProfile& profile, Index advertiser,
                           const BidGrid& grid, const SearchLimits& limits = {});

/// max(0, best-response utility - current utility) per advertiser.
Eigen::VectorXd regrets(const Scenario& scenario, const BidProfile& profile, const BidGrid& grid,
                        const SearchLimits& limits = {});

struct EquilibriumReport {
  BidProfile profile;
  Eigen::VectorXd regrets;
  bool converged = false;
  int iterations = 0;
  double welfare = 0.0;
};

/// Round-robin best responses; a player switches only when the gain exceeds
/// epsilon. Converged means one full sweep without a switch.
EquilibriumReport best_response_dynamics(const Scenario& scenario, const BidProfile& initial,
                                         const BidGrid& grid, double epsilon, int max_iters,
                                         const SearchLimits& limits = {});

struct EnumerationOptions {
  /// Keep only profiles where every slot winner bids exactly v_i^s.
  bool winner_truthful = false;
  double epsilon = -1.0;  ///< negative: default_epsilon
  /// Stop storing profiles after this many (counting continues).
  std::size_t max_stored = 100000;
};

struct EnumerationResult {
  std::vector<EquilibriumReport> equilibria;
  std::size_t count = 0;          ///< equilibria found, stored or not
  std::optional<EquilibriumReport> worst;  ///< lowest-welfare equilibrium
  double eps_cont = 0.0;          ///< (max w) * delta
  double profiles_examined = 0;   ///< per-keyword vectors plus combinations
  bool exhaustive = true;
};

/// All pure Nash equilibria on the grid. Uses the separable structure: a
/// profile is an equilibrium iff every bid is a per-keyword best response
/// and each advertiser's chosen keywords carry its top-kappa per-keyword
/// best utilities. Throws TooLarge when a per-keyword space or the
/// cross-keyword combination count exceeds limits.max_profiles.
EnumerationResult enumerate_pure_nash(const Scenario& scenario, const BidGrid& grid,
                                      const EnumerationOptions& options = {},
                                      const SearchLimits& limits = {});

/// Truthful keyword-value bids on each advertiser's chosen keywords.
/// Throws NotSingleSlot unless w_2 = 0.
BidProfile single_slot_dominant_profile(const Scenario& scenario,
                                        const std::vector<std::vector<Index>>& chosen);

/// The kappa keywords with the largest m_s v_i^s per advertiser (ties to the
/// lower index), skipping zero-value keywords.
std::vector<std::vector<Index>> top_kappa_keywords(const Scenario& scenario);

/// Bayesian strategy: keyword-value row in, bid row out.
using Strategy = std::function<Eigen::RowVectorXd(Index advertiser, const Eigen::RowVectorXd& keyword_values)>;

/// Truthful bids on the top-kappa keywords by traffic-weighted value.
Strategy truthful_strategy(std::shared_ptr<const Market> market);
/// Bids zero everywhere.
Strategy zero_strategy();
/// Truthful top-kappa bids scaled by a factor.
Strategy shaded_strategy(std::shared_ptr<const Market> market, double factor);

struct RegretEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
  std::size_t type_samples = 0;
};

/// Monte-Carlo interim regret: for each sampled own type, expected utility
/// of the strategy versus the best grid deviation, both averaged over the
/// same sampled opponent profiles.
RegretEstimate estimate_bne_regret(const BayesScenario& bayes, const Strategy& strategy,
                                   std::size_t type_samples, std::size_t opponent_samples,
                                   double delta, Rng& rng);

}  // namespace bmlab
