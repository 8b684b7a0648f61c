#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bmlab/analysis.hpp"
#include "bmlab/distributions.hpp"
#include "bmlab/equilibrium.hpp"
#include "bmlab/expressiveness.hpp"
#include "bmlab/market.hpp"
#include "bmlab/mechanisms.hpp"

namespace bmlab {

using ordered_json = nlohmann::ordered_json;

/// Reads a whole file; ParseError if it cannot be opened.
std::string read_text(const std::filesystem::path& path);

/// Scenario JSON. Unknown keys are rejected by name; syntax errors carry
/// source:line:column.
RawScenario parse_scenario(std::string_view text, const std::string& source = "<scenario>");
RawScenario load_scenario(const std::filesystem::path& path);
ordered_json scenario_to_json(const RawScenario& raw);

/// {"family": ..., "params": {...}}. Families: uniform {lo, hi},
/// exponential {rate}, truncated-exponential {rate, hi}, piecewise-density
/// {segments: [{x0, x1, base, amp, power}]}, empirical {samples},
/// point-mass {value}.
Distribution parse_distribution(const nlohmann::json& spec, const std::string& where);
ordered_json distribution_to_json(const Distribution& dist);

/// Bayesian scenario: the scenario keys with `valuation_dists` (advertiser
/// -> query -> distribution spec) in place of `valuations`. Missing entries
/// are a point mass at zero.
BayesScenario parse_bayes_scenario(std::string_view text, const std::string& source = "<bayes>");
BayesScenario load_bayes_scenario(const std::filesystem::path& path);

/// Bid file: advertiser -> keyword -> bid. Unlisted entries are zero.
BidProfile parse_bid_profile(std::string_view text, const Scenario& scenario,
                             const std::string& source = "<bids>");
BidProfile load_bid_profile(const std::filesystem::path& path, const Scenario& scenario);
ordered_json bid_profile_to_json(const Scenario& scenario, const BidProfile& profile);

ordered_json equilibrium_report_to_json(const Scenario& scenario, const EquilibriumReport& report);

/// Fixed-format number for CSV and reports: up to 12 significant digits,
/// "inf" for infinity.
std::string format_number(double x);

inline constexpr std::string_view kRoundLogHeader =
    "round,query,sampled_keyword,slot,advertiser,price,click_weight";
void write_round_log(std::ostream& out, const Scenario& scenario, std::size_t round,
                     const AuctionOutcome& outcome);

inline constexpr std::string_view kRatioHeader = "scenario,metric,empirical,bound,satisfied,notes";
std::string ratio_csv_row(const RatioReport& report);

inline constexpr std::string_view kExpressivenessHeader =
    "theta_bucket,kappa_bucket,mean_alpha,mean_beta,n_markets";
void write_expressiveness_table(std::ostream& out, const ExpressivenessTable& table);

}  // namespace bmlab
