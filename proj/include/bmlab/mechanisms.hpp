#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "bmlab/market.hpp"
#include "bmlab/random.hpp"

namespace bmlab {

/// n x |S| bid matrix. A zero entry means "does not bid on that keyword".
class BidProfile {
 public:
  /// Checks nonnegativity and, when given, that each row has at most kappa
  /// positive entries.
  explicit BidProfile(Eigen::MatrixXd bids, std::optional<int> kappa = std::nullopt);

  /// All-zero profile shaped for the scenario.
  static BidProfile empty(const Scenario& scenario);

  const Eigen::MatrixXd& bids() const { return bids_; }
  double bid(Index advertiser, Index keyword) const { return bids_(advertiser, keyword); }
  Index num_advertisers() const { return bids_.rows(); }
  Index num_keywords() const { return bids_.cols(); }

  /// Copy with one advertiser's row replaced (no budget re-check).
  BidProfile with_row(Index advertiser, const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  /// Number of keywords the advertiser bids on.
  Index keyword_count(Index advertiser) const;

 private:
  Eigen::MatrixXd bids_;
};

/// Validates shape and keyword budget against the scenario.
BidProfile make_bid_profile(const Scenario& scenario, Eigen::MatrixXd bids);

enum class TieBreak { Lexicographic, Random };

struct RankedBid {
  Index advertiser;
  double bid;
  double price;  ///< per-click price of this position
};

/// Advertisers with a positive (and reserve-clearing) bid on one keyword,
/// sorted by bid descending.
struct KeywordRanking {
  std::vector<RankedBid> entries;

  /// 0-based position of an advertiser, if ranked.
  std::optional<Index> position_of(Index advertiser) const;
  std::size_t size() const { return entries.size(); }
};

/// Ranks positive bids, ties to the smaller advertiser index (or uniformly at
/// random). Price of position k is the next bid, or max{reserve, next bid}
/// when a reserve is given; bids below the reserve are dropped.
KeywordRanking gsp_rank(const Eigen::Ref<const Eigen::VectorXd>& bids,
                        std::optional<double> reserve = std::nullopt,
                        TieBreak tie_break = TieBreak::Lexicographic, Rng* rng = nullptr);

using ReserveVector = Eigen::VectorXd;

/// Validates r_s >= 0 and size |S|.
ReserveVector make_reserve(const Scenario& scenario, Eigen::VectorXd reserve);

struct SlotAward {
  Index slot;  ///< 0-based
  Index advertiser;
  double price;
  double click_weight;
};

struct AuctionOutcome {
  Index query = 0;
  std::optional<Index> sampled_keyword;  ///< empty for SBM rounds
  std::vector<SlotAward> awards;
  double welfare = 0.0;  ///< sum of w_k v_i^q over awarded slots
  double revenue = 0.0;  ///< sum of w_k price over awarded slots
};

/// One round of the probabilistic broad-match GSP for an issued query:
/// sample s ~ pi_q, rank bids on s, award weighted slots.
AuctionOutcome pbm_run_round(const Scenario& scenario, const BidProfile& bids, Index query,
                             Rng& rng, const ReserveVector* reserve = nullptr,
                             TieBreak tie_break = TieBreak::Lexicographic);

/// One round of standard broad match: per-advertiser max bid over N_G(q).
AuctionOutcome sbm_run_round(const Scenario& scenario, const BidProfile& bids, Index query);

/// Expected welfare of PBM-GSP, crediting the query value of whoever the
/// keyword auction ranks. With a reserve, only reserve-clearing bids count.
double pbm_expected_welfare(const Scenario& scenario, const BidProfile& bids,
                            const ReserveVector* reserve = nullptr);

/// Welfare generated on one keyword: m_s * sum_k w_k v^s_{sigma(k)}.
double pbm_keyword_welfare(const Scenario& scenario, const BidProfile& bids, Index keyword);

/// Expected utility of one advertiser, integrated over queries.
double pbm_utility(const Scenario& scenario, const BidProfile& bids, Index advertiser);

/// u_i^s: the advertiser's utility from one keyword, given everyone's bids on
/// that keyword. Sums to pbm_utility over keywords.
double keyword_utility(const Scenario& scenario, Index keyword,
                       const Eigen::Ref<const Eigen::VectorXd>& keyword_bids, Index advertiser);

/// max over N_G(q) of the advertiser's keyword bids; 0 when none.
double sbm_query_bid(const Scenario& scenario, const BidProfile& bids, Index advertiser,
                     Index query);

double sbm_expected_welfare(const Scenario& scenario, const BidProfile& bids);

/// R_r(b): expected per-keyword GSP revenue with reserve r.
double revenue_with_reserve(const Scenario& scenario, const BidProfile& bids,
                            const ReserveVector& reserve);

/// Position-auction VCG with reserve on one keyword.
struct VcgKeywordOutcome {
  std::vector<Index> ranking;     ///< allocated advertisers, best slot first
  std::vector<double> payments;   ///< expected payment (per impression) per slot
  double welfare = 0.0;           ///< sum_k w_k value_k
};

/// Truthful values in, values below the reserve excluded. The payment for
/// slot k is sum_{j>=k} (w_j - w_{j+1}) max{r, value_{j+1}}.
VcgKeywordOutcome vcg_keyword(const Eigen::Ref<const Eigen::VectorXd>& values,
                              const Eigen::Ref<const Eigen::VectorXd>& slot_weights,
                              double reserve);

struct VcgOutcome {
  std::vector<VcgKeywordOutcome> keywords;
  double revenue = 0.0;  ///< traffic-weighted sum of payments
  double welfare = 0.0;
};

/// PBM-VCG: every advertiser reports v_i^s on every keyword, no budget.
VcgOutcome vcg_with_reserve(const Scenario& scenario, const Eigen::MatrixXd& keyword_values,
                            const ReserveVector& reserve);

}  // namespace bmlab
