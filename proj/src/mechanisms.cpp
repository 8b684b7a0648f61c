#include "bmlab/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bmlab/error.hpp"

namespace bmlab {

BidProfile::BidProfile(Eigen::MatrixXd bids, std::optional<int> kappa) : bids_(std::move(bids)) {
  for (Index i = 0; i < bids_.rows(); ++i) {
    for (Index s = 0; s < bids_.cols(); ++s) {
      if (!(bids_(i, s) >= 0.0) || !std::isfinite(bids_(i, s))) {
        throw Error(Errc::InvalidInput, "bid[" + std::to_string(i) + "," + std::to_string(s) + "]",
                    "bids must be finite and nonnegative");
      }
    }
    if (kappa && keyword_count(i) > *kappa) {
      throw Error(Errc::InvalidInput, "bids[" + std::to_string(i) + "]",
                  "advertiser bids on more than kappa keywords");
    }
  }
}

BidProfile BidProfile::empty(const Scenario& scenario) {
  return BidProfile(Eigen::MatrixXd::Zero(scenario.num_advertisers(), scenario.market().num_keywords()));
}

BidProfile BidProfile::with_row(Index advertiser,
                                const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  BidProfile copy = *this;
  copy.bids_.row(advertiser) = row;
  return copy;
}

Index BidProfile::keyword_count(Index advertiser) const {
  return (bids_.row(advertiser).array() > 0.0).count();
}

BidProfile make_bid_profile(const Scenario& scenario, Eigen::MatrixXd bids) {
  if (bids.rows() != scenario.num_advertisers() || bids.cols() != scenario.market().num_keywords()) {
    throw Error(Errc::InvalidInput, "bids", "shape does not match scenario");
  }
  return BidProfile(std::move(bids), scenario.market().kappa());
}

std::optional<Index> KeywordRanking::position_of(Index advertiser) const {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].advertiser == advertiser) return static_cast<Index>(k);
  }
  return std::nullopt;
}

KeywordRanking gsp_rank(const Eigen::Ref<const Eigen::VectorXd>& bids,
                        std::optional<double> reserve, TieBreak tie_break, Rng* rng) {
  KeywordRanking ranking;
  for (Index i = 0; i < bids.size(); ++i) {
    const double b = bids[i];
    if (b > 0.0 && (!reserve || b >= *reserve)) ranking.entries.push_back({i, b, 0.0});
  }
  auto& e = ranking.entries;
  std::sort(e.begin(), e.end(), [](const RankedBid& a, const RankedBid& b) {
    return a.bid != b.bid ? a.bid > b.bid : a.advertiser < b.advertiser;
  });

  if (tie_break == TieBreak::Random && rng != nullptr) {
    for (std::size_t lo = 0; lo < e.size();) {
      std::size_t hi = lo + 1;
      while (hi < e.size() && e[hi].bid == e[lo].bid) ++hi;
      for (std::size_t k = hi - 1; k > lo; --k) {
        std::swap(e[k], e[lo + uniform_index(*rng, k - lo + 1)]);
      }
      lo = hi;
    }
  }

  for (std::size_t k = 0; k < e.size(); ++k) {
    const double next = k + 1 < e.size() ? e[k + 1].bid : 0.0;
    e[k].price = reserve ? std::max(*reserve, next) : next;
  }
  return ranking;
}

ReserveVector make_reserve(const Scenario& scenario, Eigen::VectorXd reserve) {
  if (reserve.size() != scenario.market().num_keywords()) {
    throw Error(Errc::InvalidInput, "reserve", "size does not match keyword count");
  }
  for (Index s = 0; s < reserve.size(); ++s) {
    if (!(reserve[s] >= 0.0) || !std::isfinite(reserve[s])) {
      throw Error(Errc::InvalidInput, scenario.graph().keyword_id(s), "reserve must be >= 0");
    }
  }
  return reserve;
}

namespace {

std::optional<double> reserve_for(const ReserveVector* reserve, Index keyword) {
  if (reserve == nullptr) return std::nullopt;
  return (*reserve)[keyword];
}

}  // namespace

AuctionOutcome pbm_run_round(const Scenario& scenario, const BidProfile& bids, Index query,
                             Rng& rng, const ReserveVector* reserve, TieBreak tie_break) {
  const Market& market = scenario.market();
  auto adj = market.graph().keywords_of(query);
  const Index s = adj[sample_discrete(market.matching_row(query), rng)];

  AuctionOutcome out;
  out.query = query;
  out.sampled_keyword = s;
  const KeywordRanking ranking = gsp_rank(bids.bids().col(s), reserve_for(reserve, s), tie_break, &rng);
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    const double w = market.slot_weight(static_cast<Index>(k));
    if (w <= 0.0) break;
    const auto& entry = ranking.entries[k];
    out.awards.push_back({static_cast<Index>(k), entry.advertiser, entry.price, w});
    out.welfare += w * scenario.values()(entry.advertiser, query);
    out.revenue += w * entry.price;
  }
  return out;
}

AuctionOutcome sbm_run_round(const Scenario& scenario, const BidProfile& bids, Index query) {
  const Market& market = scenario.market();
  Eigen::VectorXd query_bids(scenario.num_advertisers());
  for (Index i = 0; i < scenario.num_advertisers(); ++i) {
    query_bids[i] = sbm_query_bid(scenario, bids, i, query);
  }
  AuctionOutcome out;
  out.query = query;
  const KeywordRanking ranking = gsp_rank(query_bids);
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    const double w = market.slot_weight(static_cast<Index>(k));
    if (w <= 0.0) break;
    const auto& entry = ranking.entries[k];
    out.awards.push_back({static_cast<Index>(k), entry.advertiser, entry.price, w});
    out.welfare += w * scenario.values()(entry.advertiser, query);
    out.revenue += w * entry.price;
  }
  return out;
}

double pbm_expected_welfare(const Scenario& scenario, const BidProfile& bids,
                            const ReserveVector* reserve) {
  const Market& market = scenario.market();
  const auto& graph = market.graph();
  double total = 0.0;
  for (Index s = 0; s < market.num_keywords(); ++s) {
    const KeywordRanking ranking = gsp_rank(bids.bids().col(s), reserve_for(reserve, s));
    if (ranking.entries.empty()) continue;
    for (Index q : graph.queries_of(s)) {
      const double mass = market.match_prob(q, s) * market.query_mass()[q];
      double slot_value = 0.0;
      for (std::size_t k = 0; k < ranking.size(); ++k) {
        slot_value += market.slot_weight(static_cast<Index>(k)) *
                      scenario.values()(ranking.entries[k].advertiser, q);
      }
      total += mass * slot_value;
    }
  }
  return total;
}

double pbm_keyword_welfare(const Scenario& scenario, const BidProfile& bids, Index keyword) {
  const Market& market = scenario.market();
  const KeywordRanking ranking = gsp_rank(bids.bids().col(keyword));
  double slot_value = 0.0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    slot_value += market.slot_weight(static_cast<Index>(k)) *
                  scenario.keyword_values()(ranking.entries[k].advertiser, keyword);
  }
  return market.keyword_mass()[keyword] * slot_value;
}

double pbm_utility(const Scenario& scenario, const BidProfile& bids, Index advertiser) {
  const Market& market = scenario.market();
  double total = 0.0;
  for (Index s = 0; s < market.num_keywords(); ++s) {
    if (bids.bid(advertiser, s) <= 0.0) continue;
    const KeywordRanking ranking = gsp_rank(bids.bids().col(s));
    const auto pos = ranking.position_of(advertiser);
    if (!pos) continue;
    const double w = market.slot_weight(*pos);
    if (w <= 0.0) continue;
    const double price = ranking.entries[static_cast<std::size_t>(*pos)].price;
    for (Index q : market.graph().queries_of(s)) {
      const double mass = market.match_prob(q, s) * market.query_mass()[q];
      total += mass * w * (scenario.values()(advertiser, q) - price);
    }
  }
  return total;
}

double keyword_utility(const Scenario& scenario, Index keyword,
                       const Eigen::Ref<const Eigen::VectorXd>& keyword_bids, Index advertiser) {
  if (keyword_bids[advertiser] <= 0.0) return 0.0;
  const Market& market = scenario.market();
  const KeywordRanking ranking = gsp_rank(keyword_bids);
  const auto pos = ranking.position_of(advertiser);
  if (!pos) return 0.0;
  const double w = market.slot_weight(*pos);
  if (w <= 0.0) return 0.0;
  const double price = ranking.entries[static_cast<std::size_t>(*pos)].price;
  return market.keyword_mass()[keyword] * w *
         (scenario.keyword_values()(advertiser, keyword) - price);
}

double sbm_query_bid(const Scenario& scenario, const BidProfile& bids, Index advertiser,
                     Index query) {
  double best = 0.0;
  for (Index s : scenario.graph().keywords_of(query)) best = std::max(best, bids.bid(advertiser, s));
  return best;
}

double sbm_expected_welfare(const Scenario& scenario, const BidProfile& bids) {
  const Market& market = scenario.market();
  double total = 0.0;
  for (Index q = 0; q < market.num_queries(); ++q) {
    total += market.query_mass()[q] * sbm_run_round(scenario, bids, q).welfare;
  }
  return total;
}

double revenue_with_reserve(const Scenario& scenario, const BidProfile& bids,
                            const ReserveVector& reserve) {
  const Market& market = scenario.market();
  double total = 0.0;
  for (Index s = 0; s < market.num_keywords(); ++s) {
    const KeywordRanking ranking = gsp_rank(bids.bids().col(s), reserve[s]);
    double per_impression = 0.0;
    for (std::size_t k = 0; k < ranking.size(); ++k) {
      per_impression += market.slot_weight(static_cast<Index>(k)) * ranking.entries[k].price;
    }
    total += market.keyword_mass()[s] * per_impression;
  }
  return total;
}

VcgKeywordOutcome vcg_keyword(const Eigen::Ref<const Eigen::VectorXd>& values,
                              const Eigen::Ref<const Eigen::VectorXd>& slot_weights,
                              double reserve) {
  const KeywordRanking ranking = gsp_rank(values, reserve);
  const auto weight = [&](std::size_t k) {
    return k < static_cast<std::size_t>(slot_weights.size()) ? slot_weights[static_cast<Index>(k)] : 0.0;
  };
  const auto value_at = [&](std::size_t k) {
    return k < ranking.size() ? ranking.entries[k].bid : 0.0;
  };
  const std::size_t horizon = std::max(ranking.size(), static_cast<std::size_t>(slot_weights.size()));

  VcgKeywordOutcome out;
  for (std::size_t k = 0; k < ranking.size() && weight(k) > 0.0; ++k) {
    double pay = 0.0;
    for (std::size_t j = k; j < horizon; ++j) {
      pay += (weight(j) - weight(j + 1)) * std::max(reserve, value_at(j + 1));
    }
    out.ranking.push_back(ranking.entries[k].advertiser);
    out.payments.push_back(pay);
    out.welfare += weight(k) * ranking.entries[k].bid;
  }
  return out;
}

VcgOutcome vcg_with_reserve(const Scenario& scenario, const Eigen::MatrixXd& keyword_values,
                            const ReserveVector& reserve) {
  const Market& market = scenario.market();
  VcgOutcome out;
  for (Index s = 0; s < market.num_keywords(); ++s) {
    VcgKeywordOutcome kw = vcg_keyword(keyword_values.col(s), market.slot_weights(), reserve[s]);
    const double mass = market.keyword_mass()[s];
    out.revenue += mass * std::accumulate(kw.payments.begin(), kw.payments.end(), 0.0);
    out.welfare += mass * kw.welfare;
    out.keywords.push_back(std::move(kw));
  }
  return out;
}

}  // namespace bmlab
