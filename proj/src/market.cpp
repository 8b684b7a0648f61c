#include "bmlab/market.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "bmlab/error.hpp"

namespace bmlab {

namespace {

std::unordered_map<std::string, Index> intern(const std::vector<std::string>& ids,
                                              const char* what) {
  std::unordered_map<std::string, Index> index;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (!index.emplace(ids[k], static_cast<Index>(k)).second) {
      throw Error(Errc::InvalidInput, ids[k], std::string("duplicate ") + what + " id");
    }
  }
  return index;
}

}  // namespace

BipartiteGraph BipartiteGraph::build(
    std::vector<std::string> queries, std::vector<std::string> keywords,
    const std::vector<std::pair<std::string, std::string>>& edges) {
  BipartiteGraph g;
  g.query_index_ = intern(queries, "query");
  g.keyword_index_ = intern(keywords, "keyword");
  g.queries_ = std::move(queries);
  g.keywords_ = std::move(keywords);
  g.query_adj_.assign(g.queries_.size(), {});
  g.keyword_adj_.assign(g.keywords_.size(), {});

  std::set<std::pair<Index, Index>> seen;
  for (const auto& [q, s] : edges) {
    auto qi = g.find_query(q);
    if (!qi) throw Error(Errc::InvalidInput, q, "edge references unknown query");
    auto si = g.find_keyword(s);
    if (!si) throw Error(Errc::InvalidInput, s, "edge references unknown keyword");
    if (!seen.emplace(*qi, *si).second) {
      throw Error(Errc::InvalidInput, q + "-" + s, "duplicate edge");
    }
    g.query_adj_[*qi].push_back(*si);
    g.keyword_adj_[*si].push_back(*qi);
  }
  for (auto& adj : g.query_adj_) std::sort(adj.begin(), adj.end());
  for (auto& adj : g.keyword_adj_) std::sort(adj.begin(), adj.end());

  for (Index q = 0; q < g.num_queries(); ++q) {
    if (g.query_adj_[q].empty()) throw Error(Errc::EmptyNeighborhood, g.queries_[q]);
  }
  for (Index s = 0; s < g.num_keywords(); ++s) {
    if (g.keyword_adj_[s].empty()) throw Error(Errc::EmptyNeighborhood, g.keywords_[s]);
  }
  return g;
}

bool BipartiteGraph::has_edge(Index query, Index keyword) const {
  const auto& adj = query_adj_[query];
  return std::binary_search(adj.begin(), adj.end(), keyword);
}

std::optional<Index> BipartiteGraph::find_query(std::string_view id) const {
  auto it = query_index_.find(std::string(id));
  if (it == query_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> BipartiteGraph::find_keyword(std::string_view id) const {
  auto it = keyword_index_.find(std::string(id));
  if (it == keyword_index_.end()) return std::nullopt;
  return it->second;
}

Index BipartiteGraph::max_degree() const {
  std::size_t best = 0;
  for (const auto& adj : query_adj_) best = std::max(best, adj.size());
  for (const auto& adj : keyword_adj_) best = std::max(best, adj.size());
  return static_cast<Index>(best);
}

Index BipartiteGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& adj : query_adj_) total += adj.size();
  return static_cast<Index>(total);
}

Market::Market(BipartiteGraph graph, Eigen::VectorXd query_mass,
               std::vector<std::vector<double>> matching, Eigen::VectorXd slot_weights,
               int kappa)
    : graph_(std::move(graph)),
      query_mass_(std::move(query_mass)),
      matching_(std::move(matching)),
      slot_weights_(std::move(slot_weights)),
      kappa_(kappa) {
  const Index nq = graph_.num_queries();
  const Index ns = graph_.num_keywords();
  if (query_mass_.size() != nq) throw Error(Errc::InvalidInput, "P", "size mismatch");
  if (static_cast<Index>(matching_.size()) != nq) {
    throw Error(Errc::InvalidInput, "matching", "size mismatch");
  }

  for (Index q = 0; q < nq; ++q) {
    if (!(query_mass_[q] > 0.0) || !std::isfinite(query_mass_[q])) {
      throw Error(Errc::InvalidInput, graph_.query_id(q), "query mass must be positive");
    }
  }
  if (std::abs(query_mass_.sum() - 1.0) > kMassTolerance) {
    throw Error(Errc::MassNotOne, "P");
  }

  for (Index q = 0; q < nq; ++q) {
    const auto& row = matching_[q];
    if (row.size() != graph_.keywords_of(q).size()) {
      throw Error(Errc::SupportMismatch, graph_.query_id(q));
    }
    double total = 0.0;
    for (double m : row) {
      if (!(m > 0.0) || !std::isfinite(m)) throw Error(Errc::SupportMismatch, graph_.query_id(q));
      total += m;
    }
    if (std::abs(total - 1.0) > kMassTolerance) throw Error(Errc::MassNotOne, graph_.query_id(q));
  }

  for (Index k = 0; k < slot_weights_.size(); ++k) {
    const double w = slot_weights_[k];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(Errc::InvalidInput, "slot_weights[" + std::to_string(k) + "]",
                  "click weight outside [0,1]");
    }
    if (k > 0 && w > slot_weights_[k - 1]) {
      throw Error(Errc::NonMonotoneWeights, std::to_string(k));
    }
  }
  if (kappa_ < 1) throw Error(Errc::InvalidInput, "kappa", "keyword budget must be >= 1");

  keyword_mass_ = Eigen::VectorXd::Zero(ns);
  keyword_weights_ = Eigen::MatrixXd::Zero(nq, ns);
  for (Index q = 0; q < nq; ++q) {
    auto adj = graph_.keywords_of(q);
    for (std::size_t k = 0; k < adj.size(); ++k) {
      const double mass = matching_[q][k] * query_mass_[q];
      keyword_weights_(q, adj[k]) = mass;
      keyword_mass_[adj[k]] += mass;
    }
  }
  for (Index s = 0; s < ns; ++s) keyword_weights_.col(s) /= keyword_mass_[s];
}

double Market::match_prob(Index query, Index keyword) const {
  auto adj = graph_.keywords_of(query);
  auto it = std::lower_bound(adj.begin(), adj.end(), keyword);
  if (it == adj.end() || *it != keyword) return 0.0;
  return matching_[query][static_cast<std::size_t>(it - adj.begin())];
}

bool Market::single_slot() const {
  for (Index k = 1; k < slot_weights_.size(); ++k) {
    if (slot_weights_[k] > 0.0) return false;
  }
  return true;
}

Scenario::Scenario(std::shared_ptr<const Market> market, std::vector<std::string> advertisers,
                   Eigen::MatrixXd values)
    : market_(std::move(market)), advertisers_(std::move(advertisers)), values_(std::move(values)) {
  if (values_.rows() != static_cast<Index>(advertisers_.size()) ||
      values_.cols() != market_->num_queries()) {
    throw Error(Errc::InvalidInput, "valuations", "shape mismatch");
  }
  if (std::adjacent_find(advertisers_.begin(), advertisers_.end(),
                         std::greater_equal<>()) != advertisers_.end()) {
    throw Error(Errc::InvalidInput, "advertisers", "ids must be unique and sorted");
  }
  for (Index i = 0; i < values_.rows(); ++i) {
    for (Index q = 0; q < values_.cols(); ++q) {
      if (!(values_(i, q) >= 0.0) || !std::isfinite(values_(i, q))) {
        throw Error(Errc::InvalidInput, advertisers_[i] + "/" + market_->graph().query_id(q),
                    "values must be finite and nonnegative");
      }
    }
  }
  keyword_values_ = values_ * market_->keyword_weights();
}

std::optional<Index> Scenario::find_advertiser(std::string_view id) const {
  auto it = std::lower_bound(advertisers_.begin(), advertisers_.end(), id);
  if (it == advertisers_.end() || *it != id) return std::nullopt;
  return static_cast<Index>(it - advertisers_.begin());
}

Scenario Scenario::with_values(Eigen::MatrixXd values) const {
  return Scenario(market_, advertisers_, std::move(values));
}

std::shared_ptr<const Market> build_market(const RawScenario& raw) {
  BipartiteGraph graph = BipartiteGraph::build(raw.queries, raw.keywords, raw.edges);
  const Index nq = graph.num_queries();

  Eigen::VectorXd mass = Eigen::VectorXd::Zero(nq);
  for (const auto& [id, m] : raw.query_dist) {
    auto q = graph.find_query(id);
    if (!q) throw Error(Errc::InvalidInput, id, "query_dist references unknown query");
    mass[*q] = m;
  }

  std::vector<std::vector<double>> matching(static_cast<std::size_t>(nq));
  for (Index q = 0; q < nq; ++q) {
    const std::string& qid = graph.query_id(q);
    auto it = raw.matching.find(qid);
    if (it == raw.matching.end()) throw Error(Errc::SupportMismatch, qid);
    auto adj = graph.keywords_of(q);
    std::vector<double> row(adj.size(), 0.0);
    for (const auto& [sid, m] : it->second) {
      auto s = graph.find_keyword(sid);
      if (!s || !graph.has_edge(q, *s)) throw Error(Errc::SupportMismatch, qid);
      auto pos = std::lower_bound(adj.begin(), adj.end(), *s) - adj.begin();
      row[static_cast<std::size_t>(pos)] = m;
    }
    matching[static_cast<std::size_t>(q)] = std::move(row);
  }
  for (const auto& [qid, row] : raw.matching) {
    if (!graph.find_query(qid)) throw Error(Errc::InvalidInput, qid, "matching references unknown query");
  }

  Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(
      raw.slot_weights.data(), static_cast<Index>(raw.slot_weights.size()));
  return std::make_shared<const Market>(std::move(graph), std::move(mass), std::move(matching),
                                        std::move(weights), raw.kappa);
}

Scenario build_scenario(const RawScenario& raw) {
  auto market = build_market(raw);
  const auto& graph = market->graph();

  std::vector<std::string> advertisers;
  for (const auto& [id, row] : raw.valuations) advertisers.push_back(id);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Index>(advertisers.size()),
                                                 graph.num_queries());
  Index i = 0;
  for (const auto& [id, row] : raw.valuations) {
    for (const auto& [qid, v] : row) {
      auto q = graph.find_query(qid);
      if (!q) throw Error(Errc::InvalidInput, qid, "valuation references unknown query");
      values(i, *q) = v;
    }
    ++i;
  }

  Scenario scenario(std::move(market), std::move(advertisers), std::move(values));
  for (Index q = 0; q < graph.num_queries(); ++q) {
    if (scenario.num_advertisers() == 0 || !(scenario.values().col(q).maxCoeff() > 0.0)) {
      throw Error(Errc::NoPositiveAdvertiser, graph.query_id(q));
    }
  }
  return scenario;
}

double keyword_value(const Scenario& scenario, Index advertiser, Index keyword) {
  return scenario.keyword_values()(advertiser, keyword);
}

std::vector<Index> positive_queries(const Scenario& scenario, Index advertiser) {
  std::vector<Index> out;
  for (Index q = 0; q < scenario.values().cols(); ++q) {
    if (scenario.values()(advertiser, q) > 0.0) out.push_back(q);
  }
  return out;
}

std::vector<Index> keywords_touching(const BipartiteGraph& graph, std::span<const Index> queries) {
  std::vector<char> hit(static_cast<std::size_t>(graph.num_keywords()), 0);
  for (Index q : queries) {
    for (Index s : graph.keywords_of(q)) hit[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<Index> out;
  for (Index s = 0; s < graph.num_keywords(); ++s) {
    if (hit[static_cast<std::size_t>(s)]) out.push_back(s);
  }
  return out;
}

std::vector<Index> positive_keywords(const Scenario& scenario, Index advertiser) {
  auto qs = positive_queries(scenario, advertiser);
  return keywords_touching(scenario.graph(), qs);
}

double query_optimal_welfare(const Market& market,
                             const Eigen::Ref<const Eigen::VectorXd>& values) {
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    total += market.slot_weight(static_cast<Index>(k)) * sorted[k];
  }
  return total;
}

double optimal_welfare(const Scenario& scenario) {
  const Market& market = scenario.market();
  double total = 0.0;
  for (Index q = 0; q < market.num_queries(); ++q) {
    total += market.query_mass()[q] * query_optimal_welfare(market, scenario.values().col(q));
  }
  return total;
}

}  // namespace bmlab
