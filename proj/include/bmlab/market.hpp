#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bmlab {

using Index = Eigen::Index;

/// Tolerance on probability sums coming from parsed decimal input.
inline constexpr double kMassTolerance = 1e-12;

/// Query-keyword bipartite graph. Ids are interned to dense indices in the
/// order given; adjacency lists are sorted by index.
class BipartiteGraph {
 public:
  static BipartiteGraph build(std::vector<std::string> queries,
                              std::vector<std::string> keywords,
                              const std::vector<std::pair<std::string, std::string>>& edges);

  Index num_queries() const { return static_cast<Index>(queries_.size()); }
  Index num_keywords() const { return static_cast<Index>(keywords_.size()); }

  std::span<const Index> keywords_of(Index query) const { return query_adj_[query]; }
  std::span<const Index> queries_of(Index keyword) const { return keyword_adj_[keyword]; }
  bool has_edge(Index query, Index keyword) const;

  const std::string& query_id(Index q) const { return queries_[q]; }
  const std::string& keyword_id(Index s) const { return keywords_[s]; }
  const std::vector<std::string>& query_ids() const { return queries_; }
  const std::vector<std::string>& keyword_ids() const { return keywords_; }
  std::optional<Index> find_query(std::string_view id) const;
  std::optional<Index> find_keyword(std::string_view id) const;

  /// Largest vertex degree on either side.
  Index max_degree() const;
  Index num_edges() const;

 private:
  std::vector<std::string> queries_;
  std::vector<std::string> keywords_;
  std::unordered_map<std::string, Index> query_index_;
  std::unordered_map<std::string, Index> keyword_index_;
  std::vector<std::vector<Index>> query_adj_;
  std::vector<std::vector<Index>> keyword_adj_;
};

/// Everything about an auction instance except the advertisers' values:
/// graph, query distribution P, matching policy pi, slot weights, keyword
/// budget kappa.
class Market {
 public:
  Market(BipartiteGraph graph, Eigen::VectorXd query_mass,
         std::vector<std::vector<double>> matching, Eigen::VectorXd slot_weights,
         int kappa);

  const BipartiteGraph& graph() const { return graph_; }
  Index num_queries() const { return graph_.num_queries(); }
  Index num_keywords() const { return graph_.num_keywords(); }

  /// P(q).
  const Eigen::VectorXd& query_mass() const { return query_mass_; }
  /// pi_q(s), zero off the neighborhood of q.
  double match_prob(Index query, Index keyword) const;
  /// pi_q restricted to N_G(q), aligned with graph().keywords_of(q).
  std::span<const double> matching_row(Index query) const { return matching_[query]; }
  /// Traffic a keyword receives: sum over N_G(s) of pi_q(s) P(q).
  const Eigen::VectorXd& keyword_mass() const { return keyword_mass_; }
  /// |Q| x |S| matrix whose column s holds pi_q(s) P(q) / keyword_mass(s);
  /// keyword values are valuations * keyword_weights().
  const Eigen::MatrixXd& keyword_weights() const { return keyword_weights_; }

  const Eigen::VectorXd& slot_weights() const { return slot_weights_; }
  /// w_k for a 0-based position; zero past the last listed slot.
  double slot_weight(Index position) const {
    return position < slot_weights_.size() ? slot_weights_[position] : 0.0;
  }
  /// True when at most the first slot carries weight.
  bool single_slot() const;
  int kappa() const { return kappa_; }

 private:
  BipartiteGraph graph_;
  Eigen::VectorXd query_mass_;
  std::vector<std::vector<double>> matching_;
  Eigen::VectorXd slot_weights_;
  int kappa_;
  Eigen::VectorXd keyword_mass_;
  Eigen::MatrixXd keyword_weights_;
};

/// Full-information instance: a shared market plus the n x |Q| valuation
/// matrix. Advertiser ids are kept in lexicographic order, so index order is
/// also the tie-break order.
class Scenario {
 public:
  Scenario(std::shared_ptr<const Market> market, std::vector<std::string> advertisers,
           Eigen::MatrixXd values);

  const Market& market() const { return *market_; }
  std::shared_ptr<const Market> market_ptr() const { return market_; }
  const BipartiteGraph& graph() const { return market_->graph(); }
  Index num_advertisers() const { return values_.rows(); }
  const std::string& advertiser_id(Index i) const { return advertisers_[i]; }
  const std::vector<std::string>& advertiser_ids() const { return advertisers_; }
  std::optional<Index> find_advertiser(std::string_view id) const;

  /// v_i^q.
  const Eigen::MatrixXd& values() const { return values_; }
  /// v_i^s for every advertiser and keyword.
  const Eigen::MatrixXd& keyword_values() const { return keyword_values_; }

  /// Same market and advertisers, different values. Skips the
  /// positive-advertiser check so sampled type profiles are accepted.
  Scenario with_values(Eigen::MatrixXd values) const;

 private:
  std::shared_ptr<const Market> market_;
  std::vector<std::string> advertisers_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd keyword_values_;
};

/// Unvalidated scenario as read from a file or produced by a generator.
struct RawScenario {
  std::vector<std::string> queries;
  std::vector<std::string> keywords;
  std::vector<std::pair<std::string, std::string>> edges;
  std::map<std::string, double> query_dist;
  std::map<std::string, std::map<std::string, double>> matching;
  std::vector<double> slot_weights;
  std::map<std::string, std::map<std::string, double>> valuations;
  int kappa = 1;
};

/// Validates the market half of a raw scenario (everything but valuations).
std::shared_ptr<const Market> build_market(const RawScenario& raw);

/// Validates and interns a raw scenario. Throws bmlab::Error naming the
/// violated invariant.
Scenario build_scenario(const RawScenario& raw);

/// v_i^s: matching-weighted conditional expectation of i's query values.
double keyword_value(const Scenario& scenario, Index advertiser, Index keyword);

/// Q_i = {q : v_i^q > 0}.
std::vector<Index> positive_queries(const Scenario& scenario, Index advertiser);

/// Keywords whose neighborhood meets the given query set, ascending.
std::vector<Index> keywords_touching(const BipartiteGraph& graph,
                                     std::span<const Index> queries);

/// {s : N_G(s) meets Q_i}, ascending.
std::vector<Index> positive_keywords(const Scenario& scenario, Index advertiser);

/// Sum over queries of P(q) * sum_k w_k * (k-th largest v^q).
double optimal_welfare(const Scenario& scenario);

/// Per-query optimum sum_k w_k v^q_[k] for a single query column.
double query_optimal_welfare(const Market& market, const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace bmlab
