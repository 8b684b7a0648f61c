#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmlab/market.hpp"

namespace bmlab {

/// Per-advertiser positive query sets, as indices into a graph's queries.
using QuerySets = std::vector<std::vector<Index>>;

/// beta = min over advertisers of min(1, kappa / |positive keywords|).
/// Advertisers without positive keywords do not constrain beta.
double kl_expressiveness(const Scenario& scenario);
double kl_expressiveness(const BipartiteGraph& graph, const QuerySets& positive, int kappa);

inline constexpr std::size_t kMaxExactCoverCandidates = 25;
inline constexpr std::size_t kMaxQlQueries = 20;

enum class CoverMode { Exact, Greedy };

struct CoverResult {
  int size = 0;
  bool exact = true;           ///< false for greedy upper bounds
  std::vector<Index> keywords;  ///< one optimal (or greedy) cover
};

/// Fewest keywords whose neighborhoods cover the query set. Exact mode is a
/// branch and bound over the incident keywords seeded with the greedy cover.
/// Throws Uncoverable when a query has no keyword, TooLarge when exact mode
/// would face more than kMaxExactCoverCandidates keywords.
CoverResult min_cover_size(const BipartiteGraph& graph, std::span<const Index> queries,
                           CoverMode mode = CoverMode::Exact);

struct QlResult {
  double alpha = 1.0;
  std::vector<double> per_advertiser;
  /// Smallest subset size needing more than kappa keywords; 0 if none.
  std::vector<int> m_star;
};

/// alpha_i = (m* - 1) / |Q_i|, or 1 when every subset of Q_i is coverable
/// (including |Q_i| = 0); alpha = min_i alpha_i. Throws TooLarge above
/// kMaxQlQueries positive queries and Uncoverable for isolated queries.
QlResult ql_expressiveness(const BipartiteGraph& graph, const QuerySets& positive, int kappa);

/// m*(kappa) for kappa = 0..max_kappa from one pass over all subsets of
/// the query set: entry k is the smallest subset size whose cover needs
/// more than k keywords, or 0 if there is none.
std::vector<int> minimal_uncoverable_sizes(const BipartiteGraph& graph,
                                           std::span<const Index> queries, int max_kappa);

struct PropA1Report {
  Index gamma = 0;  ///< max degree
  double alpha = 1.0;
  double beta = 1.0;
  bool lower_ok = true;  ///< alpha / gamma^2 <= beta
  bool upper_ok = true;  ///< beta <= gamma * alpha
};

PropA1Report prop_a1_check(const BipartiteGraph& graph, const QuerySets& positive, int kappa);

/// Unit-cost edit distance over Unicode code points (UTF-8 input).
std::size_t levenshtein(std::string_view a, std::string_view b);
/// 1 - d(q, s) / max length in code points. Throws EmptyStrings if both are
/// empty.
double similarity(std::string_view query, std::string_view keyword);

struct Footprint {
  std::string advertiser;
  std::vector<std::string> keywords;
};

/// Indices of pool queries with Sim(q, s) > theta for some bid keyword s.
std::vector<Index> positive_queries(const Footprint& footprint,
                                    std::span<const std::string> pool, double theta);

struct Corpus {
  std::vector<std::pair<std::string, std::string>> bids;  ///< (advertiser, keyword)
  std::vector<std::pair<std::string, double>> queries;    ///< (query, frequency)
};

/// Reads bids.csv and queries.csv from a directory.
Corpus read_corpus(const std::filesystem::path& dir);
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Lowercase, punctuation stripped, split on whitespace, sorted unique.
std::vector<std::string> tokenize(std::string_view text, std::span<const std::string> stop_words = {});

struct MicroMarket {
  std::string term;
  BipartiteGraph graph;  ///< keyword joins query when its tokens are a subset
  std::vector<Footprint> footprints;
  Index size() const { return graph.num_keywords(); }
};

/// One market per term shared by a keyword and a query; a keyword with no
/// matching query (and vice versa) is left out of that market's graph.
std::vector<MicroMarket> extract_micro_markets(const Corpus& corpus,
                                               std::span<const std::string> stop_words = {});

struct ExpressivenessRow {
  double theta = 0.0;
  int kappa_bucket = 0;  ///< decile of kappa / size, 0-based
  double mean_alpha = 0.0;
  double mean_beta = 0.0;
  std::size_t n_markets = 0;
};

struct PropA1Entry {
  std::string term;
  double theta = 0.0;
  int kappa = 0;
  PropA1Report report;
};

struct ExpressivenessTable {
  std::vector<ExpressivenessRow> rows;  ///< theta descending, then bucket
  std::vector<PropA1Entry> prop_a1;
  std::vector<std::string> skipped;  ///< "term: reason"
};

/// Decile bucket of kappa / size: ceil(10 kappa / size) - 1.
int kappa_bucket(int kappa, Index size);

/// Default theta grid 0.9, 0.8, ..., 0.
std::vector<double> default_theta_grid();

/// For each market, theta and kappa in 1..size: alpha and beta over the
/// market's advertisers, averaged per (theta, kappa bucket). Markets whose
/// positive query sets outgrow exact alpha are skipped and listed.
ExpressivenessTable expressiveness_sweep(const std::vector<MicroMarket>& markets,
                                         std::span<const double> thetas);

struct SyntheticCorpusOptions {
  int markets = 40;
  int keywords_per_market = 10;
  int max_queries_per_market = 20;
  int advertisers_per_market = 4;
  std::uint64_t seed = 20130611;
};

/// Planted term-sharing corpus: every market has its own head term and
/// modifiers, so markets never merge.
Corpus synthetic_corpus(const SyntheticCorpusOptions& options = {});

}  // namespace bmlab
