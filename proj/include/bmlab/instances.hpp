#pragma once

#include <vector>

#include "bmlab/mechanisms.hpp"
#include "bmlab/random.hpp"

namespace bmlab {

/// Knobs for small random instances used by fuzzing and acceptance runs.
struct RandomScenarioOptions {
  int max_advertisers = 3;
  int max_queries = 4;
  int max_keywords = 3;
  int min_advertisers = 1;
  std::vector<double> slot_weights{1.0};
  int kappa = 0;            ///< 0 draws uniformly from 1..|S|
  int value_levels = 10;    ///< values are integers 1..value_levels, or 0
  double zero_prob = 0.25;  ///< chance a value entry is zero
  double edge_prob = 0.5;
};

/// Random connected-enough market: every vertex gets at least one edge,
/// P and pi are normalized random weights, every query has a positive
/// advertiser.
RawScenario random_raw_scenario(Rng& rng, const RandomScenarioOptions& opt = {});

/// Random bipartite graph with no isolated vertex.
BipartiteGraph random_graph(Rng& rng, int num_queries, int num_keywords, double edge_prob);

/// Random profile respecting kappa. Each advertiser picks up to kappa
/// keywords; a bid is value * U(0, overbid) so overbid > 1 produces
/// non-conservative bids.
BidProfile random_bid_profile(const Scenario& scenario, Rng& rng, double overbid = 1.5);

}  // namespace bmlab
