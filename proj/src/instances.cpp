#include "bmlab/instances.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace bmlab {

namespace {

int draw_between(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

std::vector<std::pair<int, int>> random_edges(Rng& rng, int nq, int ns, double p) {
  std::vector<std::vector<char>> adj(static_cast<std::size_t>(nq),
                                     std::vector<char>(static_cast<std::size_t>(ns), 0));
  for (auto& row : adj) {
    for (auto& e : row) e = uniform01(rng) < p;
  }
  for (int q = 0; q < nq; ++q) {
    auto& row = adj[static_cast<std::size_t>(q)];
    if (std::find(row.begin(), row.end(), 1) == row.end()) row[uniform_index(rng, ns)] = 1;
  }
  for (int s = 0; s < ns; ++s) {
    bool any = false;
    for (int q = 0; q < nq; ++q) any = any || adj[static_cast<std::size_t>(q)][static_cast<std::size_t>(s)];
    if (!any) adj[uniform_index(rng, nq)][static_cast<std::size_t>(s)] = 1;
  }
  std::vector<std::pair<int, int>> edges;
  for (int q = 0; q < nq; ++q) {
    for (int s = 0; s < ns; ++s) {
      if (adj[static_cast<std::size_t>(q)][static_cast<std::size_t>(s)]) edges.emplace_back(q, s);
    }
  }
  return edges;
}

// Positive weights bounded away from zero, normalized to one.
std::vector<double> random_simplex(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& x : w) x = 0.2 + uniform01(rng);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

std::string qname(int q) { return "q" + std::to_string(q + 1); }
std::string sname(int s) { return "s" + std::to_string(s + 1); }

}  // namespace

RawScenario random_raw_scenario(Rng& rng, const RandomScenarioOptions& opt) {
  const int n = draw_between(rng, opt.min_advertisers, opt.max_advertisers);
  const int nq = draw_between(rng, 1, opt.max_queries);
  const int ns = draw_between(rng, 1, opt.max_keywords);

  RawScenario raw;
  for (int q = 0; q < nq; ++q) raw.queries.push_back(qname(q));
  for (int s = 0; s < ns; ++s) raw.keywords.push_back(sname(s));
  const auto edges = random_edges(rng, nq, ns, opt.edge_prob);
  for (auto [q, s] : edges) raw.edges.emplace_back(qname(q), sname(s));

  const auto p = random_simplex(rng, static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) raw.query_dist[qname(q)] = p[static_cast<std::size_t>(q)];
  for (int q = 0; q < nq; ++q) {
    std::vector<int> nbhd;
    for (auto [eq, es] : edges) {
      if (eq == q) nbhd.push_back(es);
    }
    const auto pi = random_simplex(rng, nbhd.size());
    for (std::size_t k = 0; k < nbhd.size(); ++k) raw.matching[qname(q)][sname(nbhd[k])] = pi[k];
  }

  raw.slot_weights = opt.slot_weights;
  raw.kappa = opt.kappa > 0 ? opt.kappa : draw_between(rng, 1, ns);

  std::vector<std::vector<double>> v(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(nq)));
  for (auto& row : v) {
    for (auto& x : row) {
      x = uniform01(rng) < opt.zero_prob ? 0.0 : static_cast<double>(draw_between(rng, 1, opt.value_levels));
    }
  }
  for (int q = 0; q < nq; ++q) {
    bool any = false;
    for (const auto& row : v) any = any || row[static_cast<std::size_t>(q)] > 0.0;
    if (!any) {
      v[uniform_index(rng, static_cast<std::size_t>(n))][static_cast<std::size_t>(q)] =
          static_cast<double>(draw_between(rng, 1, opt.value_levels));
    }
  }
  for (int i = 0; i < n; ++i) {
    const std::string id = "a" + std::to_string(i + 1);
    for (int q = 0; q < nq; ++q) raw.valuations[id][qname(q)] = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)];
  }
  return raw;
}

BipartiteGraph random_graph(Rng& rng, int num_queries, int num_keywords, double edge_prob) {
  std::vector<std::string> qs, ss;
  for (int q = 0; q < num_queries; ++q) qs.push_back(qname(q));
  for (int s = 0; s < num_keywords; ++s) ss.push_back(sname(s));
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto [q, s] : random_edges(rng, num_queries, num_keywords, edge_prob)) {
    edges.emplace_back(qname(q), sname(s));
  }
  return BipartiteGraph::build(std::move(qs), std::move(ss), edges);
}

BidProfile random_bid_profile(const Scenario& scenario, Rng& rng, double overbid) {
  const Index n = scenario.num_advertisers();
  const Index ns = scenario.market().num_keywords();
  const auto kappa = static_cast<std::size_t>(scenario.market().kappa());
  const double top = scenario.values().maxCoeff();
  Eigen::MatrixXd bids = Eigen::MatrixXd::Zero(n, ns);
  std::vector<Index> order(static_cast<std::size_t>(ns));
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
    const std::size_t take = uniform_index(rng, std::min(kappa, order.size()) + 1);
    for (std::size_t k = 0; k < take; ++k) {
      const Index s = order[k];
      const double v = scenario.keyword_values()(i, s);
      // Advertisers with no value on a keyword still sometimes bid on it.
      const double scale = v > 0.0 ? v : 0.25 * top;
      bids(i, s) = scale * overbid * uniform01(rng);
    }
  }
  return BidProfile(std::move(bids), scenario.market().kappa());
}

}  // namespace bmlab
