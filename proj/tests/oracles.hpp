#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance harness. Each one works straight from the definition and is
// only meant for tiny instances.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bmlab/equilibrium.hpp"
#include "bmlab/market.hpp"
#include "bmlab/mechanisms.hpp"

namespace oracle {

using namespace bmlab;

// Best response by enumerating every joint row: each keyword subset of size
// <= kappa and every combination of grid bids on it, scored by pbm_utility.
inline double joint_best_response(const Scenario& sc, const BidProfile& profile, Index i, const BidGrid& grid) {
  const Index ns = sc.market().num_keywords();
  std::vector<std::vector<double>> pts;
  for (Index s = 0; s < ns; ++s) pts.push_back(grid.points(sc, i, s));
  std::vector<std::size_t> idx(static_cast<std::size_t>(ns), 0);
  double best = 0.0;
  while (true) {
    Eigen::RowVectorXd row(ns);
    int used = 0;
    for (Index s = 0; s < ns; ++s) {
      row[s] = pts[static_cast<std::size_t>(s)][idx[static_cast<std::size_t>(s)]];
      used += row[s] > 0.0;
    }
    if (used <= sc.market().kappa()) best = std::max(best, pbm_utility(sc, profile.with_row(i, row), i));
    Index k = 0;
    for (; k < ns; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < pts[static_cast<std::size_t>(k)].size()) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (k == ns) break;
  }
  return best;
}

// Every profile on the joint grid, checked by unilateral deviation.
inline std::size_t brute_force_equilibria(const Scenario& sc, const BidGrid& grid, double eps,
                                   double* worst_welfare) {
  const Index n = sc.num_advertisers(), ns = sc.market().num_keywords();
  std::vector<std::vector<double>> pts;
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < ns; ++s) pts.push_back(grid.points(sc, i, s));
  }
  std::vector<std::size_t> idx(pts.size(), 0);
  std::size_t found = 0;
  *worst_welfare = 1e300;
  while (true) {
    Eigen::MatrixXd b(n, ns);
    bool ok = true;
    for (Index i = 0; i < n; ++i) {
      int used = 0;
      for (Index s = 0; s < ns; ++s) {
        const std::size_t c = static_cast<std::size_t>(i * ns + s);
        b(i, s) = pts[c][idx[c]];
        used += b(i, s) > 0.0;
      }
      ok = ok && used <= sc.market().kappa();
    }
    if (ok) {
      BidProfile profile(b);
      bool eq = true;
      for (Index i = 0; i < n && eq; ++i) {
        eq = joint_best_response(sc, profile, i, grid) - pbm_utility(sc, profile, i) <= eps;
      }
      if (eq) {
        ++found;
        *worst_welfare = std::min(*worst_welfare, pbm_expected_welfare(sc, profile));
      }
    }
    std::size_t k = 0;
    for (; k < idx.size(); ++k) {
      if (++idx[k] < pts[k].size()) break;
      idx[k] = 0;
    }
    if (k == idx.size()) break;
  }
  return found;
}

inline BipartiteGraph graph_from(int nq, int ns, std::vector<std::pair<int, int>> edges) {
  std::vector<std::string> qs, ss;
  for (int q = 0; q < nq; ++q) qs.push_back("q" + std::to_string(q));
  for (int s = 0; s < ns; ++s) ss.push_back("s" + std::to_string(s));
  std::vector<std::pair<std::string, std::string>> named;
  for (auto [q, s] : edges) named.emplace_back(qs[q], ss[s]);
  return BipartiteGraph::build(qs, ss, named);
}

inline std::vector<Index> all_queries(const BipartiteGraph& g) {
  std::vector<Index> out(static_cast<std::size_t>(g.num_queries()));
  for (Index q = 0; q < g.num_queries(); ++q) out[static_cast<std::size_t>(q)] = q;
  return out;
}

// Smallest keyword subset covering the queries, by enumerating subsets of
// all keywords in increasing size.
inline int cover_oracle(const BipartiteGraph& g, const std::vector<Index>& queries) {
  const Index ns = g.num_keywords();
  int best = -1;
  for (std::uint32_t mask = 0; mask < (1u << ns); ++mask) {
    const int size = std::popcount(mask);
    if (best >= 0 && size >= best) continue;
    bool ok = true;
    for (Index q : queries) {
      bool hit = false;
      for (Index s = 0; s < ns && !hit; ++s) hit = ((mask >> s) & 1u) && g.has_edge(q, s);
      ok = ok && hit;
    }
    if (ok) best = size;
  }
  return best;
}

// alpha for one query set by checking every subset with the cover oracle.
inline double alpha_oracle(const BipartiteGraph& g, const std::vector<Index>& qs, int kappa) {
  const std::size_t n = qs.size();
  if (n == 0) return 1.0;
  std::size_t m_star = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<Index> sub;
    for (std::size_t j = 0; j < n; ++j) {
      if ((mask >> j) & 1u) sub.push_back(qs[j]);
    }
    if (cover_oracle(g, sub) > kappa && (m_star == 0 || sub.size() < m_star)) m_star = sub.size();
  }
  return m_star == 0 ? 1.0 : static_cast<double>(m_star - 1) / static_cast<double>(n);
}

// Definition-level homogeneity: scan every keyword and query pair via
// has_edge rather than adjacency lists.
inline double homogeneity_oracle(const Scenario& sc) {
  const auto& g = sc.graph();
  double c = 1.0;
  for (Index s = 0; s < g.num_keywords(); ++s) {
    for (Index q1 = 0; q1 < g.num_queries(); ++q1) {
      for (Index q2 = 0; q2 < g.num_queries(); ++q2) {
        if (!g.has_edge(q1, s) || !g.has_edge(q2, s)) continue;
        for (Index i = 0; i < sc.num_advertisers(); ++i) {
          const double a = sc.values()(i, q1), b = sc.values()(i, q2);
          if (b > 0) c = std::max(c, a / b);
          else if (a > 0) c = std::numeric_limits<double>::infinity();
        }
      }
    }
  }
  return c;
}

struct Ledger {
  double welfare = 0.0;
  double revenue = 0.0;
  std::vector<double> utility;
};

// PBM-GSP expectations summed over every (query, keyword) pair: positive bids
// ranked high to low with the lower index first on ties, each winner pays
// the next bid down and earns its query value.
inline Ledger pbm_ledger(const Scenario& sc, const BidProfile& b) {
  const Market& m = sc.market();
  const Index n = sc.num_advertisers();
  Ledger out;
  out.utility.assign(static_cast<std::size_t>(n), 0.0);
  for (Index q = 0; q < m.num_queries(); ++q) {
    for (Index s = 0; s < m.num_keywords(); ++s) {
      const double p = m.query_mass()[q] * m.match_prob(q, s);
      if (p == 0.0) continue;
      std::vector<Index> order;
      for (Index i = 0; i < n; ++i) {
        if (b.bid(i, s) > 0.0) order.push_back(i);
      }
      std::sort(order.begin(), order.end(), [&](Index x, Index y) {
        return b.bid(x, s) != b.bid(y, s) ? b.bid(x, s) > b.bid(y, s) : x < y;
      });
      for (std::size_t k = 0; k < order.size(); ++k) {
        const double w = m.slot_weight(static_cast<Index>(k));
        if (w == 0.0) break;
        const Index i = order[k];
        const double price = k + 1 < order.size() ? b.bid(order[k + 1], s) : 0.0;
        out.welfare += p * w * sc.values()(i, q);
        out.revenue += p * w * price;
        out.utility[static_cast<std::size_t>(i)] += p * w * (sc.values()(i, q) - price);
      }
    }
  }
  return out;
}

}  // namespace oracle
