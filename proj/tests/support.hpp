#pragma once

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "bmlab/market.hpp"

namespace testing {

using bmlab::RawScenario;

/// One query per keyword, uniform traffic, identity matching.
inline RawScenario diagonal_raw(int n_pairs, std::vector<double> weights, int kappa = 1) {
  RawScenario raw;
  for (int k = 0; k < n_pairs; ++k) {
    const std::string q = "q" + std::to_string(k + 1);
    const std::string s = "s" + std::to_string(k + 1);
    raw.queries.push_back(q);
    raw.keywords.push_back(s);
    raw.edges.emplace_back(q, s);
    raw.query_dist[q] = 1.0 / n_pairs;
    raw.matching[q][s] = 1.0;
  }
  raw.slot_weights = std::move(weights);
  raw.kappa = kappa;
  return raw;
}

/// Single query q1 matched to a single keyword s1.
inline RawScenario single_raw(std::vector<double> weights,
                              std::initializer_list<std::pair<const char*, double>> values) {
  RawScenario raw = diagonal_raw(1, std::move(weights));
  for (const auto& [id, v] : values) raw.valuations[id]["q1"] = v;
  return raw;
}

}  // namespace testing
