#include "bmlab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bmlab/error.hpp"

namespace bmlab {

namespace {

// u_i^s when advertiser i bids b and everyone else bids as in col; same
// ranking and pricing rule as gsp_rank without building the ranking.
double slot_utility(const Market& market, Index keyword, const double* col, Index n, Index i,
                    double b, double value) {
  if (b <= 0.0) return 0.0;
  Index pos = 0;
  double price = 0.0;
  for (Index j = 0; j < n; ++j) {
    if (j == i) continue;
    const double bj = col[j];
    if (bj <= 0.0) continue;
    if (bj > b || (bj == b && j < i)) {
      ++pos;
    } else {
      price = std::max(price, bj);
    }
  }
  const double w = market.slot_weight(pos);
  if (w <= 0.0) return 0.0;
  return market.keyword_mass()[keyword] * w * (value - price);
}

// Sum of the k largest entries (entries are nonnegative).
double top_k_sum(std::vector<double> xs, int k) {
  const auto take = std::min(xs.size(), static_cast<std::size_t>(k));
  std::partial_sort(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(take), xs.end(),
                    std::greater<>());
  return std::accumulate(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(take), 0.0);
}

std::vector<Index> pick_top(const std::vector<std::pair<Index, double>>& scored, int kappa) {
  auto sorted = scored;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<Index> out;
  for (const auto& [s, u] : sorted) {
    if (static_cast<int>(out.size()) == kappa || !(u > 0.0)) break;
    out.push_back(s);
  }
  return out;
}

std::vector<double> grid_range(double delta, double cap, double limit) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(Errc::InvalidInput, "grid-delta", "must be positive");
  if (cap / delta > 1e6) {
    throw Error(Errc::TooLarge, "grid", "more than 1e6 points per keyword");
  }
  std::vector<double> pts{0.0};
  const double slack = 1e-12 * std::max(1.0, cap);
  for (long k = 1;; ++k) {
    const double x = static_cast<double>(k) * delta;
    if (x > cap + slack || x > limit + slack) break;
    pts.push_back(x);
  }
  return pts;
}

}  // namespace

std::vector<double> BidGrid::points(const Scenario& scenario, Index advertiser, Index keyword) const {
  const double v = scenario.keyword_values()(advertiser, keyword);
  const double top = cap ? *cap : scenario.keyword_values().col(keyword).maxCoeff();
  const double limit = conservative ? v : top;
  auto pts = grid_range(delta, top, limit);
  if (v > 0.0 && v <= top) pts.push_back(v);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double default_epsilon(const Scenario& scenario) {
  return 1e-9 * std::max(scenario.values().maxCoeff(), 1e-300);
}

BestResponse best_response(const Scenario& scenario, const BidProfile& profile, Index advertiser,
                           const BidGrid& grid, const SearchLimits& limits) {
  const Market& market = scenario.market();
  const Index ns = market.num_keywords();
  const Index n = scenario.num_advertisers();
  const auto keywords = positive_keywords(scenario, advertiser);
  if (static_cast<Index>(keywords.size()) > limits.max_keywords || market.kappa() > limits.max_kappa) {
    throw Error(Errc::TooLarge, scenario.advertiser_id(advertiser),
                std::to_string(keywords.size()) + " keywords with kappa " +
                    std::to_string(market.kappa()) + " exceed best-response limits");
  }

  BestResponse br;
  br.bids = Eigen::RowVectorXd::Zero(ns);
  br.keyword_utilities = Eigen::RowVectorXd::Zero(ns);
  Eigen::RowVectorXd best_bid = Eigen::RowVectorXd::Zero(ns);
  std::vector<std::pair<Index, double>> scored;
  for (Index s : keywords) {
    const Eigen::VectorXd col = profile.bids().col(s);
    const double v = scenario.keyword_values()(advertiser, s);
    double best_u = 0.0;
    double best_b = 0.0;
    for (double b : grid.points(scenario, advertiser, s)) {
      const double u = slot_utility(market, s, col.data(), n, advertiser, b, v);
      if (u > best_u) {
        best_u = u;
        best_b = b;
      }
    }
    br.keyword_utilities[s] = best_u;
    best_bid[s] = best_b;
    scored.emplace_back(s, best_u);
  }
  for (Index s : pick_top(scored, market.kappa())) {
    br.bids[s] = best_bid[s];
    br.utility += br.keyword_utilities[s];
  }
  return br;
}

Eigen::VectorXd regrets(const Scenario& scenario, const BidProfile& profile, const BidGrid& grid,
                        const SearchLimits& limits) {
  Eigen::VectorXd out(scenario.num_advertisers());
  for (Index i = 0; i < out.size(); ++i) {
    const double gain = best_response(scenario, profile, i, grid, limits).utility -
                        pbm_utility(scenario, profile, i);
    out[i] = std::max(0.0, gain);
  }
  return out;
}

EquilibriumReport best_response_dynamics(const Scenario& scenario, const BidProfile& initial,
                                         const BidGrid& grid, double epsilon, int max_iters,
                                         const SearchLimits& limits) {
  EquilibriumReport rep{initial, {}, false, 0, 0.0};
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < scenario.num_advertisers(); ++i) {
      const BestResponse br = best_response(scenario, rep.profile, i, grid, limits);
      if (br.utility - pbm_utility(scenario, rep.profile, i) > epsilon) {
        rep.profile = rep.profile.with_row(i, br.bids);
        changed = true;
      }
    }
    rep.iterations = it + 1;
    if (!changed) {
      rep.converged = true;
      break;
    }
  }
  rep.regrets = regrets(scenario, rep.profile, grid, limits);
  rep.welfare = pbm_expected_welfare(scenario, rep.profile);
  return rep;
}

namespace {

struct StableVector {
  std::vector<double> bids;   // one per advertiser
  std::vector<double> best;   // U*_{i,s} given the others' bids
  double welfare = 0.0;       // m_s sum_k w_k v^s_{sigma(k)}
};

std::vector<StableVector> stable_keyword_vectors(const Scenario& scenario, Index s,
                                                 const BidGrid& grid, const EnumerationOptions& opt,
                                                 double eps, const SearchLimits& limits,
                                                 double& examined) {
  const Market& market = scenario.market();
  const Index n = scenario.num_advertisers();
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(n));
  double space = 1.0;
  for (Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i)] = grid.points(scenario, i, s);
    space *= static_cast<double>(pts[static_cast<std::size_t>(i)].size());
  }
  if (space > limits.max_profiles) {
    throw Error(Errc::TooLarge, scenario.graph().keyword_id(s),
                "per-keyword strategy space of " + std::to_string(space) + " profiles");
  }
  examined += space;

  std::vector<StableVector> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> col(static_cast<std::size_t>(n));
  while (true) {
    for (Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = pts[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];

    StableVector sv;
    sv.bids = col;
    sv.best.assign(static_cast<std::size_t>(n), 0.0);
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) {
      const double v = scenario.keyword_values()(i, s);
      double best = 0.0;
      for (double b : pts[static_cast<std::size_t>(i)]) {
        best = std::max(best, slot_utility(market, s, col.data(), n, i, b, v));
      }
      sv.best[static_cast<std::size_t>(i)] = best;
      if (col[static_cast<std::size_t>(i)] > 0.0) {
        ok = slot_utility(market, s, col.data(), n, i, col[static_cast<std::size_t>(i)], v) >= best - eps;
      }
    }
    if (ok) {
      const KeywordRanking ranking = gsp_rank(Eigen::Map<const Eigen::VectorXd>(col.data(), n));
      double per_impression = 0.0;
      for (std::size_t k = 0; k < ranking.size(); ++k) {
        const double w = market.slot_weight(static_cast<Index>(k));
        if (w <= 0.0) break;
        const Index who = ranking.entries[k].advertiser;
        if (opt.winner_truthful && ranking.entries[k].bid != scenario.keyword_values()(who, s)) {
          ok = false;
          break;
        }
        per_impression += w * scenario.keyword_values()(who, s);
      }
      sv.welfare = market.keyword_mass()[s] * per_impression;
    }
    if (ok) out.push_back(std::move(sv));

    Index k = 0;
    for (; k < n; ++k) {
      auto& d = idx[static_cast<std::size_t>(k)];
      if (++d < pts[static_cast<std::size_t>(k)].size()) break;
      d = 0;
    }
    if (k == n) break;
  }
  return out;
}

}  // namespace

EnumerationResult enumerate_pure_nash(const Scenario& scenario, const BidGrid& grid,
                                      const EnumerationOptions& options, const SearchLimits& limits) {
  const Market& market = scenario.market();
  const Index n = scenario.num_advertisers();
  const Index ns = market.num_keywords();
  const double eps = options.epsilon < 0.0 ? default_epsilon(scenario) : options.epsilon;

  EnumerationResult res;
  res.eps_cont = (market.slot_weights().size() > 0 ? market.slot_weights().maxCoeff() : 0.0) * grid.delta;

  std::vector<std::vector<StableVector>> stable;
  double combos = 1.0;
  for (Index s = 0; s < ns; ++s) {
    stable.push_back(stable_keyword_vectors(scenario, s, grid, options, eps, limits, res.profiles_examined));
    combos *= static_cast<double>(stable.back().size());
  }
  if (combos > limits.max_profiles) {
    throw Error(Errc::TooLarge, "profiles",
                "cross-keyword combination space of " + std::to_string(combos) + " profiles");
  }
  res.profiles_examined += combos;
  if (combos == 0.0) return res;

  const int kappa = market.kappa();
  std::vector<std::size_t> pick(static_cast<std::size_t>(ns), 0);
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  std::vector<double> chosen(static_cast<std::size_t>(n), 0.0);
  std::vector<double> best_row(static_cast<std::size_t>(ns));

  auto visit_leaf = [&]() {
    Eigen::VectorXd regret(n);
    for (Index i = 0; i < n; ++i) {
      for (Index s = 0; s < ns; ++s) {
        best_row[static_cast<std::size_t>(s)] = stable[static_cast<std::size_t>(s)][pick[static_cast<std::size_t>(s)]].best[static_cast<std::size_t>(i)];
      }
      const double gap = top_k_sum(best_row, kappa) - chosen[static_cast<std::size_t>(i)];
      if (gap > eps) return;
      regret[i] = std::max(0.0, gap);
    }
    double welfare = 0.0;
    for (Index s = 0; s < ns; ++s) welfare += stable[static_cast<std::size_t>(s)][pick[static_cast<std::size_t>(s)]].welfare;
    ++res.count;
    const bool store = res.equilibria.size() < options.max_stored;
    const bool worst = !res.worst || welfare < res.worst->welfare;
    if (!store && !worst) return;

    Eigen::MatrixXd bids(n, ns);
    for (Index s = 0; s < ns; ++s) {
      const auto& b = stable[static_cast<std::size_t>(s)][pick[static_cast<std::size_t>(s)]].bids;
      for (Index i = 0; i < n; ++i) bids(i, s) = b[static_cast<std::size_t>(i)];
    }
    EquilibriumReport rep{BidProfile(std::move(bids)), regret, true, 0, welfare};
    if (worst) res.worst = rep;
    if (store) res.equilibria.push_back(std::move(rep));
  };

  // Depth-first over keywords, pruning on the keyword budget.
  std::function<void(Index)> dfs = [&](Index s) {
    if (s == ns) {
      visit_leaf();
      return;
    }
    const auto& options_s = stable[static_cast<std::size_t>(s)];
    for (std::size_t k = 0; k < options_s.size(); ++k) {
      const auto& sv = options_s[k];
      bool within = true;
      for (Index i = 0; i < n; ++i) {
        if (sv.bids[static_cast<std::size_t>(i)] > 0.0 && count[static_cast<std::size_t>(i)] + 1 > kappa) within = false;
      }
      if (!within) continue;
      for (Index i = 0; i < n; ++i) {
        if (sv.bids[static_cast<std::size_t>(i)] > 0.0) {
          ++count[static_cast<std::size_t>(i)];
          chosen[static_cast<std::size_t>(i)] += sv.best[static_cast<std::size_t>(i)];
        }
      }
      pick[static_cast<std::size_t>(s)] = k;
      dfs(s + 1);
      for (Index i = 0; i < n; ++i) {
        if (sv.bids[static_cast<std::size_t>(i)] > 0.0) {
          --count[static_cast<std::size_t>(i)];
          chosen[static_cast<std::size_t>(i)] -= sv.best[static_cast<std::size_t>(i)];
        }
      }
    }
  };
  dfs(0);
  return res;
}

BidProfile single_slot_dominant_profile(const Scenario& scenario,
                                        const std::vector<std::vector<Index>>& chosen) {
  if (!scenario.market().single_slot()) {
    throw Error(Errc::NotSingleSlot, "slot_weights", "dominant bidding needs w_2 = 0");
  }
  if (static_cast<Index>(chosen.size()) != scenario.num_advertisers()) {
    throw Error(Errc::InvalidInput, "chosen", "one keyword set per advertiser");
  }
  Eigen::MatrixXd bids = Eigen::MatrixXd::Zero(scenario.num_advertisers(), scenario.market().num_keywords());
  for (Index i = 0; i < bids.rows(); ++i) {
    for (Index s : chosen[static_cast<std::size_t>(i)]) bids(i, s) = scenario.keyword_values()(i, s);
  }
  return BidProfile(std::move(bids), scenario.market().kappa());
}

namespace {

std::vector<Index> top_kappa_row(const Market& market, const Eigen::RowVectorXd& kv) {
  std::vector<std::pair<Index, double>> scored;
  for (Index s = 0; s < kv.size(); ++s) scored.emplace_back(s, market.keyword_mass()[s] * kv[s]);
  return pick_top(scored, market.kappa());
}

}  // namespace

std::vector<std::vector<Index>> top_kappa_keywords(const Scenario& scenario) {
  std::vector<std::vector<Index>> out;
  for (Index i = 0; i < scenario.num_advertisers(); ++i) {
    out.push_back(top_kappa_row(scenario.market(), scenario.keyword_values().row(i)));
  }
  return out;
}

Strategy truthful_strategy(std::shared_ptr<const Market> market) {
  return shaded_strategy(std::move(market), 1.0);
}

Strategy zero_strategy() {
  return [](Index, const Eigen::RowVectorXd& kv) -> Eigen::RowVectorXd {
    return Eigen::RowVectorXd::Zero(kv.size());
  };
}

Strategy shaded_strategy(std::shared_ptr<const Market> market, double factor) {
  return [market, factor](Index, const Eigen::RowVectorXd& kv) -> Eigen::RowVectorXd {
    Eigen::RowVectorXd bids = Eigen::RowVectorXd::Zero(kv.size());
    for (Index s : top_kappa_row(*market, kv)) bids[s] = factor * kv[s];
    return bids;
  };
}

RegretEstimate estimate_bne_regret(const BayesScenario& bayes, const Strategy& strategy,
                                   std::size_t type_samples, std::size_t opponent_samples,
                                   double delta, Rng& rng) {
  if (type_samples == 0 || opponent_samples == 0) {
    throw Error(Errc::InvalidInput, "samples", "need at least one type and one opponent sample");
  }
  if (!(delta > 0.0)) throw Error(Errc::InvalidInput, "grid-delta", "must be positive");
  const Market& market = bayes.market();
  const Index n = bayes.num_advertisers();
  const Index ns = market.num_keywords();
  const auto& kw = market.keyword_weights();

  RegretEstimate est;
  est.mean = Eigen::VectorXd::Zero(n);
  est.std_error = Eigen::VectorXd::Zero(n);
  est.type_samples = type_samples;

  // opp[k] holds one sampled bid matrix, keyword-major so columns are contiguous.
  std::vector<Eigen::MatrixXd> opp(opponent_samples, Eigen::MatrixXd::Zero(n, ns));
  for (Index i = 0; i < n; ++i) {
    std::vector<double> regret(type_samples);
    for (std::size_t t = 0; t < type_samples; ++t) {
      const Eigen::RowVectorXd own_kv = bayes.sample_values(i, rng).transpose() * kw;
      const Eigen::RowVectorXd own_bid = strategy(i, own_kv);
      for (auto& m : opp) {
        for (Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const Eigen::RowVectorXd kv = bayes.sample_values(j, rng).transpose() * kw;
          m.row(j) = strategy(j, kv);
        }
      }

      double current = 0.0;
      std::vector<double> best(static_cast<std::size_t>(ns), 0.0);
      for (Index s = 0; s < ns; ++s) {
        double cap = own_kv[s];
        for (const auto& m : opp) cap = std::max(cap, m.col(s).maxCoeff());
        auto cands = grid_range(delta, cap, cap);
        cands.push_back(own_bid[s]);
        cands.push_back(own_kv[s]);
        const auto expected = [&](double b) {
          double total = 0.0;
          for (const auto& m : opp) {
            const Eigen::VectorXd col = m.col(s);
            total += slot_utility(market, s, col.data(), n, i, b, own_kv[s]);
          }
          return total / static_cast<double>(opp.size());
        };
        const double cur = expected(own_bid[s]);
        current += cur;
        double b_best = cur;
        for (double b : cands) b_best = std::max(b_best, expected(b));
        best[static_cast<std::size_t>(s)] = std::max(0.0, b_best);
      }
      regret[t] = std::max(0.0, top_k_sum(best, market.kappa()) - current);
    }
    const double mean = std::accumulate(regret.begin(), regret.end(), 0.0) / static_cast<double>(type_samples);
    double var = 0.0;
    for (double r : regret) var += (r - mean) * (r - mean);
    var = type_samples > 1 ? var / static_cast<double>(type_samples - 1) : 0.0;
    est.mean[i] = mean;
    est.std_error[i] = std::sqrt(var / static_cast<double>(type_samples));
  }
  return est;
}

}  // namespace bmlab
