#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bmlab/equilibrium.hpp"
#include "bmlab/error.hpp"
#include "bmlab/instances.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bmlab;
using namespace oracle;

namespace {

Scenario two_bidder_single(double va, double vb, std::vector<double> w = {1.0}) {
  return build_scenario(testing::single_raw(std::move(w), {{"A", va}, {"B", vb}}));
}

}  // namespace

TEST_CASE("grid points") {
  Scenario sc = two_bidder_single(5, 2.5);
  BidGrid grid{1.0, std::nullopt, false};
  CHECK(grid.points(sc, 1, 0) == std::vector<double>{0, 1, 2, 2.5, 3, 4, 5});
  grid.conservative = true;
  CHECK(grid.points(sc, 1, 0) == std::vector<double>{0, 1, 2, 2.5});
}

TEST_CASE("best response examples") {
  SUBCASE("smallest winning grid bid, ties to the lower index") {
    Scenario sc = two_bidder_single(5, 3);
    Eigen::MatrixXd b(2, 1);
    b << 0, 3;
    auto br = best_response(sc, BidProfile(b), 0, BidGrid{1.0, std::nullopt, true});
    CHECK(br.bids[0] == 3.0);
    CHECK(br.utility == doctest::Approx(2.0 * sc.market().keyword_mass()[0]));
  }
  SUBCASE("losing is dominant") {
    Scenario sc = two_bidder_single(2, 3);
    Eigen::MatrixXd b(2, 1);
    b << 0, 3;
    auto br = best_response(sc, BidProfile(b), 0, BidGrid{1.0, std::nullopt, true});
    CHECK(br.bids[0] == 0.0);
    CHECK(br.utility == 0.0);
  }
  SUBCASE("top kappa keyword") {
    auto raw = testing::diagonal_raw(2, {1.0}, 1);
    raw.valuations["A"] = {{"q1", 8.0}, {"q2", 14.0}};
    Scenario sc = build_scenario(raw);
    auto br = best_response(sc, BidProfile::empty(sc), 0, BidGrid{1.0, std::nullopt, true});
    CHECK(br.bids[0] == 0.0);
    CHECK(br.bids[1] > 0.0);
    CHECK(br.utility == doctest::Approx(7.0));
  }
  SUBCASE("limits") {
    auto raw = testing::diagonal_raw(2, {1.0}, 2);
    raw.valuations["A"] = {{"q1", 1.0}, {"q2", 1.0}};
    Scenario sc = build_scenario(raw);
    SearchLimits tight;
    tight.max_keywords = 1;
    CHECK_THROWS_AS(best_response(sc, BidProfile::empty(sc), 0, BidGrid{}, tight), Error);
  }
}

TEST_CASE("separable best response equals joint enumeration") {
  Rng rng(kDefaultSeed);
  RandomScenarioOptions opt;
  opt.max_keywords = 3;
  opt.value_levels = 5;
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    opt.slot_weights = trial % 2 ? std::vector<double>{1.0, 0.5} : std::vector<double>{1.0};
    opt.kappa = 1 + trial % 2;
    RawScenario raw = random_raw_scenario(rng, opt);
    raw.kappa = std::min<int>(raw.kappa, static_cast<int>(raw.keywords.size()));
    Scenario sc = build_scenario(raw);
    // cap 5 and delta 1 gives six grid points per keyword
    BidGrid grid{1.0, 5.0, false};
    auto profile = random_bid_profile(sc, rng);
    for (Index i = 0; i < sc.num_advertisers(); ++i) {
      const auto br = best_response(sc, profile, i, grid);
      CHECK(br.utility == doctest::Approx(joint_best_response(sc, profile, i, grid)).epsilon(1e-12));
      CHECK(pbm_utility(sc, profile.with_row(i, br.bids), i) == doctest::Approx(br.utility).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked > 150);
}

TEST_CASE("best response dynamics") {
  SUBCASE("truthful single slot start converges at once") {
    Scenario sc = two_bidder_single(5, 3);
    auto start = single_slot_dominant_profile(sc, top_kappa_keywords(sc));
    auto rep = best_response_dynamics(sc, start, BidGrid{0.5, std::nullopt, true}, 1e-9, 10);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK(rep.regrets.maxCoeff() <= 1e-9);
  }
  SUBCASE("zero iterations") {
    Scenario sc = two_bidder_single(5, 3);
    auto rep = best_response_dynamics(sc, BidProfile::empty(sc), BidGrid{}, 1e-9, 0);
    CHECK_FALSE(rep.converged);
    CHECK(rep.profile.bids().isZero());
  }
  SUBCASE("converged reports pass the deviation check") {
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
      Scenario sc = build_scenario(random_raw_scenario(rng));
      BidGrid grid{1.0, std::nullopt, true};
      auto rep = best_response_dynamics(sc, BidProfile::empty(sc), grid, 1e-9, 50);
      if (!rep.converged) continue;
      for (Index i = 0; i < sc.num_advertisers(); ++i) {
        CHECK(joint_best_response(sc, rep.profile, i, grid) - pbm_utility(sc, rep.profile, i) <= 1e-9);
      }
    }
  }
}

TEST_CASE("pure Nash enumeration") {
  SUBCASE("lone bidder: every positive bid is an equilibrium") {
    Scenario sc = build_scenario(testing::single_raw({1.0}, {{"A", 3.0}}));
    auto res = enumerate_pure_nash(sc, BidGrid{1.0, std::nullopt, true});
    // bids 1, 2, 3 all win at price 0; bidding 0 forgoes positive utility
    CHECK(res.count == 3);
  }
  SUBCASE("two bidders values 5 and 3 against brute force") {
    Scenario sc = two_bidder_single(5, 3);
    BidGrid grid{1.0, std::nullopt, true};
    auto res = enumerate_pure_nash(sc, grid);
    double worst = 0.0;
    CHECK(res.count == brute_force_equilibria(sc, grid, default_epsilon(sc), &worst));
    REQUIRE(res.worst);
    CHECK(res.worst->welfare == doctest::Approx(worst));
    for (const auto& eq : res.equilibria) {
      // the high-value bidder wins, ties included, and bids at least 3
      CHECK(eq.profile.bid(0, 0) >= eq.profile.bid(1, 0));
      CHECK(eq.profile.bid(0, 0) >= 3.0);
    }
  }
  SUBCASE("random instances against brute force") {
    Rng rng(404);
    RandomScenarioOptions opt;
    opt.max_advertisers = 2;
    opt.max_keywords = 2;
    opt.max_queries = 2;
    opt.value_levels = 4;
    for (int trial = 0; trial < 40; ++trial) {
      opt.slot_weights = trial % 2 ? std::vector<double>{1.0, 0.5} : std::vector<double>{1.0};
      Scenario sc = build_scenario(random_raw_scenario(rng, opt));
      BidGrid grid{1.0, std::nullopt, true};
      auto res = enumerate_pure_nash(sc, grid);
      double worst = 0.0;
      const auto oracle = brute_force_equilibria(sc, grid, default_epsilon(sc), &worst);
      CHECK(res.count == oracle);
      if (oracle > 0) CHECK(res.worst->welfare == doctest::Approx(worst));
      for (const auto& eq : res.equilibria) {
        for (Index i = 0; i < sc.num_advertisers(); ++i) {
          CHECK(joint_best_response(sc, eq.profile, i, grid) - pbm_utility(sc, eq.profile, i) <= 1e-9);
        }
      }
    }
  }
  SUBCASE("too large") {
    RawScenario raw = testing::diagonal_raw(10, {1.0}, 1);
    for (int i = 0; i < 10; ++i) {
      for (int q = 0; q < 10; ++q) raw.valuations["a" + std::to_string(i)]["q" + std::to_string(q + 1)] = 8.0;
    }
    Scenario sc = build_scenario(raw);
    try {
      enumerate_pure_nash(sc, BidGrid{1.0, std::nullopt, true});
      FAIL("expected TooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::TooLarge);
    }
  }
}

TEST_CASE("single-slot dominant profile") {
  Rng rng(8);
  for (int trial = 0; trial < 80; ++trial) {
    Scenario sc = build_scenario(random_raw_scenario(rng));
    auto chosen = top_kappa_keywords(sc);
    auto profile = single_slot_dominant_profile(sc, chosen);
    for (Index i = 0; i < sc.num_advertisers(); ++i) {
      for (Index s : chosen[static_cast<std::size_t>(i)]) {
        CHECK(profile.bid(i, s) == sc.keyword_values()(i, s));
        // no grid deviation on a chosen keyword helps
        const double base = pbm_utility(sc, profile, i);
        for (double b = 0.0; b <= sc.keyword_values().col(s).maxCoeff() + 1.0; b += 0.25) {
          Eigen::RowVectorXd row = profile.bids().row(i);
          row[s] = b;
          CHECK(pbm_utility(sc, profile.with_row(i, row), i) <= base + 1e-9);
        }
      }
    }
  }
  Scenario multi = two_bidder_single(5, 3, {1.0, 0.5});
  CHECK_THROWS_AS(single_slot_dominant_profile(multi, top_kappa_keywords(multi)), Error);
}

TEST_CASE("overbids are weakly dominated") {
  Rng rng(31);
  RandomScenarioOptions opt;
  for (int trial = 0; trial < 200; ++trial) {
    opt.slot_weights = trial % 2 ? std::vector<double>{1.0, 0.6} : std::vector<double>{1.0};
    Scenario sc = build_scenario(random_raw_scenario(rng, opt));
    auto profile = random_bid_profile(sc, rng, 2.0);
    for (Index i = 0; i < sc.num_advertisers(); ++i) {
      Eigen::RowVectorXd row = profile.bids().row(i);
      for (Index s = 0; s < row.size(); ++s) row[s] = std::min(row[s], sc.keyword_values()(i, s));
      CHECK(pbm_utility(sc, profile.with_row(i, row), i) >= pbm_utility(sc, profile, i) - 1e-9);
    }
  }
}

TEST_CASE("Bayes-Nash regret estimates") {
  RawScenario raw = testing::diagonal_raw(1, {1.0});
  auto market = build_market(raw);
  BayesScenario bayes(market, {"a", "b"},
                      {{Distribution::uniform(0, 1)}, {Distribution::uniform(0, 1)}});
  Rng rng(kDefaultSeed);
  auto truthful = estimate_bne_regret(bayes, truthful_strategy(market), 200, 200, 0.05, rng);
  for (Index i = 0; i < 2; ++i) CHECK(truthful.mean[i] <= 2 * truthful.std_error[i] + 1e-12);

  auto zero = estimate_bne_regret(bayes, zero_strategy(), 200, 200, 0.05, rng);
  for (Index i = 0; i < 2; ++i) CHECK(zero.mean[i] > 3 * zero.std_error[i]);

  CHECK_THROWS_AS(estimate_bne_regret(bayes, zero_strategy(), 0, 10, 0.05, rng), Error);
}
