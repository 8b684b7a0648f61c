#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bmlab/instances.hpp"
#include "bmlab/mechanisms.hpp"
#include "support.hpp"

using namespace bmlab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Index>(xs.size()));
  Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

// One query split evenly over two keywords; used for the PBM/SBM contrast.
Scenario split_query_scenario() {
  RawScenario raw;
  raw.queries = {"q"};
  raw.keywords = {"s1", "s2"};
  raw.edges = {{"q", "s1"}, {"q", "s2"}};
  raw.query_dist = {{"q", 1.0}};
  raw.matching["q"] = {{"s1", 0.5}, {"s2", 0.5}};
  raw.slot_weights = {1.0};
  raw.valuations["A"] = {{"q", 7.0}};
  raw.valuations["B"] = {{"q", 3.0}};
  return build_scenario(raw);
}

// Welfare of the best allocation of values to weighted slots, over every
// assignment of distinct advertisers (or nobody) to slots.
double best_welfare_excluding(const std::vector<double>& values, const std::vector<double>& w,
                              int excluded) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(values.size()); ++i) {
    if (i != excluded) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < w.size() && k < idx.size(); ++k) total += w[k] * values[static_cast<std::size_t>(idx[k])];
    best = std::max(best, total);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

// VCG payment by the externality definition: welfare others would get
// without i minus welfare others get with i.
std::vector<double> vcg_externality_payments(const std::vector<double>& values,
                                             const std::vector<double>& w) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)]; });
  std::vector<double> pay;
  for (std::size_t k = 0; k < w.size() && k < order.size(); ++k) {
    const int i = order[k];
    double others_with = 0.0;
    for (std::size_t j = 0; j < w.size() && j < order.size(); ++j) {
      if (j != k) others_with += w[j] * values[static_cast<std::size_t>(order[j])];
    }
    pay.push_back(best_welfare_excluding(values, w, i) - others_with);
  }
  return pay;
}

// With a reserve, the single-parameter payment is w_k * b - integral of the
// allocation curve x(z) from the reserve up to b; integrated by a fine sum.
double myerson_payment(std::vector<double> values, const std::vector<double>& w, double reserve,
                       std::size_t who) {
  const double b = values[who];
  const auto alloc = [&](double z) {
    if (z < reserve) return 0.0;
    int above = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (j != who && values[j] >= reserve && values[j] > z) ++above;
    }
    return static_cast<std::size_t>(above) < w.size() ? w[static_cast<std::size_t>(above)] : 0.0;
  };
  const int steps = 200000;
  const double h = (b - reserve) / steps;
  double area = 0.0;
  for (int k = 0; k < steps; ++k) area += alloc(reserve + (k + 0.5) * h) * h;
  return alloc(b) * b - area;
}

}  // namespace

TEST_CASE("gsp ranking examples") {
  auto r = gsp_rank(vec({5, 3, 2}));
  REQUIRE(r.size() == 3);
  CHECK(r.entries[0].advertiser == 0);
  CHECK(r.entries[0].price == 3);
  CHECK(r.entries[1].price == 2);
  CHECK(r.entries[2].price == 0);

  auto reserved = gsp_rank(vec({5, 3}), 4.0);
  REQUIRE(reserved.size() == 1);
  CHECK(reserved.entries[0].price == 4.0);

  CHECK(gsp_rank(Eigen::VectorXd(0)).size() == 0);

  auto tie = gsp_rank(vec({2, 4, 4}));
  CHECK(tie.entries[0].advertiser == 1);
  CHECK(tie.entries[1].advertiser == 2);
  CHECK(tie.entries[0].price == 4);
}

TEST_CASE("random tie-break only permutes equal bids") {
  Rng rng(3);
  int first_is_one = 0;
  for (int t = 0; t < 2000; ++t) {
    auto r = gsp_rank(vec({4, 4, 1}), std::nullopt, TieBreak::Random, &rng);
    CHECK(r.entries[2].advertiser == 2);
    first_is_one += r.entries[0].advertiser == 1;
  }
  CHECK(first_is_one > 850);
  CHECK(first_is_one < 1150);
}

TEST_CASE("prices never exceed the ranked bid") {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd b(5);
    for (Index k = 0; k < 5; ++k) b[k] = std::floor(uniform01(rng) * 6);
    const double r = uniform01(rng) < 0.5 ? 0.0 : 2.5;
    auto rank = gsp_rank(b, r);
    for (std::size_t k = 0; k < rank.size(); ++k) {
      CHECK(rank.entries[k].price <= rank.entries[k].bid);
      if (k > 0) CHECK(rank.entries[k].bid <= rank.entries[k - 1].bid);
    }
  }
}

TEST_CASE("expected welfare examples") {
  Scenario one = build_scenario(testing::single_raw({1.0}, {{"A", 7.0}}));
  CHECK(pbm_expected_welfare(one, make_bid_profile(one, Eigen::MatrixXd::Constant(1, 1, 5.0))) == 7.0);
  CHECK(pbm_expected_welfare(one, BidProfile::empty(one)) == 0.0);

  Scenario sc = split_query_scenario();
  Eigen::MatrixXd b(2, 2);
  b << 5, 0, 0, 3;
  auto bids = make_bid_profile(sc, b);
  CHECK(pbm_expected_welfare(sc, bids) == doctest::Approx(5.0));
  CHECK(sbm_expected_welfare(sc, bids) == doctest::Approx(7.0));
  CHECK(sbm_expected_welfare(sc, BidProfile::empty(sc)) == 0.0);
}

TEST_CASE("utility uses the runner-up price") {
  RawScenario raw = testing::diagonal_raw(2, {1.0});
  raw.keywords = {"s"};
  raw.edges = {{"q1", "s"}, {"q2", "s"}};
  raw.matching.clear();
  raw.matching["q1"]["s"] = 1.0;
  raw.matching["q2"]["s"] = 1.0;
  raw.valuations["A"] = {{"q1", 4.0}, {"q2", 6.0}};
  raw.valuations["B"] = {{"q1", 3.0}, {"q2", 3.0}};
  Scenario sc = build_scenario(raw);
  Eigen::MatrixXd b(2, 1);
  b << 5, 3;
  auto bids = make_bid_profile(sc, b);
  // 0.5 (4 - 3) + 0.5 (6 - 3)
  CHECK(pbm_utility(sc, bids, 0) == doctest::Approx(2.0));
  CHECK(pbm_utility(sc, bids, 1) == 0.0);

  b << 3, 3;
  CHECK(pbm_utility(sc, make_bid_profile(sc, b), 1) == 0.0);
}

TEST_CASE("sbm query bid") {
  Scenario sc = split_query_scenario();
  Eigen::MatrixXd b(2, 2);
  b << 2, 5, 0, 0;
  BidProfile bids(b);
  CHECK(sbm_query_bid(sc, bids, 0, 0) == 5);
  CHECK(sbm_query_bid(sc, bids, 1, 0) == 0);
}

TEST_CASE("revenue with reserve examples") {
  Scenario sc = build_scenario(testing::single_raw({1.0}, {{"A", 6}, {"B", 4}}));
  Eigen::MatrixXd b(2, 1);
  b << 5, 3;
  auto bids = make_bid_profile(sc, b);
  const double mass = sc.market().keyword_mass()[0];
  CHECK(revenue_with_reserve(sc, bids, vec({0.0})) == doctest::Approx(3 * mass));
  CHECK(revenue_with_reserve(sc, bids, vec({4.0})) == doctest::Approx(4 * mass));
  CHECK(revenue_with_reserve(sc, bids, vec({9.0})) == 0.0);
}

TEST_CASE("vcg payments against externality and payment-identity oracles") {
  SUBCASE("examples") {
    auto single = vcg_keyword(vec({5, 3}), vec({1.0}), 0.0);
    CHECK(single.payments == std::vector<double>{3.0});
    auto reserved = vcg_keyword(vec({5, 3}), vec({1.0}), 4.0);
    CHECK(reserved.payments == std::vector<double>{4.0});

    const std::vector<double> vals{5, 3, 2}, w{1.0, 0.5};
    auto two = vcg_keyword(vec({5, 3, 2}), vec({1.0, 0.5}), 0.0);
    const auto oracle = vcg_externality_payments(vals, w);
    REQUIRE(two.payments.size() == 2);
    CHECK(two.payments[0] == doctest::Approx(oracle[0]));
    CHECK(two.payments[1] == doctest::Approx(oracle[1]));
    CHECK(two.payments[0] == doctest::Approx(2.5));
    CHECK(two.payments[1] == doctest::Approx(1.0));
  }
  SUBCASE("random") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 1 + uniform_index(rng, 4);
      std::vector<double> vals(n);
      // Distinct values: the payment identity needs a strict ranking.
      for (std::size_t i = 0; i < n; ++i) vals[i] = 1 + std::floor(uniform01(rng) * 9) + 0.01 * static_cast<double>(i);
      std::vector<double> w{1.0, 0.7, 0.3};
      w.resize(1 + uniform_index(rng, 3));
      Eigen::VectorXd ve = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Index>(n));
      Eigen::VectorXd we = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));

      auto out = vcg_keyword(ve, we, 0.0);
      const auto ext = vcg_externality_payments(vals, w);
      REQUIRE(out.payments.size() == ext.size());
      for (std::size_t k = 0; k < ext.size(); ++k) CHECK(out.payments[k] == doctest::Approx(ext[k]));

      const double r = 0.5 + std::floor(uniform01(rng) * 8);
      auto res = vcg_keyword(ve, we, r);
      for (std::size_t k = 0; k < res.ranking.size(); ++k) {
        const auto who = static_cast<std::size_t>(res.ranking[k]);
        CHECK(res.payments[k] == doctest::Approx(myerson_payment(vals, w, r, who)).epsilon(1e-4));
        CHECK(res.payments[k] >= r * w[k] - 1e-12);
      }
    }
  }
}

TEST_CASE("pbm round follows the matching distribution") {
  Scenario sc = split_query_scenario();
  Eigen::MatrixXd b(2, 2);
  b << 5, 0, 0, 3;
  auto bids = make_bid_profile(sc, b);
  Rng rng(kDefaultSeed);
  const int rounds = 100000;
  int first = 0;
  for (int t = 0; t < rounds; ++t) {
    auto out = pbm_run_round(sc, bids, 0, rng);
    first += *out.sampled_keyword == 0;
    REQUIRE(out.awards.size() == 1);
    CHECK(out.awards[0].advertiser == *out.sampled_keyword);
  }
  const double sigma = std::sqrt(0.25 / rounds);
  CHECK(std::abs(first / double(rounds) - 0.5) <= 3 * sigma);

  Scenario one = build_scenario(testing::single_raw({1.0, 0.5}, {{"A", 5}, {"B", 3}, {"C", 1}}));
  Eigen::MatrixXd ob(3, 1);
  ob << 5, 3, 2;
  auto round = pbm_run_round(one, make_bid_profile(one, ob), 0, rng);
  REQUIRE(round.awards.size() == 2);
  CHECK(round.awards[0].price == 3);
  CHECK(round.awards[1].price == 2);
  CHECK(round.revenue == doctest::Approx(3 + 0.5 * 2));
}

TEST_CASE("monte carlo welfare converges to the exact functional") {
  Rng gen(21);
  RandomScenarioOptions opt;
  opt.slot_weights = {1.0, 0.5};
  for (int trial = 0; trial < 5; ++trial) {
    Scenario sc = build_scenario(random_raw_scenario(gen, opt));
    auto bids = random_bid_profile(sc, gen, 1.0);
    Rng rng(kDefaultSeed + trial);
    const int rounds = 100000;
    double total = 0.0;
    for (int t = 0; t < rounds; ++t) {
      const Index q = static_cast<Index>(sample_discrete(
          std::span<const double>(sc.market().query_mass().data(), sc.market().num_queries()), rng));
      total += pbm_run_round(sc, bids, q, rng).welfare;
    }
    const double tol = 4 * sc.values().maxCoeff() * std::sqrt(1.0 / rounds);
    CHECK(std::abs(total / rounds - pbm_expected_welfare(sc, bids)) <= tol);
  }
}

TEST_CASE("welfare, utility and revenue invariants on random profiles") {
  Rng rng(99);
  RandomScenarioOptions opt;
  for (int trial = 0; trial < 400; ++trial) {
    opt.slot_weights = trial % 2 ? std::vector<double>{1.0, 0.5} : std::vector<double>{1.0};
    Scenario sc = build_scenario(random_raw_scenario(rng, opt));
    auto bids = random_bid_profile(sc, rng);
    const double sw = pbm_expected_welfare(sc, bids);
    CHECK(sw <= optimal_welfare(sc) + 1e-9);

    double keyword_sum = 0.0;
    for (Index s = 0; s < sc.market().num_keywords(); ++s) keyword_sum += pbm_keyword_welfare(sc, bids, s);
    CHECK(keyword_sum == doctest::Approx(sw).epsilon(1e-12));

    double utilities = 0.0;
    for (Index i = 0; i < sc.num_advertisers(); ++i) {
      const double u = pbm_utility(sc, bids, i);
      double by_keyword = 0.0;
      for (Index s = 0; s < sc.market().num_keywords(); ++s) {
        by_keyword += keyword_utility(sc, s, bids.bids().col(s), i);
      }
      CHECK(std::abs(u - by_keyword) <= 1e-9);
      utilities += u;
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sc.market().num_keywords());
    CHECK(std::abs(utilities + revenue_with_reserve(sc, bids, zero) - sw) <= 1e-9);

    if (sc.market().num_keywords() == 1) {
      CHECK(sbm_expected_welfare(sc, bids) == doctest::Approx(sw));
    }
  }
}

TEST_CASE("single-slot revenue is bounded by welfare under conservative bids") {
  Rng rng(123);
  for (int trial = 0; trial < 300; ++trial) {
    Scenario sc = build_scenario(random_raw_scenario(rng));
    auto bids = random_bid_profile(sc, rng, 1.0);
    Eigen::MatrixXd clamped = bids.bids().cwiseMin(sc.keyword_values());
    auto cons = BidProfile(clamped, sc.market().kappa());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sc.market().num_keywords());
    CHECK(revenue_with_reserve(sc, cons, zero) <= pbm_expected_welfare(sc, cons) + 1e-9);
  }
}
