#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "bmlab/error.hpp"
#include "bmlab/io.hpp"
#include "bmlab/random.hpp"

using namespace bmlab;

namespace {

const std::string kFixtures = BMLAB_FIXTURES;

template <class F>
Error capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected bmlab::Error");
  return Error(Errc::InvalidInput, "unreachable");
}

}  // namespace

TEST_CASE("scenario files load and round-trip") {
  const RawScenario raw = load_scenario(kFixtures + "/two_by_two.json");
  CHECK(raw.queries == std::vector<std::string>{"q1", "q2"});
  CHECK(raw.edges.size() == 3);
  CHECK(raw.valuations.at("a2").at("q2") == 3.0);

  const Scenario sc = build_scenario(raw);
  CHECK(sc.num_advertisers() == 2);
  // a1 on s1 mixes q1 (mass 0.5) and half of q2 (mass 0.25)
  CHECK(keyword_value(sc, 0, 0) == doctest::Approx((0.5 * 4.0 + 0.25 * 2.0) / 0.75));

  const RawScenario again = parse_scenario(scenario_to_json(raw).dump());
  CHECK(again.edges == raw.edges);
  CHECK(again.matching == raw.matching);
  CHECK(again.valuations == raw.valuations);
  CHECK(again.slot_weights == raw.slot_weights);
}

TEST_CASE("parse errors name the key or the position") {
  Error e = capture([] { load_scenario(kFixtures + "/unknown_key.json"); });
  CHECK(e.code() == Errc::ParseError);
  CHECK(e.subject().find("kapa") != std::string::npos);

  e = capture([] { load_scenario(kFixtures + "/malformed.json"); });
  CHECK(e.code() == Errc::ParseError);
  CHECK(e.subject().find("malformed.json:3:") != std::string::npos);

  e = capture([] { parse_scenario(R"({"queries": ["q1"]})", "inline"); });
  CHECK(e.code() == Errc::ParseError);
  CHECK(e.subject().find("keywords") != std::string::npos);

  e = capture([] { parse_scenario(R"({"queries": "q1"})", "inline"); });
  CHECK(e.code() == Errc::ParseError);
  CHECK(e.subject().find("queries") != std::string::npos);

  e = capture([] { load_scenario(kFixtures + "/does_not_exist.json"); });
  CHECK(e.code() == Errc::ParseError);
}

TEST_CASE("validation errors surface from parsed files") {
  RawScenario raw = load_scenario(kFixtures + "/two_by_two.json");
  raw.query_dist["q1"] = 0.6;
  CHECK(capture([&] { build_scenario(raw); }).code() == Errc::MassNotOne);
  CHECK(exit_code_for(Errc::MassNotOne) == 2);
  CHECK(exit_code_for(Errc::TooLarge) == 3);
  CHECK(exit_code_for(Errc::ParameterRange) == 4);
  CHECK(exit_code_for(Errc::NoRoot) == 1);
}

TEST_CASE("distribution specs round-trip") {
  const std::vector<std::string> specs = {
      R"({"family": "uniform", "params": {"lo": 1, "hi": 3}})",
      R"({"family": "exponential", "params": {"rate": 2}})",
      R"({"family": "truncated-exponential", "params": {"rate": 1, "hi": 4}})",
      R"({"family": "piecewise-density", "params": {"segments": [
          {"x0": 0, "x1": 1, "base": 0.5, "amp": 0, "power": 1},
          {"x0": 1, "x1": 2, "base": 0, "amp": 1, "power": 1}]}})",
      R"({"family": "empirical", "params": {"samples": [1, 2, 2, 5]}})",
      R"({"family": "point-mass", "params": {"value": 3}})",
  };
  for (const auto& text : specs) {
    CAPTURE(text);
    const Distribution d = parse_distribution(nlohmann::json::parse(text), "spec");
    const Distribution back = parse_distribution(nlohmann::json::parse(distribution_to_json(d).dump()), "spec");
    CHECK(back.family_name() == d.family_name());
    for (double x : {0.0, 0.5, 1.0, 1.7, 2.5, 3.9}) CHECK(back.cdf(x) == doctest::Approx(d.cdf(x)));
    CHECK(back.mean() == doctest::Approx(d.mean()));
  }
  const Distribution u = parse_distribution(nlohmann::json::parse(specs[0]), "spec");
  CHECK(u.mean() == doctest::Approx(2.0));

  const Error e = capture(
      [] { parse_distribution(nlohmann::json::parse(R"({"family": "uniform", "params": {"lo": 0, "hi": 1, "mid": 0}})"), "d"); });
  CHECK(e.code() == Errc::ParseError);
  CHECK(e.subject().find("mid") != std::string::npos);
  CHECK(capture([] { parse_distribution(nlohmann::json::parse(R"({"family": "cauchy", "params": {}})"), "d"); }).code() ==
        Errc::ParseError);
}

TEST_CASE("bayes scenarios fill missing entries with zero") {
  const BayesScenario b = load_bayes_scenario(kFixtures + "/uniform_bayes.json");
  CHECK(b.num_advertisers() == 2);
  CHECK(b.value_dist(1, 0).mean() == doctest::Approx(0.5));

  const std::string partial = R"({
    "queries": ["q1", "q2"], "keywords": ["s1"], "edges": [["q1", "s1"], ["q2", "s1"]],
    "query_dist": {"q1": 0.5, "q2": 0.5}, "matching": {"q1": {"s1": 1}, "q2": {"s1": 1}},
    "slot_weights": [1], "kappa": 1,
    "valuation_dists": {"a1": {"q1": {"family": "uniform", "params": {"lo": 0, "hi": 2}}}}})";
  const BayesScenario p = parse_bayes_scenario(partial);
  CHECK(p.value_dist(0, 1).mean() == 0.0);
  CHECK(p.value_dist(0, 1).cdf(0.0) == 1.0);

  std::string bad = partial;
  bad.replace(bad.find(R"("a1": {"q1")"), 11, R"("a1": {"q9")");
  CHECK(capture([&] { parse_bayes_scenario(bad); }).code() == Errc::SupportMismatch);
}

TEST_CASE("bid files") {
  const Scenario sc = build_scenario(load_scenario(kFixtures + "/two_by_two.json"));
  const BidProfile b = load_bid_profile(kFixtures + "/two_by_two_bids.json", sc);
  CHECK(b.bid(0, 0) == 3.0);
  CHECK(b.bid(0, 1) == 0.0);
  CHECK(b.bid(1, 1) == 3.0);

  const BidProfile back = parse_bid_profile(bid_profile_to_json(sc, b).dump(), sc);
  CHECK(back.bids() == b.bids());

  // kappa = 1, so two positive bids from one advertiser are rejected
  CHECK_THROWS_AS(parse_bid_profile(R"({"a1": {"s1": 1, "s2": 1}})", sc), Error);
  CHECK(capture([&] { parse_bid_profile(R"({"a1": {"s1": -1}})", sc); }).code() == Errc::InvalidInput);
  CHECK(capture([&] { parse_bid_profile(R"({"a7": {"s1": 1}})", sc); }).code() == Errc::SupportMismatch);
  CHECK(capture([&] { parse_bid_profile(R"({"a1": {"s5": 1}})", sc); }).code() == Errc::SupportMismatch);
}

TEST_CASE("number formatting and round logs") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");

  const Scenario sc = build_scenario(load_scenario(kFixtures + "/two_by_two.json"));
  const BidProfile b = load_bid_profile(kFixtures + "/two_by_two_bids.json", sc);
  Rng rng(kDefaultSeed);
  std::ostringstream log;
  write_round_log(log, sc, 7, pbm_run_round(sc, b, 0, rng));
  // q1 only reaches s1, where a1 is alone above zero: first slot, price zero
  CHECK(log.str() == "7,q1,s1,1,a1,0,1\n");
}

TEST_CASE("ratio rows keep notes in one field") {
  RatioReport r;
  r.scenario = "demo";
  r.metric = "pure_poa";
  r.empirical = 1.25;
  r.bound = 2.0;
  r.satisfied = true;
  r.notes = "a, b";
  CHECK(ratio_csv_row(r) == "demo,pure_poa,1.25,2,true,a; b");
  r.bound.reset();
  r.satisfied.reset();
  r.notes.clear();
  CHECK(ratio_csv_row(r) == "demo,pure_poa,1.25,,,");
}
