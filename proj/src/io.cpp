#include "bmlab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bmlab/error.hpp"

namespace bmlab {

using nlohmann::json;

namespace {

// line:column for a byte offset reported by the JSON parser
std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') line++, col = 1;
    else ++col;
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, source + ":" + locate(text, e.byte == 0 ? 0 : e.byte - 1),
                "malformed JSON");
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(Errc::ParseError, where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw Error(Errc::ParseError, where + "." + key, "unknown key");
  }
}

template <class T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::ParseError, where, "wrong type");
  }
}

const json& require_key(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::ParseError, where + "." + key, "missing key");
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_number()) throw Error(Errc::ParseError, where + "." + key, "expected a number");
  return v.get<double>();
}

// Market half of a scenario document. `values_key` names the valuation key
// the caller handles itself.
RawScenario parse_market_keys(const json& doc, const std::string& source, const std::string& values_key) {
  reject_unknown(doc, {"queries", "keywords", "edges", "query_dist", "matching", "slot_weights", values_key, "kappa"},
                 source);
  RawScenario raw;
  raw.queries = get_as<std::vector<std::string>>(require_key(doc, "queries", source), source + ".queries");
  raw.keywords = get_as<std::vector<std::string>>(require_key(doc, "keywords", source), source + ".keywords");
  for (const auto& e : require_key(doc, "edges", source)) {
    auto pair = get_as<std::vector<std::string>>(e, source + ".edges");
    if (pair.size() != 2) throw Error(Errc::ParseError, source + ".edges", "each edge is [query, keyword]");
    raw.edges.emplace_back(pair[0], pair[1]);
  }
  raw.query_dist = get_as<std::map<std::string, double>>(require_key(doc, "query_dist", source), source + ".query_dist");
  raw.matching = get_as<std::map<std::string, std::map<std::string, double>>>(require_key(doc, "matching", source),
                                                                             source + ".matching");
  raw.slot_weights = get_as<std::vector<double>>(require_key(doc, "slot_weights", source), source + ".slot_weights");
  raw.kappa = get_as<int>(require_key(doc, "kappa", source), source + ".kappa");
  return raw;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RawScenario parse_scenario(std::string_view text, const std::string& source) {
  const json doc = parse_json(text, source);
  RawScenario raw = parse_market_keys(doc, source, "valuations");
  raw.valuations = get_as<std::map<std::string, std::map<std::string, double>>>(
      require_key(doc, "valuations", source), source + ".valuations");
  return raw;
}

RawScenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text(path), path.string());
}

ordered_json scenario_to_json(const RawScenario& raw) {
  ordered_json j;
  j["queries"] = raw.queries;
  j["keywords"] = raw.keywords;
  j["edges"] = ordered_json::array();
  for (const auto& [q, s] : raw.edges) j["edges"].push_back({q, s});
  j["query_dist"] = raw.query_dist;
  j["matching"] = raw.matching;
  j["slot_weights"] = raw.slot_weights;
  j["valuations"] = raw.valuations;
  j["kappa"] = raw.kappa;
  return j;
}

Distribution parse_distribution(const json& spec, const std::string& where) {
  reject_unknown(spec, {"family", "params"}, where);
  const auto family = get_as<std::string>(require_key(spec, "family", where), where + ".family");
  const json& p = require_key(spec, "params", where);
  const std::string pw = where + ".params";
  if (family == "uniform") {
    reject_unknown(p, {"lo", "hi"}, pw);
    return Distribution::uniform(number(p, "lo", pw), number(p, "hi", pw));
  }
  if (family == "exponential") {
    reject_unknown(p, {"rate"}, pw);
    return Distribution::exponential(number(p, "rate", pw));
  }
  if (family == "truncated-exponential") {
    reject_unknown(p, {"rate", "hi"}, pw);
    return Distribution::truncated_exponential(number(p, "rate", pw), number(p, "hi", pw));
  }
  if (family == "piecewise-density") {
    reject_unknown(p, {"segments"}, pw);
    std::vector<DensitySegment> segs;
    for (const auto& s : require_key(p, "segments", pw)) {
      const std::string sw = pw + ".segments";
      reject_unknown(s, {"x0", "x1", "base", "amp", "power"}, sw);
      segs.push_back({number(s, "x0", sw), number(s, "x1", sw), number(s, "base", sw), number(s, "amp", sw),
                      number(s, "power", sw)});
    }
    return Distribution::piecewise(std::move(segs));
  }
  if (family == "empirical") {
    reject_unknown(p, {"samples"}, pw);
    return Distribution::empirical(get_as<std::vector<double>>(require_key(p, "samples", pw), pw + ".samples"));
  }
  if (family == "point-mass") {
    reject_unknown(p, {"value"}, pw);
    return Distribution::point_mass(number(p, "value", pw));
  }
  throw Error(Errc::ParseError, where + ".family", "unknown family '" + family + "'");
}

ordered_json distribution_to_json(const Distribution& dist) {
  ordered_json j;
  j["family"] = std::string(dist.family_name());
  ordered_json p = ordered_json::object();
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, UniformFamily>) {
          p["lo"] = f.lo;
          p["hi"] = f.hi;
        } else if constexpr (std::is_same_v<F, ExponentialFamily>) {
          p["rate"] = f.rate;
        } else if constexpr (std::is_same_v<F, TruncatedExponentialFamily>) {
          p["rate"] = f.rate;
          p["hi"] = f.hi;
        } else if constexpr (std::is_same_v<F, PiecewiseDensityFamily>) {
          p["segments"] = ordered_json::array();
          for (const auto& s : f.segments) {
            p["segments"].push_back({{"x0", s.x0}, {"x1", s.x1}, {"base", s.base}, {"amp", s.amp}, {"power", s.power}});
          }
        } else {
          p["samples"] = f.samples;
        }
      },
      dist.family());
  j["params"] = std::move(p);
  return j;
}

BayesScenario parse_bayes_scenario(std::string_view text, const std::string& source) {
  const json doc = parse_json(text, source);
  RawScenario raw = parse_market_keys(doc, source, "valuation_dists");
  const json& specs = require_key(doc, "valuation_dists", source);
  if (!specs.is_object() || specs.empty()) {
    throw Error(Errc::ParseError, source + ".valuation_dists", "expected a nonempty object");
  }
  auto market = build_market(raw);
  const auto& g = market->graph();
  std::vector<std::string> ids;
  std::vector<std::vector<Distribution>> dists;
  for (const auto& [adv, row] : specs.items()) {  // object keys iterate sorted
    const std::string w = source + ".valuation_dists." + adv;
    if (!row.is_object()) throw Error(Errc::ParseError, w, "expected an object");
    ids.push_back(adv);
    dists.emplace_back(static_cast<std::size_t>(g.num_queries()), Distribution::point_mass(0.0));
    for (const auto& [q, spec] : row.items()) {
      const auto qi = g.find_query(q);
      if (!qi) throw Error(Errc::SupportMismatch, w + "." + q, "unknown query");
      dists.back()[static_cast<std::size_t>(*qi)] = parse_distribution(spec, w + "." + q);
    }
  }
  return BayesScenario(std::move(market), std::move(ids), std::move(dists));
}

BayesScenario load_bayes_scenario(const std::filesystem::path& path) {
  return parse_bayes_scenario(read_text(path), path.string());
}

BidProfile parse_bid_profile(std::string_view text, const Scenario& scenario, const std::string& source) {
  const json doc = parse_json(text, source);
  const auto bids = get_as<std::map<std::string, std::map<std::string, double>>>(doc, source);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(scenario.num_advertisers(), scenario.market().num_keywords());
  for (const auto& [adv, row] : bids) {
    const auto i = scenario.find_advertiser(adv);
    if (!i) throw Error(Errc::SupportMismatch, source + "." + adv, "unknown advertiser");
    for (const auto& [kw, v] : row) {
      const auto s = scenario.graph().find_keyword(kw);
      if (!s) throw Error(Errc::SupportMismatch, source + "." + adv + "." + kw, "unknown keyword");
      b(*i, *s) = v;
    }
  }
  return make_bid_profile(scenario, std::move(b));
}

BidProfile load_bid_profile(const std::filesystem::path& path, const Scenario& scenario) {
  return parse_bid_profile(read_text(path), scenario, path.string());
}

ordered_json bid_profile_to_json(const Scenario& scenario, const BidProfile& profile) {
  ordered_json j = ordered_json::object();
  for (Index i = 0; i < profile.num_advertisers(); ++i) {
    ordered_json row = ordered_json::object();
    for (Index s = 0; s < profile.num_keywords(); ++s) {
      if (profile.bid(i, s) > 0.0) row[scenario.graph().keyword_id(s)] = profile.bid(i, s);
    }
    j[scenario.advertiser_id(i)] = std::move(row);
  }
  return j;
}

ordered_json equilibrium_report_to_json(const Scenario& scenario, const EquilibriumReport& report) {
  ordered_json j;
  j["profile"] = bid_profile_to_json(scenario, report.profile);
  ordered_json regrets = ordered_json::object();
  for (Index i = 0; i < report.regrets.size(); ++i) regrets[scenario.advertiser_id(i)] = report.regrets[i];
  j["regrets"] = std::move(regrets);
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["welfare"] = report.welfare;
  return j;
}

std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
  return buf;
}

void write_round_log(std::ostream& out, const Scenario& scenario, std::size_t round, const AuctionOutcome& outcome) {
  const auto& g = scenario.graph();
  const std::string kw = outcome.sampled_keyword ? g.keyword_id(*outcome.sampled_keyword) : "";
  for (const auto& a : outcome.awards) {
    out << round << ',' << g.query_id(outcome.query) << ',' << kw << ',' << a.slot + 1 << ','
        << scenario.advertiser_id(a.advertiser) << ',' << format_number(a.price) << ','
        << format_number(a.click_weight) << '\n';
  }
}

std::string ratio_csv_row(const RatioReport& r) {
  std::string notes = r.notes;
  for (auto& ch : notes) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  return r.scenario + "," + r.metric + "," + format_number(r.empirical) + "," +
         (r.bound ? format_number(*r.bound) : "") + "," +
         (r.satisfied ? (*r.satisfied ? "true" : "false") : "") + "," + notes;
}

void write_expressiveness_table(std::ostream& out, const ExpressivenessTable& table) {
  out << kExpressivenessHeader << '\n';
  for (const auto& row : table.rows) {
    out << format_number(row.theta) << ',' << row.kappa_bucket << ',' << format_number(row.mean_alpha) << ','
        << format_number(row.mean_beta) << ',' << row.n_markets << '\n';
  }
}

}  // namespace bmlab
