#include "bmlab/expressiveness.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bmlab/error.hpp"
#include "bmlab/random.hpp"

namespace bmlab {

namespace {

std::vector<Index> keywords_touching_set(const BipartiteGraph& graph, std::span<const Index> queries) {
  std::vector<Index> out;
  for (Index q : queries) {
    for (Index s : graph.keywords_of(q)) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Fixed-width query set for cover search.
class QuerySet {
 public:
  explicit QuerySet(std::size_t n) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void merge(const QuerySet& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  std::size_t gain(const QuerySet& covered) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      c += static_cast<std::size_t>(std::popcount(words_[k] & ~covered.words_[k]));
    }
    return c;
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct CoverInstance {
  std::size_t n_queries = 0;
  std::vector<Index> candidates;           // graph keyword ids
  std::vector<QuerySet> reach;             // per candidate
  std::vector<std::vector<std::size_t>> by_query;  // candidate positions per query
};

CoverInstance make_cover_instance(const BipartiteGraph& graph, std::span<const Index> queries) {
  CoverInstance inst;
  std::vector<Index> qs(queries.begin(), queries.end());
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  inst.n_queries = qs.size();
  inst.candidates = keywords_touching_set(graph, qs);
  inst.reach.assign(inst.candidates.size(), QuerySet(qs.size()));
  inst.by_query.resize(qs.size());
  for (std::size_t j = 0; j < qs.size(); ++j) {
    if (graph.keywords_of(qs[j]).empty()) {
      throw Error(Errc::Uncoverable, graph.query_id(qs[j]), "query has no incident keyword");
    }
    for (Index s : graph.keywords_of(qs[j])) {
      const auto c = static_cast<std::size_t>(
          std::lower_bound(inst.candidates.begin(), inst.candidates.end(), s) - inst.candidates.begin());
      inst.reach[c].set(j);
      inst.by_query[j].push_back(c);
    }
  }
  return inst;
}

std::vector<std::size_t> greedy_cover(const CoverInstance& inst) {
  QuerySet covered(inst.n_queries);
  std::vector<std::size_t> chosen;
  while (covered.count() < inst.n_queries) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < inst.reach.size(); ++c) {
      const auto g = inst.reach[c].gain(covered);
      if (g > best_gain) best = c, best_gain = g;
    }
    covered.merge(inst.reach[best]);
    chosen.push_back(best);
  }
  return chosen;
}

class CoverSearch {
 public:
  explicit CoverSearch(const CoverInstance& inst) : inst_(inst) {
    for (const auto& r : inst.reach) max_reach_ = std::max(max_reach_, r.count());
  }

  std::vector<std::size_t> run(std::vector<std::size_t> incumbent) {
    best_ = std::move(incumbent);
    std::vector<std::size_t> chosen;
    recurse(QuerySet(inst_.n_queries), chosen);
    return best_;
  }

 private:
  void recurse(const QuerySet& covered, std::vector<std::size_t>& chosen) {
    const std::size_t left = inst_.n_queries - covered.count();
    if (left == 0) {
      if (chosen.size() < best_.size()) best_ = chosen;
      return;
    }
    // counting bound: each further keyword covers at most max_reach_ queries
    const std::size_t lower = (left + max_reach_ - 1) / max_reach_;
    if (chosen.size() + lower >= best_.size()) return;
    // branch on the uncovered query with the fewest candidates
    std::size_t pick = inst_.n_queries;
    for (std::size_t j = 0; j < inst_.n_queries; ++j) {
      if (covered.test(j)) continue;
      if (pick == inst_.n_queries || inst_.by_query[j].size() < inst_.by_query[pick].size()) pick = j;
    }
    for (std::size_t c : inst_.by_query[pick]) {
      QuerySet next = covered;
      next.merge(inst_.reach[c]);
      chosen.push_back(c);
      recurse(next, chosen);
      chosen.pop_back();
    }
  }

  const CoverInstance& inst_;
  std::size_t max_reach_ = 1;
  std::vector<std::size_t> best_;
};

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = 1;
    char32_t cp = c;
    if (c >= 0xF0) len = 4, cp = c & 0x07;
    else if (c >= 0xE0) len = 3, cp = c & 0x0F;
    else if (c >= 0xC0) len = 2, cp = c & 0x1F;
    if (i + static_cast<std::size_t>(len) > s.size()) len = 1, cp = c;
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

// Splits one CSV record, honoring double-quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') fields.back() += '"', ++i;
      else if (ch == '"') quoted = false;
      else fields.back() += ch;
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                                const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, path.string(), "cannot open file");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (line_no == 1 && fields == header) continue;
    if (fields.size() != header.size()) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no),
                  "expected " + std::to_string(header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

bool subset_of(const std::vector<std::string>& small, const std::vector<std::string>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

double kl_expressiveness(const Scenario& scenario) {
  double beta = 1.0;
  for (Index i = 0; i < scenario.num_advertisers(); ++i) {
    const auto n = positive_keywords(scenario, i).size();
    if (n > 0) beta = std::min(beta, static_cast<double>(scenario.market().kappa()) / static_cast<double>(n));
  }
  return beta;
}

double kl_expressiveness(const BipartiteGraph& graph, const QuerySets& positive, int kappa) {
  double beta = 1.0;
  for (const auto& qs : positive) {
    const auto n = keywords_touching_set(graph, qs).size();
    if (n > 0) beta = std::min(beta, static_cast<double>(kappa) / static_cast<double>(n));
  }
  return beta;
}

CoverResult min_cover_size(const BipartiteGraph& graph, std::span<const Index> queries, CoverMode mode) {
  const CoverInstance inst = make_cover_instance(graph, queries);
  CoverResult res;
  std::vector<std::size_t> picked = greedy_cover(inst);
  if (mode == CoverMode::Greedy) {
    res.exact = false;
  } else {
    if (inst.candidates.size() > kMaxExactCoverCandidates) {
      throw Error(Errc::TooLarge, "min_cover_size",
                  std::to_string(inst.candidates.size()) + " candidate keywords exceed " +
                      std::to_string(kMaxExactCoverCandidates));
    }
    picked = CoverSearch(inst).run(std::move(picked));
  }
  res.size = static_cast<int>(picked.size());
  for (std::size_t c : picked) res.keywords.push_back(inst.candidates[c]);
  std::sort(res.keywords.begin(), res.keywords.end());
  return res;
}

std::vector<int> minimal_uncoverable_sizes(const BipartiteGraph& graph, std::span<const Index> queries,
                                           int max_kappa) {
  const CoverInstance inst = make_cover_instance(graph, queries);
  const std::size_t n = inst.n_queries;
  if (n > kMaxQlQueries) {
    throw Error(Errc::TooLarge, "ql_expressiveness",
                std::to_string(n) + " positive queries exceed " + std::to_string(kMaxQlQueries));
  }
  std::vector<std::uint32_t> reach(inst.reach.size(), 0);
  for (std::size_t c = 0; c < reach.size(); ++c) {
    for (std::size_t j = 0; j < n; ++j) {
      if (inst.reach[c].test(j)) reach[c] |= 1u << j;
    }
  }
  // cover[mask]: minimum keywords covering mask; the lowest query must be
  // covered by one of its keywords, which strictly shrinks the mask.
  const std::uint32_t full = n == 0 ? 0u : static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
  std::vector<std::uint8_t> cover(static_cast<std::size_t>(full) + 1, 0);
  std::vector<int> smallest(n + 2, 0);  // by cover size: smallest subset size
  for (std::uint32_t mask = 1; mask != 0 && mask <= full; ++mask) {
    const auto j = static_cast<std::size_t>(std::countr_zero(mask));
    std::uint8_t best = 255;
    for (std::size_t c : inst.by_query[j]) best = std::min(best, cover[mask & ~reach[c]]);
    cover[mask] = static_cast<std::uint8_t>(best + 1);
    const int pop = std::popcount(mask);
    int& slot = smallest[cover[mask]];
    if (slot == 0 || pop < slot) slot = pop;
  }
  std::vector<int> out(static_cast<std::size_t>(max_kappa) + 1, 0);
  for (int k = 0; k <= max_kappa; ++k) {
    for (std::size_t c = static_cast<std::size_t>(k) + 1; c < smallest.size(); ++c) {
      if (smallest[c] > 0 && (out[k] == 0 || smallest[c] < out[k])) out[k] = smallest[c];
    }
  }
  return out;
}

QlResult ql_expressiveness(const BipartiteGraph& graph, const QuerySets& positive, int kappa) {
  QlResult res;
  for (const auto& qs : positive) {
    const auto m = minimal_uncoverable_sizes(graph, qs, kappa)[static_cast<std::size_t>(kappa)];
    std::set<Index> uniq(qs.begin(), qs.end());
    const double a = m == 0 ? 1.0 : static_cast<double>(m - 1) / static_cast<double>(uniq.size());
    res.m_star.push_back(m);
    res.per_advertiser.push_back(a);
    res.alpha = std::min(res.alpha, a);
  }
  return res;
}

PropA1Report prop_a1_check(const BipartiteGraph& graph, const QuerySets& positive, int kappa) {
  PropA1Report rep;
  rep.gamma = graph.max_degree();
  rep.alpha = ql_expressiveness(graph, positive, kappa).alpha;
  rep.beta = kl_expressiveness(graph, positive, kappa);
  const double g = static_cast<double>(rep.gamma);
  constexpr double tol = 1e-12;
  rep.lower_ok = rep.alpha / (g * g) <= rep.beta + tol;
  rep.upper_ok = rep.beta <= g * rep.alpha + tol;
  return rep;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto x = decode_utf8(a), y = decode_utf8(b);
  std::vector<std::size_t> row(y.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

double similarity(std::string_view query, std::string_view keyword) {
  const auto len = std::max(decode_utf8(query).size(), decode_utf8(keyword).size());
  if (len == 0) throw Error(Errc::EmptyStrings, "similarity", "both strings are empty");
  return 1.0 - static_cast<double>(levenshtein(query, keyword)) / static_cast<double>(len);
}

std::vector<Index> positive_queries(const Footprint& footprint, std::span<const std::string> pool,
                                    double theta) {
  std::vector<Index> out;
  for (std::size_t q = 0; q < pool.size(); ++q) {
    for (const auto& s : footprint.keywords) {
      if (similarity(pool[q], s) > theta) {
        out.push_back(static_cast<Index>(q));
        break;
      }
    }
  }
  return out;
}

Corpus read_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  for (auto& f : read_csv(dir / "bids.csv", {"advertiser", "keyword"})) {
    corpus.bids.emplace_back(std::move(f[0]), std::move(f[1]));
  }
  const auto path = dir / "queries.csv";
  int row = 1;
  for (auto& f : read_csv(path, {"query", "frequency"})) {
    ++row;
    std::size_t used = 0;
    double freq = 0.0;
    try {
      freq = std::stod(f[1], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != f[1].size() || !(freq >= 0.0)) {
      throw Error(Errc::ParseError, path.string(), "bad frequency '" + f[1] + "' in record " + std::to_string(row));
    }
    corpus.queries.emplace_back(std::move(f[0]), freq);
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream bids(dir / "bids.csv");
  bids << "advertiser,keyword\n";
  for (const auto& [a, s] : corpus.bids) bids << quote_csv(a) << ',' << quote_csv(s) << '\n';
  std::ofstream queries(dir / "queries.csv");
  queries << "query,frequency\n";
  for (const auto& [q, f] : corpus.queries) {
    std::ostringstream num;
    num << f;
    queries << quote_csv(q) << ',' << num.str() << '\n';
  }
  if (!bids || !queries) throw Error(Errc::InvalidInput, dir.string(), "failed to write corpus");
}

std::vector<std::string> tokenize(std::string_view text, std::span<const std::string> stop_words) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && std::find(stop_words.begin(), stop_words.end(), cur) == stop_words.end()) {
      out.push_back(cur);
    }
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) flush();
    else if (u >= 0x80 || std::isalnum(u)) cur += static_cast<char>(std::tolower(u));
  }
  flush();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MicroMarket> extract_micro_markets(const Corpus& corpus, std::span<const std::string> stop_words) {
  std::map<std::string, std::vector<std::string>> keyword_tokens, query_tokens;
  std::map<std::string, std::set<std::string>> bidders;  // keyword -> advertisers
  for (const auto& [a, s] : corpus.bids) {
    keyword_tokens.emplace(s, tokenize(s, stop_words));
    bidders[s].insert(a);
  }
  for (const auto& [q, f] : corpus.queries) query_tokens.emplace(q, tokenize(q, stop_words));

  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> by_term;
  for (const auto& [s, toks] : keyword_tokens) {
    for (const auto& t : toks) by_term[t].first.push_back(s);
  }
  for (const auto& [q, toks] : query_tokens) {
    for (const auto& t : toks) {
      auto it = by_term.find(t);
      if (it != by_term.end()) it->second.second.push_back(q);
    }
  }

  std::vector<MicroMarket> markets;
  for (const auto& [term, members] : by_term) {
    const auto& [kws, qs] = members;
    std::vector<std::pair<std::string, std::string>> edges;
    std::set<std::string> used_k, used_q;
    for (const auto& q : qs) {
      for (const auto& s : kws) {
        if (subset_of(keyword_tokens[s], query_tokens[q])) {
          edges.emplace_back(q, s);
          used_k.insert(s);
          used_q.insert(q);
        }
      }
    }
    if (edges.empty()) continue;
    std::vector<std::string> k_ids, q_ids;
    for (const auto& s : kws) {
      if (used_k.count(s)) k_ids.push_back(s);
    }
    for (const auto& q : qs) {
      if (used_q.count(q)) q_ids.push_back(q);
    }
    std::map<std::string, std::vector<std::string>> fp;
    for (const auto& s : k_ids) {
      for (const auto& a : bidders[s]) fp[a].push_back(s);
    }
    MicroMarket m{term, BipartiteGraph::build(std::move(q_ids), std::move(k_ids), edges), {}};
    for (auto& [a, ks] : fp) m.footprints.push_back({a, std::move(ks)});
    markets.push_back(std::move(m));
  }
  return markets;
}

int kappa_bucket(int kappa, Index size) {
  const auto b = static_cast<int>((10 * static_cast<Index>(kappa) + size - 1) / size) - 1;
  return std::clamp(b, 0, 9);
}

std::vector<double> default_theta_grid() {
  std::vector<double> out;
  for (int k = 9; k >= 0; --k) out.push_back(k / 10.0);
  return out;
}

ExpressivenessTable expressiveness_sweep(const std::vector<MicroMarket>& markets, std::span<const double> thetas) {
  struct Acc {
    double alpha = 0.0, beta = 0.0;
    std::size_t n = 0;
  };
  std::vector<std::array<Acc, 10>> acc(thetas.size());
  ExpressivenessTable table;
  for (const auto& m : markets) {
    const int size = static_cast<int>(m.size());
    const auto& pool = m.graph.query_ids();
    // compute everything for this market before committing it
    std::vector<std::array<Acc, 10>> local(thetas.size());
    std::vector<PropA1Entry> entries;
    try {
      for (std::size_t t = 0; t < thetas.size(); ++t) {
        QuerySets positive;
        for (const auto& fp : m.footprints) positive.push_back(positive_queries(fp, pool, thetas[t]));
        std::vector<std::vector<int>> mstar;
        std::vector<std::size_t> n_keywords;
        for (const auto& qs : positive) {
          mstar.push_back(minimal_uncoverable_sizes(m.graph, qs, size));
          n_keywords.push_back(keywords_touching_set(m.graph, qs).size());
        }
        for (int kappa = 1; kappa <= size; ++kappa) {
          double alpha = 1.0, beta = 1.0;
          for (std::size_t i = 0; i < positive.size(); ++i) {
            const int ms = mstar[i][static_cast<std::size_t>(kappa)];
            if (ms > 0) alpha = std::min(alpha, (ms - 1) / static_cast<double>(positive[i].size()));
            if (n_keywords[i] > 0) beta = std::min(beta, kappa / static_cast<double>(n_keywords[i]));
          }
          auto& cell = local[t][static_cast<std::size_t>(kappa_bucket(kappa, size))];
          cell.alpha += alpha;
          cell.beta += beta;
          ++cell.n;
          PropA1Report rep;
          rep.gamma = m.graph.max_degree();
          rep.alpha = alpha;
          rep.beta = beta;
          const double g = static_cast<double>(rep.gamma);
          rep.lower_ok = alpha / (g * g) <= beta + 1e-12;
          rep.upper_ok = beta <= g * alpha + 1e-12;
          entries.push_back({m.term, thetas[t], kappa, rep});
        }
      }
    } catch (const Error& e) {
      if (e.code() != Errc::TooLarge && e.code() != Errc::Uncoverable) throw;
      table.skipped.push_back(m.term + ": " + e.what());
      continue;
    }
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      for (std::size_t b = 0; b < 10; ++b) {
        acc[t][b].alpha += local[t][b].alpha;
        acc[t][b].beta += local[t][b].beta;
        acc[t][b].n += local[t][b].n;
      }
    }
    table.prop_a1.insert(table.prop_a1.end(), entries.begin(), entries.end());
  }
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    for (std::size_t b = 0; b < 10; ++b) {
      const auto& a = acc[t][b];
      if (a.n == 0) continue;
      table.rows.push_back({thetas[t], static_cast<int>(b), a.alpha / static_cast<double>(a.n),
                            a.beta / static_cast<double>(a.n), a.n});
    }
  }
  return table;
}

Corpus synthetic_corpus(const SyntheticCorpusOptions& opt) {
  static const std::vector<std::string> words = {
      "red", "blue", "cheap", "used", "online", "local", "best", "small", "large", "fast",
      "organic", "vintage", "modern", "classic", "portable", "premium", "rental", "repair"};
  static const std::vector<std::string> fillers = {"near me", "deals", "reviews", "for sale", "price"};
  if (opt.keywords_per_market > static_cast<int>(words.size())) {
    throw Error(Errc::InvalidInput, "synthetic_corpus", "too many keywords per market");
  }
  Rng rng(opt.seed);
  Corpus corpus;
  for (int m = 0; m < opt.markets; ++m) {
    char tag[16];
    std::snprintf(tag, sizeof tag, "%02d", m);
    const std::string head = "item" + std::string(tag);
    // modifiers are unique to the market so no two markets merge
    std::vector<std::string> mods, keywords;
    for (int k = 0; k < opt.keywords_per_market; ++k) {
      mods.push_back(words[static_cast<std::size_t>(k)] + tag);
      keywords.push_back(head + " " + mods.back());
    }
    // every keyword gets its exact query so none drops out of the market
    std::set<std::string> queries(keywords.begin(), keywords.end());
    for (int attempt = 0; attempt < 200 && static_cast<int>(queries.size()) < opt.max_queries_per_market; ++attempt) {
      const auto a = uniform_index(rng, mods.size());
      std::string q = head + " " + mods[a];
      if (uniform01(rng) < 0.4) {
        const auto b = uniform_index(rng, mods.size());
        if (b != a) q += " " + mods[b];
      }
      if (uniform01(rng) < 0.5) q += " " + fillers[uniform_index(rng, fillers.size())];
      queries.insert(q);
    }
    for (const auto& q : queries) {
      corpus.queries.emplace_back(q, static_cast<double>(1 + uniform_index(rng, 100)));
    }
    // keywords only exist through bids, so deal each one out before adding
    // random extras
    const auto n_adv = static_cast<std::size_t>(opt.advertisers_per_market);
    std::vector<std::set<std::size_t>> picked(n_adv);
    for (std::size_t k = 0; k < keywords.size(); ++k) picked[k % n_adv].insert(k);
    for (auto& p : picked) {
      const auto extra = uniform_index(rng, 3);
      for (std::size_t e = 0; e < extra; ++e) p.insert(uniform_index(rng, keywords.size()));
    }
    for (std::size_t i = 0; i < n_adv; ++i) {
      const std::string adv = "adv" + std::string(tag) + "_" + std::to_string(i + 1);
      for (auto k : picked[i]) corpus.bids.emplace_back(adv, keywords[k]);
    }
  }
  return corpus;
}

}  // namespace bmlab
