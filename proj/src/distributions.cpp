#include "bmlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmlab/error.hpp"
#include "bmlab/numerics.hpp"

namespace bmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailQuantile = 1.0 - 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void bad(const std::string& what, const std::string& detail) {
  throw Error(Errc::InvalidInput, what, detail);
}

double seg_length(const DensitySegment& g) { return g.x1 - g.x0; }

double seg_mass(const DensitySegment& g) {
  return seg_length(g) * (g.base + g.amp / (g.power + 1.0));
}

// Mass of the segment to the left of x (x inside the segment).
double seg_head(const DensitySegment& g, double x) {
  const double len = seg_length(g);
  const double u = std::clamp((x - g.x0) / len, 0.0, 1.0);
  return g.base * (x - g.x0) + g.amp * len * std::pow(u, g.power + 1.0) / (g.power + 1.0);
}

// Mass of the segment to the right of x; 1 - u^(p+1) via expm1 keeps
// precision when x sits just below the right end.
double seg_tail(const DensitySegment& g, double x) {
  const double len = seg_length(g);
  const double u = std::clamp((x - g.x0) / len, 0.0, 1.0);
  const double rest = u > 0.0 ? -std::expm1((g.power + 1.0) * std::log(u)) : 1.0;
  return g.base * (g.x1 - x) + g.amp * len * rest / (g.power + 1.0);
}

// Segment containing x, with the right end belonging to the last segment.
std::size_t seg_index(const std::vector<DensitySegment>& segs, double x) {
  auto it = std::upper_bound(segs.begin(), segs.end(), x,
                             [](double v, const DensitySegment& g) { return v < g.x1; });
  if (it == segs.end()) return segs.size() - 1;
  return static_cast<std::size_t>(it - segs.begin());
}

}  // namespace

Distribution Distribution::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || lo < 0.0) {
    bad("uniform", "need 0 <= lo < hi < inf");
  }
  return Distribution(UniformFamily{lo, hi});
}

Distribution Distribution::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) bad("exponential", "rate must be positive");
  return Distribution(ExponentialFamily{rate});
}

Distribution Distribution::truncated_exponential(double rate, double hi) {
  if (!(rate > 0.0) || !std::isfinite(rate)) bad("truncated-exponential", "rate must be positive");
  if (!(hi > 0.0) || !std::isfinite(hi)) bad("truncated-exponential", "hi must be positive");
  return Distribution(TruncatedExponentialFamily{rate, hi});
}

Distribution Distribution::piecewise(std::vector<DensitySegment> segments) {
  if (segments.empty()) bad("piecewise-density", "no segments");
  double total = 0.0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& g = segments[k];
    const std::string where = "segment " + std::to_string(k);
    if (!(g.x0 < g.x1) || !std::isfinite(g.x0) || !std::isfinite(g.x1)) bad(where, "empty interval");
    if (k == 0 && g.x0 < 0.0) bad(where, "support must be nonnegative");
    if (k > 0 && g.x0 != segments[k - 1].x1) bad(where, "segments must be contiguous");
    if (g.base < 0.0 || g.base + g.amp < 0.0 || !(g.power >= 0.0)) bad(where, "negative density");
    total += seg_mass(g);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::MassNotOne, "piecewise-density", "total mass " + std::to_string(total));
  }
  return Distribution(PiecewiseDensityFamily{std::move(segments)});
}

Distribution Distribution::empirical(std::vector<double> samples) {
  if (samples.empty()) bad("empirical", "no samples");
  for (double x : samples) {
    if (!std::isfinite(x) || x < 0.0) bad("empirical", "samples must be finite and nonnegative");
  }
  std::sort(samples.begin(), samples.end());
  return Distribution(EmpiricalFamily{std::move(samples)});
}

std::string_view Distribution::family_name() const {
  return std::visit(Overloaded{
                        [](const UniformFamily&) { return std::string_view("uniform"); },
                        [](const ExponentialFamily&) { return std::string_view("exponential"); },
                        [](const TruncatedExponentialFamily&) {
                          return std::string_view("truncated-exponential");
                        },
                        [](const PiecewiseDensityFamily&) {
                          return std::string_view("piecewise-density");
                        },
                        [](const EmpiricalFamily&) { return std::string_view("empirical"); },
                    },
                    family_);
}

bool Distribution::has_density() const { return !std::holds_alternative<EmpiricalFamily>(family_); }

double Distribution::lower() const {
  return std::visit(Overloaded{
                        [](const UniformFamily& d) { return d.lo; },
                        [](const ExponentialFamily&) { return 0.0; },
                        [](const TruncatedExponentialFamily&) { return 0.0; },
                        [](const PiecewiseDensityFamily& d) { return d.segments.front().x0; },
                        [](const EmpiricalFamily& d) { return d.samples.front(); },
                    },
                    family_);
}

double Distribution::upper() const {
  return std::visit(Overloaded{
                        [](const UniformFamily& d) { return d.hi; },
                        [](const ExponentialFamily&) { return kInf; },
                        [](const TruncatedExponentialFamily& d) { return d.hi; },
                        [](const PiecewiseDensityFamily& d) { return d.segments.back().x1; },
                        [](const EmpiricalFamily& d) { return d.samples.back(); },
                    },
                    family_);
}

double Distribution::working_upper() const {
  const double hi = upper();
  return std::isfinite(hi) ? hi : quantile(kTailQuantile);
}

double Distribution::pdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const UniformFamily& d) { return x >= d.lo && x <= d.hi ? 1.0 / (d.hi - d.lo) : 0.0; },
          [x](const ExponentialFamily& d) { return x >= 0.0 ? d.rate * std::exp(-d.rate * x) : 0.0; },
          [x](const TruncatedExponentialFamily& d) {
            if (x < 0.0 || x > d.hi) return 0.0;
            return d.rate * std::exp(-d.rate * x) / -std::expm1(-d.rate * d.hi);
          },
          [x](const PiecewiseDensityFamily& d) {
            const auto& s = d.segments;
            if (x < s.front().x0 || x > s.back().x1) return 0.0;
            const auto& g = s[seg_index(s, x)];
            const double u = std::clamp((x - g.x0) / seg_length(g), 0.0, 1.0);
            return g.base + g.amp * (g.power == 0.0 ? 1.0 : std::pow(u, g.power));
          },
          [](const EmpiricalFamily&) -> double {
            throw Error(Errc::DomainError, "empirical", "no density");
          },
      },
      family_);
}

double Distribution::pdf_derivative(double x) const {
  return std::visit(
      Overloaded{
          [](const UniformFamily&) { return 0.0; },
          [this, x](const ExponentialFamily& d) { return -d.rate * pdf(x); },
          [this, x](const TruncatedExponentialFamily& d) { return -d.rate * pdf(x); },
          [x](const PiecewiseDensityFamily& d) {
            const auto& s = d.segments;
            if (x < s.front().x0 || x > s.back().x1) return 0.0;
            const auto& g = s[seg_index(s, x)];
            if (g.power == 0.0 || g.amp == 0.0) return 0.0;
            const double len = seg_length(g);
            const double u = std::clamp((x - g.x0) / len, 0.0, 1.0);
            return g.amp * g.power * std::pow(u, g.power - 1.0) / len;
          },
          [](const EmpiricalFamily&) -> double {
            throw Error(Errc::DomainError, "empirical", "no density");
          },
      },
      family_);
}

double Distribution::cdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const UniformFamily& d) { return std::clamp((x - d.lo) / (d.hi - d.lo), 0.0, 1.0); },
          [x](const ExponentialFamily& d) { return x <= 0.0 ? 0.0 : -std::expm1(-d.rate * x); },
          [x](const TruncatedExponentialFamily& d) {
            if (x <= 0.0) return 0.0;
            if (x >= d.hi) return 1.0;
            return std::expm1(-d.rate * x) / std::expm1(-d.rate * d.hi);
          },
          [x](const PiecewiseDensityFamily& d) {
            const auto& s = d.segments;
            if (x <= s.front().x0) return 0.0;
            if (x >= s.back().x1) return 1.0;
            const std::size_t k = seg_index(s, x);
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += seg_mass(s[j]);
            return std::min(1.0, acc + seg_head(s[k], x));
          },
          [x](const EmpiricalFamily& d) {
            const auto n = std::upper_bound(d.samples.begin(), d.samples.end(), x) - d.samples.begin();
            return static_cast<double>(n) / static_cast<double>(d.samples.size());
          },
      },
      family_);
}

double Distribution::sf(double x) const {
  return std::visit(
      Overloaded{
          [x](const UniformFamily& d) { return std::clamp((d.hi - x) / (d.hi - d.lo), 0.0, 1.0); },
          [x](const ExponentialFamily& d) { return x <= 0.0 ? 1.0 : std::exp(-d.rate * x); },
          [x](const TruncatedExponentialFamily& d) {
            if (x <= 0.0) return 1.0;
            if (x >= d.hi) return 0.0;
            // (e^{-rx} - e^{-rH}) / (1 - e^{-rH})
            return std::exp(-d.rate * x) * -std::expm1(-d.rate * (d.hi - x)) /
                   -std::expm1(-d.rate * d.hi);
          },
          [x](const PiecewiseDensityFamily& d) {
            const auto& s = d.segments;
            if (x <= s.front().x0) return 1.0;
            if (x >= s.back().x1) return 0.0;
            const std::size_t k = seg_index(s, x);
            double acc = seg_tail(s[k], x);
            for (std::size_t j = k + 1; j < s.size(); ++j) acc += seg_mass(s[j]);
            return std::min(1.0, acc);
          },
          [x](const EmpiricalFamily& d) {
            const auto n = d.samples.end() - std::upper_bound(d.samples.begin(), d.samples.end(), x);
            return static_cast<double>(n) / static_cast<double>(d.samples.size());
          },
      },
      family_);
}

double Distribution::mean() const {
  return std::visit(
      Overloaded{
          [](const UniformFamily& d) { return 0.5 * (d.lo + d.hi); },
          [](const ExponentialFamily& d) { return 1.0 / d.rate; },
          [](const TruncatedExponentialFamily& d) {
            const double z = -std::expm1(-d.rate * d.hi);
            return 1.0 / d.rate - d.hi * std::exp(-d.rate * d.hi) / z;
          },
          [](const PiecewiseDensityFamily& d) {
            double m = 0.0;
            for (const auto& g : d.segments) {
              const double len = seg_length(g);
              m += g.base * 0.5 * (g.x1 * g.x1 - g.x0 * g.x0) +
                   g.amp * len * (g.x0 / (g.power + 1.0) + len / (g.power + 2.0));
            }
            return m;
          },
          [](const EmpiricalFamily& d) {
            double m = 0.0;
            for (double x : d.samples) m += x;
            return m / static_cast<double>(d.samples.size());
          },
      },
      family_);
}

double Distribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::DomainError, "quantile", "p outside [0,1]");
  return std::visit(
      Overloaded{
          [p](const UniformFamily& d) { return d.lo + p * (d.hi - d.lo); },
          [p](const ExponentialFamily& d) { return p >= 1.0 ? kInf : -std::log1p(-p) / d.rate; },
          [p](const TruncatedExponentialFamily& d) {
            return std::min(d.hi, -std::log1p(p * std::expm1(-d.rate * d.hi)) / d.rate);
          },
          [this, p](const PiecewiseDensityFamily& d) {
            if (p <= 0.0) return d.segments.front().x0;
            if (p >= 1.0) return d.segments.back().x1;
            return bisect_increasing([&](double x) { return cdf(x) - p; }, d.segments.front().x0,
                                     d.segments.back().x1)
                .root;
          },
          [p](const EmpiricalFamily& d) {
            const auto n = d.samples.size();
            auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
            return d.samples[k == 0 ? 0 : std::min(k, n) - 1];
          },
      },
      family_);
}

double Distribution::sample(Rng& rng) const {
  if (const auto* e = std::get_if<EmpiricalFamily>(&family_)) {
    return e->samples[uniform_index(rng, e->samples.size())];
  }
  return quantile(uniform01(rng));
}

std::vector<double> Distribution::breakpoints() const {
  std::vector<double> pts;
  if (const auto* d = std::get_if<PiecewiseDensityFamily>(&family_)) {
    for (std::size_t k = 1; k < d->segments.size(); ++k) pts.push_back(d->segments[k].x0);
  }
  return pts;
}

BayesScenario::BayesScenario(std::shared_ptr<const Market> market,
                             std::vector<std::string> advertisers,
                             std::vector<std::vector<Distribution>> value_dists)
    : market_(std::move(market)), advertisers_(std::move(advertisers)), dists_(std::move(value_dists)) {
  if (dists_.size() != advertisers_.size()) bad("valuation_dists", "shape mismatch");
  for (const auto& row : dists_) {
    if (static_cast<Index>(row.size()) != market_->num_queries()) {
      bad("valuation_dists", "shape mismatch");
    }
  }
  if (std::adjacent_find(advertisers_.begin(), advertisers_.end(), std::greater_equal<>()) !=
      advertisers_.end()) {
    bad("advertisers", "ids must be unique and sorted");
  }
}

Eigen::VectorXd BayesScenario::sample_values(Index advertiser, Rng& rng) const {
  const Index nq = market_->num_queries();
  Eigen::VectorXd v(nq);
  for (Index q = 0; q < nq; ++q) v[q] = value_dist(advertiser, q).sample(rng);
  return v;
}

Eigen::MatrixXd BayesScenario::sample_profile(Rng& rng) const {
  Eigen::MatrixXd v(num_advertisers(), market_->num_queries());
  for (Index i = 0; i < num_advertisers(); ++i) v.row(i) = sample_values(i, rng).transpose();
  return v;
}

Scenario BayesScenario::realize(Eigen::MatrixXd values) const {
  return Scenario(market_, advertisers_, std::move(values));
}

Scenario BayesScenario::mean_scenario() const {
  Eigen::MatrixXd v(num_advertisers(), market_->num_queries());
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index q = 0; q < v.cols(); ++q) v(i, q) = value_dist(i, q).mean();
  }
  return realize(std::move(v));
}

}  // namespace bmlab
