#include "bmlab/reserve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmlab/error.hpp"
#include "bmlab/numerics.hpp"

namespace bmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// phi with the zero-density cases mapped onto signs: below the support's
// mass the hazard term blows up, past the last mass phi(v) = v.
double phi_or_limit(const Distribution& dist, double v) {
  const double t = dist.pdf(v);
  const double s = dist.sf(v);
  if (t > 0.0) return v - s / t;
  return s > 0.0 ? -kInf : v;
}

double empirical_reserve(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double best_r = xs.front();
  double best = -1.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k > 0 && xs[k] == xs[k - 1]) continue;
    const double rev = xs[k] * static_cast<double>(xs.size() - k) / n;
    if (rev > best) {
      best = rev;
      best_r = xs[k];
    }
  }
  return best_r;
}

}  // namespace

double virtual_value(const Distribution& dist, double v) {
  if (!dist.has_density()) throw Error(Errc::DomainError, std::string(dist.family_name()), "no density");
  const double t = dist.pdf(v);
  if (!(t > 0.0)) throw Error(Errc::ZeroDensity, std::to_string(v), "density vanishes");
  return v - dist.sf(v) / t;
}

double virtual_value_slope(const Distribution& dist, double v) {
  const double t = dist.pdf(v);
  if (!(t > 0.0)) throw Error(Errc::ZeroDensity, std::to_string(v), "density vanishes");
  return 2.0 + dist.sf(v) * dist.pdf_derivative(v) / (t * t);
}

double myerson_reserve(const Distribution& dist) {
  if (const auto* e = std::get_if<EmpiricalFamily>(&dist.family())) return empirical_reserve(e->samples);

  const double lo = dist.lower();
  const double hi = dist.working_upper();
  const auto phi = [&](double v) { return phi_or_limit(dist, v); };
  const double f_lo = phi(lo);
  if (std::abs(f_lo) <= 1e-12) return lo;
  if (f_lo > 0.0 || phi(hi) < 0.0) {
    throw Error(Errc::NoRoot, std::string(dist.family_name()), "virtual value has no sign change");
  }
  return bisect_increasing(phi, lo, hi).root;
}

VirtualValueReport mhr_bounded_derivative_check(const Distribution& dist, int resolution,
                                                double tol) {
  if (resolution < 3) throw Error(Errc::InvalidInput, "resolution", "need at least 3 grid points");
  VirtualValueReport rep;
  rep.subject = std::string(dist.family_name());
  rep.reserve = myerson_reserve(dist);

  const double lo = dist.lower();
  const double hi = dist.working_upper();
  const double step = (hi - lo) / (resolution - 1);
  std::vector<double> xs(static_cast<std::size_t>(resolution));
  std::vector<double> ph(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    xs[k] = k + 1 == xs.size() ? hi : lo + static_cast<double>(k) * step;
    ph[k] = phi_or_limit(dist, xs[k]);
    rep.grid.emplace_back(xs[k], ph[k]);
  }

  rep.min_slope = kInf;
  rep.eta_estimate = -kInf;
  rep.eta_exact = -kInf;
  for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
    const double d = (ph[k + 1] - ph[k - 1]) / (xs[k + 1] - xs[k - 1]);
    if (!std::isfinite(d)) continue;
    if (xs[k] >= 0.0) rep.min_slope = std::min(rep.min_slope, d);
    if (xs[k] >= rep.reserve) {
      rep.eta_estimate = std::max(rep.eta_estimate, d);
      if (dist.pdf(xs[k]) > 0.0) rep.eta_exact = std::max(rep.eta_exact, virtual_value_slope(dist, xs[k]));
    }
  }
  rep.mhr_ok = rep.min_slope >= 1.0 - tol;
  return rep;
}

Distribution induced_keyword_distribution(const BayesScenario& bayes, Index keyword,
                                          std::size_t samples, Rng& rng, Index advertiser) {
  if (samples == 0) throw Error(Errc::InvalidInput, "samples", "need at least one sample");
  const Market& market = bayes.market();
  const auto nbhd = market.graph().queries_of(keyword);
  std::vector<double> draws(samples);
  for (auto& x : draws) {
    double v = 0.0;
    for (Index q : nbhd) v += market.keyword_weights()(q, keyword) * bayes.value_dist(advertiser, q).sample(rng);
    x = v;
  }
  return Distribution::empirical(std::move(draws));
}

ReserveVector keyword_reserves(const BayesScenario& bayes, std::size_t samples, Rng& rng) {
  const Market& market = bayes.market();
  ReserveVector r(market.num_keywords());
  for (Index s = 0; s < market.num_keywords(); ++s) {
    const auto nbhd = market.graph().queries_of(s);
    if (nbhd.size() == 1) {
      r[s] = myerson_reserve(bayes.value_dist(0, nbhd[0]));
    } else {
      r[s] = myerson_reserve(induced_keyword_distribution(bayes, s, samples, rng));
    }
  }
  return r;
}

}  // namespace bmlab
