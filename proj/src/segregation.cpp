#include "interseg/segregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <unordered_set>

#include <boost/math/tools/minima.hpp>

#include "interseg/error.hpp"
#include "interseg/stats.hpp"

namespace interseg {

std::vector<GroupStats> group_stats(std::span<const EgoGroup> groups) {
  std::vector<GroupStats> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.ys.empty()) continue;
    GroupStats s;
    s.n = static_cast<double>(g.ys.size());
    s.x = g.x;
    double sum = 0.0;
    for (const double y : g.ys) sum += y;
    s.ybar = sum / s.n;
    double ss = 0.0;
    for (const double y : g.ys) ss += (y - s.ybar) * (y - s.ybar);
    s.ssw = ss;
    out.push_back(s);
  }
  return out;
}

RemlProfile reml_profile(std::span<const GroupStats> stats, double lambda) {
  double a11 = 0, a12 = 0, a22 = 0, c1 = 0, c2 = 0, n_total = 0, logdet_v = 0;
  for (const auto& s : stats) {
    const double w = s.n / (1.0 + lambda * s.n);
    a11 += w;
    a12 += w * s.x;
    a22 += w * s.x * s.x;
    c1 += w * s.ybar;
    c2 += w * s.x * s.ybar;
    n_total += s.n;
    logdet_v += std::log1p(lambda * s.n);
  }
  const double det = a11 * a22 - a12 * a12;
  RemlProfile r;
  if (!(det > 0)) {
    r.loglik = -std::numeric_limits<double>::infinity();
    return r;
  }
  r.b = (a22 * c1 - a12 * c2) / det;
  r.a = (a11 * c2 - a12 * c1) / det;
  double q = 0.0;
  for (const auto& s : stats) {
    const double w = s.n / (1.0 + lambda * s.n);
    const double res = s.ybar - r.b - r.a * s.x;
    q += s.ssw + w * res * res;
  }
  const double dof = n_total - 2.0;
  r.sigma2 = q / dof;
  r.loglik = -0.5 * (dof * std::log(r.sigma2) + logdet_v + std::log(det) + dof +
                     dof * std::log(2.0 * std::numbers::pi));
  return r;
}

namespace {

std::vector<EgoGroup> restandardized(std::span<const EgoGroup> groups) {
  std::vector<double> xs;
  xs.reserve(groups.size());
  for (const auto& g : groups)
    if (!g.ys.empty()) xs.push_back(g.x);
  if (xs.size() < 2) throw DataError("at least 2 ego groups with alters are required");
  const double m = mean(xs);
  const double sd = std::sqrt(variance(xs));
  if (!(sd > 0)) throw DataError("ego ES has zero variance");
  std::vector<EgoGroup> out;
  out.reserve(xs.size());
  for (const auto& g : groups) {
    if (g.ys.empty()) continue;
    out.push_back({g.ego, (g.x - m) / sd, g.ys});
  }
  return out;
}

void fill(SegregationEstimate& est, const RemlProfile& p, double lambda) {
  est.a = p.a;
  est.b = p.b;
  est.var_e = p.sigma2;
  est.var_u = lambda * p.sigma2;
  est.lambda = lambda;
  est.reml_loglik = p.loglik;
  const double denom = std::sqrt(est.a * est.a + est.var_u);
  est.rho = denom > 0 ? est.a / denom : 0.0;
}

}  // namespace

SegregationEstimate fit_mixed(std::span<const EgoGroup> groups) {
  const auto std_groups = restandardized(groups);
  const auto stats = group_stats(std_groups);
  SegregationEstimate est;
  est.n_egos = stats.size();
  for (const auto& s : stats) est.n_obs += static_cast<std::size_t>(s.n);

  const bool replicated = std::any_of(stats.begin(), stats.end(), [](const GroupStats& s) { return s.n > 1; });
  if (!replicated) {
    fill(est, reml_profile(stats, 0.0), 0.0);
    est.converged = false;
    est.boundary = true;
    est.diagnostic = "every ego has a single alter; variance components are not identifiable";
    return est;
  }
  if (static_cast<double>(est.n_obs) <= 2.0) throw DataError("too few observations for the mixed model");

  // Exact fit: all residuals vanish at every lambda.
  {
    const auto p0 = reml_profile(stats, 0.0);
    double total_ss = 0.0;
    for (const auto& s : stats) total_ss += s.ssw + s.n * s.ybar * s.ybar;
    if (p0.sigma2 <= 1e-24 * std::max(total_ss, 1.0)) {
      est.a = p0.a;
      est.b = p0.b;
      est.rho = p0.a > 0 ? 1.0 : (p0.a < 0 ? -1.0 : 0.0);
      est.converged = true;
      est.boundary = true;
      est.diagnostic = "exact fit";
      return est;
    }
  }

  auto objective = [&](double s) { return -reml_profile(stats, std::exp(s)).loglik; };
  double lo = -12.0, hi = 12.0;
  const double step = 0.5;
  std::vector<double> grid;
  for (double s = lo; s <= hi + 1e-12; s += step) grid.push_back(s);
  std::vector<double> val(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) val[k] = objective(grid[k]);
  auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());

  if (best == 0) {
    const auto p0 = reml_profile(stats, 0.0);
    if (-p0.loglik <= val[0]) {
      fill(est, p0, 0.0);
      est.converged = true;
      est.boundary = true;
      return est;
    }
  }
  bool at_upper = false;
  if (best + 1 == grid.size()) {
    // expand the bracket once before giving up
    hi = 30.0;
    for (double s = grid.back() + step; s <= hi + 1e-12; s += step) {
      grid.push_back(s);
      val.push_back(objective(s));
    }
    best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
    at_upper = best + 1 == grid.size();
  }
  const double left = grid[best == 0 ? 0 : best - 1];
  const double right = grid[std::min(best + 1, grid.size() - 1)];
  std::uintmax_t iters = 200;
  const auto [s_opt, f_opt] =
      boost::math::tools::brent_find_minima(objective, left, right, std::numeric_limits<double>::digits, iters);
  const double s_final = f_opt <= val[best] ? s_opt : grid[best];
  const double lambda = std::exp(s_final);
  fill(est, reml_profile(stats, lambda), lambda);
  est.converged = iters < 200 && !at_upper;
  if (at_upper) est.diagnostic = "variance ratio at the upper search bound";
  else if (iters >= 200) est.diagnostic = "optimizer hit the iteration limit";
  return est;
}

double naive_corr(std::span<const EgoGroup> groups) {
  std::vector<double> xs, ms;
  for (const auto& g : groups) {
    if (g.ys.empty()) continue;
    xs.push_back(g.x);
    ms.push_back(mean(g.ys));
  }
  if (xs.size() < 2) throw DataError("at least 2 ego groups with alters are required");
  try {
    return pearson(xs, ms);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("naive correlation undefined: ") + e.what());
  }
}

Estimator parse_estimator(const std::string& s) {
  if (s == "mixed") return Estimator::mixed;
  if (s == "naive") return Estimator::naive;
  throw ConfigError("unknown estimator '" + s + "'");
}

std::string to_string(Estimator e) { return e == Estimator::mixed ? "mixed" : "naive"; }

SegregationEstimate estimate(std::span<const EgoGroup> groups, Estimator e) {
  if (e == Estimator::mixed) return fit_mixed(groups);
  SegregationEstimate est;
  est.rho = naive_corr(groups);
  for (const auto& g : groups) {
    if (g.ys.empty()) continue;
    ++est.n_egos;
    est.n_obs += g.ys.size();
  }
  est.converged = true;
  return est;
}

std::vector<EgoGroup> build_groups(std::span<const Interaction> edges, std::span<const double> es,
                                   std::span<const char> is_ego, Weighting w) {
  if (!is_ego.empty() && is_ego.size() != es.size()) throw std::invalid_argument("ego mask size mismatch");
  const auto partners = partner_lists(edges, es.size(), w);
  std::vector<EgoGroup> out;
  for (PersonIndex p = 0; p < partners.size(); ++p) {
    if (std::isnan(es[p]) || (!is_ego.empty() && !is_ego[p])) continue;
    EgoGroup g;
    g.ego = p;
    g.x = es[p];
    for (const auto q : partners[p])
      if (!std::isnan(es[q])) g.ys.push_back(es[q]);
    if (!g.ys.empty()) out.push_back(std::move(g));
  }
  return out;
}

namespace {

std::map<std::string, std::vector<std::size_t>> by_tract(std::span<const double> es,
                                                         std::span<const std::string> tract) {
  if (es.size() != tract.size()) throw std::invalid_argument("es/tract size mismatch");
  std::map<std::string, std::vector<std::size_t>> m;
  for (std::size_t p = 0; p < es.size(); ++p)
    if (!std::isnan(es[p]) && !tract[p].empty()) m[tract[p]].push_back(p);
  return m;
}

}  // namespace

double nsi(std::span<const double> es, std::span<const std::string> tract) {
  const auto m = by_tract(es, tract);
  if (m.size() < 2) throw DataError("NSI needs at least 2 tracts with residents");
  std::vector<double> own, tract_mean;
  for (const auto& [id, members] : m) {
    double sum = 0.0;
    for (const auto p : members) sum += es[p];
    const double tm = sum / static_cast<double>(members.size());
    for (const auto p : members) {
      own.push_back(es[p]);
      tract_mean.push_back(tm);
    }
  }
  try {
    return pearson(own, tract_mean);
  } catch (const std::invalid_argument&) {
    throw DataError("NSI undefined: tract means (or ES) do not vary");
  }
}

std::vector<EgoGroup> complete_tract_groups(std::span<const double> es, std::span<const std::string> tract) {
  std::vector<EgoGroup> out;
  for (const auto& [id, members] : by_tract(es, tract)) {
    std::vector<double> ys;
    ys.reserve(members.size());
    for (const auto p : members) ys.push_back(es[p]);
    for (const auto p : members) out.push_back({static_cast<PersonIndex>(p), es[p], ys});
  }
  return out;
}

SegregationEstimate is_decomposed(const AnnotatedSet& set, std::span<const double> es,
                                  std::span<const char> is_ego, const EdgeFilter& keep, Weighting w,
                                  Estimator e) {
  std::vector<Interaction> edges;
  for (std::size_t k = 0; k < set.edges.size(); ++k)
    if (keep(set.edges[k], set.ann[k], set.labels)) edges.push_back(set.edges[k]);
  if (edges.empty()) throw DataError("no interactions match");
  const auto groups = build_groups(edges, es, is_ego, w);
  return estimate(groups, e);
}

VenueStats venue_stats(const AnnotatedSet& set, std::span<const double> es_raw, std::span<const LatLon> homes,
                       const GeoLayer& layer, const std::string& category, double radius_m) {
  VenueStats out;
  out.category = category;
  const auto pois = layer.pois_of(category);
  if (pois.empty()) return out;

  std::map<std::int32_t, std::vector<PersonIndex>> visitors;
  const auto cat = set.labels.lookup(category);
  if (cat != LabelPool::kNone) {
    for (std::size_t k = 0; k < set.edges.size(); ++k) {
      const auto& a = set.ann[k];
      if (a.poi_category != cat || a.poi == LabelPool::kNone) continue;
      visitors[a.poi].push_back(set.edges[k].i);
      visitors[a.poi].push_back(set.edges[k].j);
    }
  }
  std::vector<double> medians;
  for (auto& [poi, people] : visitors) {
    std::sort(people.begin(), people.end());
    people.erase(std::unique(people.begin(), people.end()), people.end());
    std::vector<double> v;
    for (const auto p : people)
      if (p < es_raw.size() && !std::isnan(es_raw[p])) v.push_back(es_raw[p]);
    if (v.empty()) continue;
    VenueStat s;
    s.poi_id = set.labels.str(poi);
    s.visitors = v.size();
    s.median_es = median(std::move(v));
    medians.push_back(s.median_es);
    out.venues.push_back(std::move(s));
  }
  std::sort(out.venues.begin(), out.venues.end(),
            [](const VenueStat& a, const VenueStat& b) { return a.poi_id < b.poi_id; });
  if (medians.size() > 1) {
    const double m = mean(medians);
    out.cov = m != 0 ? std::sqrt(variance(medians)) / m : 0.0;
  }

  if (!homes.empty()) {
    double count_sum = 0.0, nearest_sum = 0.0;
    for (const auto& h : homes) {
      double nearest = std::numeric_limits<double>::infinity();
      std::size_t count = 0;
      for (const auto f : pois) {
        const auto& c = layer.feature(f).centroid;
        const double d = haversine_m(h.lat, h.lon, c.lat, c.lon);
        if (d <= radius_m) ++count;
        nearest = std::min(nearest, d);
      }
      count_sum += static_cast<double>(count);
      nearest_sum += nearest;
    }
    out.accessibility = count_sum / static_cast<double>(homes.size());
    out.localization_m = nearest_sum / static_cast<double>(homes.size());
  }
  return out;
}

std::vector<ConnectednessEntry> connectedness(std::span<const Interaction> edges, std::span<const int> region,
                                              std::size_t n_regions) {
  std::vector<std::uint64_t> members(n_regions, 0);
  for (const int r : region)
    if (r >= 0 && static_cast<std::size_t>(r) < n_regions) ++members[static_cast<std::size_t>(r)];
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pairs;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& x : edges) {
    const std::uint64_t key = (static_cast<std::uint64_t>(x.i) << 32) | x.j;
    if (!seen.insert(key).second) continue;
    const int ri = region[x.i], rj = region[x.j];
    if (ri < 0 || rj < 0) continue;
    const auto a = static_cast<std::size_t>(std::min(ri, rj));
    const auto b = static_cast<std::size_t>(std::max(ri, rj));
    ++pairs[{a, b}];
  }
  std::vector<ConnectednessEntry> out;
  for (std::size_t a = 0; a < n_regions; ++a) {
    if (members[a] == 0) continue;
    for (std::size_t b = a; b < n_regions; ++b) {
      if (members[b] == 0) continue;
      double denom;
      if (a == b) {
        if (members[a] < 2) continue;
        denom = 0.5 * static_cast<double>(members[a]) * static_cast<double>(members[a] - 1);
      } else {
        denom = static_cast<double>(members[a]) * static_cast<double>(members[b]);
      }
      ConnectednessEntry e;
      e.a = a;
      e.b = b;
      const auto it = pairs.find({a, b});
      e.pairs = it == pairs.end() ? 0 : it->second;
      e.score = static_cast<double>(e.pairs) / denom;
      out.push_back(e);
    }
  }
  return out;
}

std::vector<double> standardize(std::span<const double> v) {
  std::vector<double> known;
  for (const double x : v)
    if (!std::isnan(x)) known.push_back(x);
  std::vector<double> out(v.begin(), v.end());
  if (known.empty()) return out;
  const double m = mean(known);
  const double sd = std::sqrt(variance(known));
  for (auto& x : out) {
    if (std::isnan(x)) continue;
    x = sd > 0 ? (x - m) / sd : 0.0;
  }
  return out;
}

}  // namespace interseg
