#include "interseg/crossings.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"
#include "interseg/geo.hpp"
#include "interseg/home_es.hpp"
#include "interseg/kdtree.hpp"
#include "interseg/parallel.hpp"

namespace interseg {

bool canonical_less(const Interaction& a, const Interaction& b) {
  if (a.i != b.i) return a.i < b.i;
  if (a.j != b.j) return a.j < b.j;
  if (a.t != b.t) return a.t < b.t;
  if (a.lat != b.lat) return a.lat < b.lat;
  return a.lon < b.lon;
}

void sort_canonical(std::vector<Interaction>& v) { std::sort(v.begin(), v.end(), canonical_less); }

void JoinConfig::validate() const {
  if (!(dist_m > 0)) throw ConfigError("distance threshold must be positive");
  if (time_s <= 0) throw ConfigError("time threshold must be positive");
  if (tie.k < 1) throw ConfigError("tie strength k must be >= 1");
}

namespace {

struct FlatPing {
  std::int64_t t;
  double lat;
  double lon;
  PersonIndex person;
};

std::vector<FlatPing> flatten(const PingStore& store) {
  std::vector<FlatPing> out;
  out.reserve(store.num_pings());
  for (PersonIndex p = 0; p < store.num_persons(); ++p)
    for (const auto& f : store.pings(p)) out.push_back({f.t, f.lat, f.lon, p});
  return out;
}

Interaction make_interaction(const FlatPing& a, const FlatPing& b) {
  Interaction x;
  x.i = std::min(a.person, b.person);
  x.j = std::max(a.person, b.person);
  x.t = std::min(a.t, b.t);
  x.lat = 0.5 * (a.lat + b.lat);
  x.lon = 0.5 * (a.lon + b.lon);
  return x;
}

bool qualifies(const FlatPing& a, const FlatPing& b, const JoinConfig& cfg) {
  if (a.person == b.person) return false;
  const std::int64_t dt = a.t > b.t ? a.t - b.t : b.t - a.t;
  if (dt >= cfg.time_s) return false;
  return haversine_m(a.lat, a.lon, b.lat, b.lon) < cfg.dist_m;
}

}  // namespace

std::vector<Interaction> join_bruteforce(const PingStore& store, const JoinConfig& cfg) {
  cfg.validate();
  if (store.num_pings() > kBruteForceMaxPings)
    throw std::length_error("join_bruteforce is limited to " + std::to_string(kBruteForceMaxPings) + " pings");
  const auto pts = flatten(store);
  std::vector<Interaction> out;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      if (qualifies(pts[a], pts[b], cfg)) out.push_back(make_interaction(pts[a], pts[b]));
  sort_canonical(out);
  return out;
}

std::vector<Interaction> join_indexed(const PingStore& store, const JoinConfig& cfg) {
  cfg.validate();
  auto pts = flatten(store);
  if (pts.size() < 2) return {};
  std::sort(pts.begin(), pts.end(), [](const FlatPing& a, const FlatPing& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.person < b.person;
  });
  const std::int64_t t0 = pts.front().t;
  // slab boundaries: slab_start[s] .. slab_start[s+1]
  std::vector<std::int64_t> slab_id;
  std::vector<std::size_t> slab_start;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const std::int64_t s = floor_div(pts[k].t - t0, cfg.time_s);
    if (slab_id.empty() || slab_id.back() != s) {
      slab_id.push_back(s);
      slab_start.push_back(k);
    }
  }
  slab_start.push_back(pts.size());
  const std::size_t n_slabs = slab_id.size();

  std::vector<std::vector<Interaction>> per_slab(n_slabs);
  parallel_for(
      n_slabs,
      [&](std::size_t s) {
        const std::size_t lo = slab_start[s];
        const std::size_t mid = slab_start[s + 1];
        const bool has_next = s + 1 < n_slabs && slab_id[s + 1] == slab_id[s] + 1;
        const std::size_t hi = has_next ? slab_start[s + 2] : mid;
        std::vector<std::array<double, 3>> xyz;
        xyz.reserve(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) xyz.push_back(to_ecef(pts[k].lat, pts[k].lon));
        const KdTree<3> tree(xyz);
        auto& out = per_slab[s];
        for (std::size_t k = lo; k < mid; ++k) {
          tree.radius_search(xyz[k - lo], cfg.dist_m, [&](std::uint32_t local, double) {
            const std::size_t q = lo + local;
            if (q <= k) return;
            if (qualifies(pts[k], pts[q], cfg)) out.push_back(make_interaction(pts[k], pts[q]));
          });
        }
      },
      cfg.threads);

  std::size_t total = 0;
  for (const auto& v : per_slab) total += v.size();
  std::vector<Interaction> out;
  out.reserve(total);
  for (auto& v : per_slab) {
    out.insert(out.end(), v.begin(), v.end());
    std::vector<Interaction>().swap(v);
  }
  sort_canonical(out);
  return out;
}

namespace {

template <typename Fn>
void for_each_pair(const std::vector<Interaction>& v, Fn&& fn) {
  std::size_t a = 0;
  while (a < v.size()) {
    std::size_t b = a;
    while (b < v.size() && v[b].i == v[a].i && v[b].j == v[a].j) ++b;
    fn(a, b);
    a = b;
  }
}

}  // namespace

std::vector<Interaction> apply_tie_strength(std::vector<Interaction> v, const JoinConfig& cfg) {
  if (cfg.tie.kind == TieKind::any || cfg.tie.k <= 1) return v;
  std::vector<Interaction> out;
  for_each_pair(v, [&](std::size_t a, std::size_t b) {
    bool keep = false;
    if (cfg.tie.kind == TieKind::consecutive) {
      int run = 1, best = 1;
      for (std::size_t x = a + 1; x < b; ++x) {
        run = (v[x].t - v[x - 1].t < cfg.time_s) ? run + 1 : 1;
        best = std::max(best, run);
      }
      keep = best >= cfg.tie.k;
    } else {
      std::set<std::int64_t> days;
      for (std::size_t x = a; x < b; ++x)
        days.insert(floor_div(to_local_seconds(v[x].t, cfg.utc_offset_hours), 86400));
      keep = static_cast<int>(days.size()) >= cfg.tie.k;
    }
    if (keep) out.insert(out.end(), v.begin() + a, v.begin() + b);
  });
  return out;
}

std::vector<Interaction> collapse_repeats(std::vector<Interaction> v, std::int64_t time_s) {
  std::vector<Interaction> out;
  out.reserve(v.size());
  for_each_pair(v, [&](std::size_t a, std::size_t b) {
    std::uint32_t k = 0;
    std::int64_t window_start = 0;
    for (std::size_t x = a; x < b; ++x) {
      if (x == a || v[x].t - window_start >= time_s) {
        window_start = v[x].t;
        Interaction kept = v[x];
        kept.k = k++;
        out.push_back(kept);
      }
    }
  });
  return out;
}

std::vector<Interaction> build_interactions(const PingStore& store, const JoinConfig& cfg) {
  auto v = join_indexed(store, cfg);
  v = apply_tie_strength(std::move(v), cfg);
  if (cfg.collapse_repeats) return collapse_repeats(std::move(v), cfg.time_s);
  for_each_pair(v, [&](std::size_t a, std::size_t b) {
    for (std::size_t x = a; x < b; ++x) v[x].k = static_cast<std::uint32_t>(x - a);
  });
  return v;
}

std::vector<std::vector<PersonIndex>> partner_lists(std::span<const Interaction> v, std::size_t n_persons,
                                                    Weighting w) {
  std::vector<std::vector<PersonIndex>> out(n_persons);
  for (const auto& x : v) {
    if (x.i >= n_persons || x.j >= n_persons) throw std::out_of_range("interaction references unknown person");
    out[x.i].push_back(x.j);
    out[x.j].push_back(x.i);
  }
  if (w == Weighting::dedup_pairs) {
    for (auto& l : out) {
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
    }
  }
  return out;
}

std::vector<std::vector<double>> alter_multisets(std::span<const Interaction> v, std::span<const double> es,
                                                 Weighting w) {
  const auto partners = partner_lists(v, es.size(), w);
  std::vector<std::vector<double>> out(es.size());
  for (std::size_t p = 0; p < partners.size(); ++p) {
    for (const auto q : partners[p])
      if (!std::isnan(es[q])) out[p].push_back(es[q]);
  }
  return out;
}

void write_interactions(std::span<const Interaction> v, std::span<const std::string> ids, std::ostream& out) {
  out << "i,j,t,lat,lon\n";
  for (const auto& x : v)
    out << ids[x.i] << ',' << ids[x.j] << ',' << x.t << ',' << csv::format_double(x.lat) << ','
        << csv::format_double(x.lon) << '\n';
}

std::vector<Interaction> read_interactions(std::istream& in,
                                           const std::unordered_map<std::string, PersonIndex>& index,
                                           std::uint64_t* skipped) {
  std::vector<Interaction> out;
  std::uint64_t bad = 0;
  std::string line;
  if (!csv::next_data_line(in, line)) return out;
  const csv::Header h(line);
  const auto ci = h.require("i"), cj = h.require("j"), ct = h.require("t");
  const auto clat = h.require("lat"), clon = h.require("lon");
  std::vector<std::string_view> cols;
  std::string key;
  while (csv::next_data_line(in, line)) {
    if (line.empty()) continue;
    csv::split(line, cols);
    if (cols.size() <= std::max({ci, cj, ct, clat, clon})) throw DataError("malformed interaction row: " + line);
    key.assign(cols[ci]);
    const auto a = index.find(key);
    key.assign(cols[cj]);
    const auto b = index.find(key);
    const auto t = csv::parse_int(cols[ct]);
    const auto lat = csv::parse_double(cols[clat]);
    const auto lon = csv::parse_double(cols[clon]);
    if (!t || !lat || !lon) throw DataError("malformed interaction row: " + line);
    if (a == index.end() || b == index.end() || a->second == b->second) {
      ++bad;
      continue;
    }
    Interaction x;
    x.i = std::min(a->second, b->second);
    x.j = std::max(a->second, b->second);
    x.t = *t;
    x.lat = *lat;
    x.lon = *lon;
    out.push_back(x);
  }
  sort_canonical(out);
  std::size_t a = 0;
  while (a < out.size()) {
    std::size_t b = a;
    while (b < out.size() && out[b].i == out[a].i && out[b].j == out[a].j) {
      out[b].k = static_cast<std::uint32_t>(b - a);
      ++b;
    }
    a = b;
  }
  if (skipped) *skipped = bad;
  return out;
}

TieStrength parse_tie_strength(const std::string& s) {
  if (s.empty() || s == "any") return {};
  auto parse_k = [&](const std::string& prefix) -> int {
    const auto open = s.find('(');
    const auto close = s.find(')');
    std::string num;
    if (open != std::string::npos && close != std::string::npos && close > open)
      num = s.substr(open + 1, close - open - 1);
    else if (s.size() > prefix.size() && s[prefix.size()] == ':')
      num = s.substr(prefix.size() + 1);
    const auto k = csv::parse_int(num);
    if (!k || *k < 1) throw ConfigError("bad tie strength '" + s + "'");
    return static_cast<int>(*k);
  };
  if (s.rfind("consecutive", 0) == 0) return {TieKind::consecutive, parse_k("consecutive")};
  if (s.rfind("unique_days", 0) == 0) return {TieKind::unique_days, parse_k("unique_days")};
  throw ConfigError("unknown tie strength '" + s + "'");
}

std::string to_string(TieStrength t) {
  switch (t.kind) {
    case TieKind::any: return "any";
    case TieKind::consecutive: return "consecutive(" + std::to_string(t.k) + ")";
    case TieKind::unique_days: return "unique_days(" + std::to_string(t.k) + ")";
  }
  return "any";
}

Weighting parse_weighting(const std::string& s) {
  if (s == "dedup_pairs" || s.empty()) return Weighting::dedup_pairs;
  if (s == "count_repeats") return Weighting::count_repeats;
  throw ConfigError("unknown weighting '" + s + "'");
}

std::string to_string(Weighting w) { return w == Weighting::dedup_pairs ? "dedup_pairs" : "count_repeats"; }

}  // namespace interseg
