#include "interseg/annotate.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"
#include "interseg/parallel.hpp"

namespace interseg {

std::int32_t LabelPool::intern(const std::string& s) {
  const auto it = index_.find(s);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(labels_.size());
  labels_.push_back(s);
  index_.emplace(s, id);
  return id;
}

std::int32_t LabelPool::lookup(const std::string& s) const {
  const auto it = index_.find(s);
  return it == index_.end() ? kNone : it->second;
}

std::unordered_map<std::string, PersonIndex> AnnotatedSet::id_index() const {
  std::unordered_map<std::string, PersonIndex> m;
  m.reserve(ids.size());
  for (PersonIndex p = 0; p < ids.size(); ++p) m.emplace(ids[p], p);
  return m;
}

int hour_bucket(std::int64_t t_utc, double utc_offset_hours) {
  const std::int64_t local = to_local_seconds(t_utc, utc_offset_hours);
  const std::int64_t sec_of_day = local - floor_div(local, 86400) * 86400;
  return static_cast<int>(sec_of_day / 10800);
}

std::vector<const Person*> person_lookup(std::span<const std::string> ids, std::span<const Person> persons) {
  std::unordered_map<std::string_view, const Person*> by_id;
  by_id.reserve(persons.size());
  for (const auto& p : persons) by_id.emplace(p.person_id, &p);
  std::vector<const Person*> out(ids.size(), nullptr);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = by_id.find(ids[i]);
    if (it != by_id.end()) out[i] = it->second;
  }
  return out;
}

AnnotatedSet annotate_all(std::vector<Interaction> edges, std::vector<std::string> ids,
                          std::span<const Person* const> persons_by_index, const GeoLayer& layer,
                          const AnnotateConfig& cfg) {
  if (persons_by_index.size() != ids.size()) throw std::invalid_argument("person lookup size mismatch");
  AnnotatedSet out;
  out.ids = std::move(ids);
  out.edges = std::move(edges);
  out.ann.resize(out.edges.size());

  // Feature-level labels are interned once up front so the parallel loop only
  // reads shared state.
  const auto& feats = layer.features();
  std::vector<std::int32_t> feat_label(feats.size(), LabelPool::kNone);
  std::vector<std::int32_t> feat_cat(feats.size(), LabelPool::kNone);
  std::vector<std::int32_t> poi_parent_hub(feats.size(), -1);
  for (std::uint32_t f = 0; f < feats.size(); ++f) {
    if (feats[f].is_poi()) {
      feat_label[f] = out.labels.intern(feats[f].id);
      feat_cat[f] = out.labels.intern(feats[f].poi_category());
      if (feats[f].parent_id) {
        const auto parent = layer.find(*feats[f].parent_id);
        if (parent && feats[*parent].is_hub()) poi_parent_hub[f] = static_cast<std::int32_t>(*parent);
      }
    } else if (feats[f].is_hub()) {
      feat_label[f] = out.labels.intern(feats[f].id);
    }
  }
  std::vector<std::int32_t> home_tract(persons_by_index.size(), -1);
  for (std::size_t p = 0; p < persons_by_index.size(); ++p) {
    const Person* person = persons_by_index[p];
    if (!person || person->home_tract_id.empty()) continue;
    const auto t = layer.find(person->home_tract_id);
    if (t) home_tract[p] = static_cast<std::int32_t>(*t);
  }

  parallel_for(
      out.edges.size(),
      [&](std::size_t k) {
        const auto& x = out.edges[k];
        auto& a = out.ann[k];
        auto at_home = [&](PersonIndex p) {
          const Person* person = persons_by_index[p];
          return person && haversine_m(x.lat, x.lon, person->home_lat, person->home_lon) <= cfg.home_radius_m;
        };
        auto in_tract = [&](PersonIndex p) {
          return home_tract[p] >= 0 && layer.contains(static_cast<std::uint32_t>(home_tract[p]), x.lat, x.lon);
        };
        a.at_home_i = at_home(x.i);
        a.at_home_j = at_home(x.j);
        a.in_home_tract_i = in_tract(x.i);
        a.in_home_tract_j = in_tract(x.j);
        a.on_road = layer.near_road(x.lat, x.lon, cfg.road_dist_m);
        a.hour_bucket = static_cast<std::int8_t>(hour_bucket(x.t, cfg.utc_offset_hours));
        if (const auto poi = layer.poi_at(x.lat, x.lon)) {
          a.poi = feat_label[*poi];
          a.poi_category = feat_cat[*poi];
          if (poi_parent_hub[*poi] >= 0) a.hub = feat_label[static_cast<std::size_t>(poi_parent_hub[*poi])];
        }
        if (a.hub == LabelPool::kNone) {
          if (const auto hub = layer.hub_at(x.lat, x.lon)) a.hub = feat_label[*hub];
        }
      },
      cfg.threads);
  return out;
}

TractContext classify_tract_context(const Annotation& a) {
  if (a.in_home_tract_i && a.in_home_tract_j) return TractContext::both_in_home_tract;
  if (a.in_home_tract_i || a.in_home_tract_j) return TractContext::one_out;
  return TractContext::both_out;
}

std::string to_string(TractContext c) {
  switch (c) {
    case TractContext::both_in_home_tract: return "both_in_home_tract";
    case TractContext::one_out: return "one_out";
    case TractContext::both_out: return "both_out";
  }
  return "both_out";
}

void write_annotated(const AnnotatedSet& set, std::ostream& out) {
  out << "i,j,t,lat,lon,at_home_i,at_home_j,in_home_tract_i,in_home_tract_j,poi_id,poi_category,hub_id,"
         "on_road,hour_bucket\n";
  auto label = [&](std::int32_t id) -> const std::string& {
    static const std::string empty;
    return id == LabelPool::kNone ? empty : set.labels.str(id);
  };
  for (std::size_t k = 0; k < set.edges.size(); ++k) {
    const auto& x = set.edges[k];
    const auto& a = set.ann[k];
    out << set.ids[x.i] << ',' << set.ids[x.j] << ',' << x.t << ',' << csv::format_double(x.lat) << ','
        << csv::format_double(x.lon) << ',' << a.at_home_i << ',' << a.at_home_j << ',' << a.in_home_tract_i
        << ',' << a.in_home_tract_j << ',' << label(a.poi) << ',' << label(a.poi_category) << ','
        << label(a.hub) << ',' << a.on_road << ',' << static_cast<int>(a.hour_bucket) << '\n';
  }
}

AnnotatedSet read_annotated(std::istream& in) {
  AnnotatedSet set;
  std::string line;
  if (!csv::next_data_line(in, line)) return set;
  const csv::Header h(line);
  const std::size_t ci = h.require("i"), cj = h.require("j"), ct = h.require("t"), clat = h.require("lat"),
                    clon = h.require("lon"), chi = h.require("at_home_i"), chj = h.require("at_home_j"),
                    cti = h.require("in_home_tract_i"), ctj = h.require("in_home_tract_j"),
                    cpoi = h.require("poi_id"), ccat = h.require("poi_category"), chub = h.require("hub_id"),
                    croad = h.require("on_road"), chour = h.require("hour_bucket");
  const std::size_t need = std::max({ci, cj, ct, clat, clon, chi, chj, cti, ctj, cpoi, ccat, chub, croad, chour});
  std::unordered_map<std::string, PersonIndex> index;
  auto person = [&](std::string_view s) {
    std::string key(s);
    const auto it = index.find(key);
    if (it != index.end()) return it->second;
    const auto p = static_cast<PersonIndex>(set.ids.size());
    set.ids.push_back(key);
    index.emplace(std::move(key), p);
    return p;
  };
  auto flag = [&](std::string_view s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw DataError("bad boolean '" + std::string(s) + "' in annotated interactions");
  };
  auto label = [&](std::string_view s) {
    return s.empty() ? LabelPool::kNone : set.labels.intern(std::string(s));
  };
  std::vector<std::string_view> cols;
  struct Row {
    Interaction x;
    Annotation a;
  };
  std::vector<Row> rows;
  while (csv::next_data_line(in, line)) {
    if (line.empty()) continue;
    csv::split(line, cols);
    if (cols.size() <= need) throw DataError("malformed annotated row: " + line);
    Row r;
    const auto a = person(cols[ci]);
    const auto b = person(cols[cj]);
    const auto t = csv::parse_int(cols[ct]);
    const auto lat = csv::parse_double(cols[clat]);
    const auto lon = csv::parse_double(cols[clon]);
    const auto hour = csv::parse_int(cols[chour]);
    if (!t || !lat || !lon || !hour || a == b) throw DataError("malformed annotated row: " + line);
    r.x.i = a;
    r.x.j = b;
    r.x.t = *t;
    r.x.lat = *lat;
    r.x.lon = *lon;
    r.a.at_home_i = flag(cols[chi]);
    r.a.at_home_j = flag(cols[chj]);
    r.a.in_home_tract_i = flag(cols[cti]);
    r.a.in_home_tract_j = flag(cols[ctj]);
    r.a.poi = label(cols[cpoi]);
    r.a.poi_category = label(cols[ccat]);
    r.a.hub = label(cols[chub]);
    r.a.on_road = flag(cols[croad]);
    r.a.hour_bucket = static_cast<std::int8_t>(*hour);
    rows.push_back(r);
  }
  // renumber persons into lexicographic id order, as in a PingStore
  std::vector<PersonIndex> order(set.ids.size());
  for (PersonIndex p = 0; p < order.size(); ++p) order[p] = p;
  std::sort(order.begin(), order.end(), [&](PersonIndex a, PersonIndex b) { return set.ids[a] < set.ids[b]; });
  std::vector<PersonIndex> remap(order.size());
  std::vector<std::string> sorted_ids(order.size());
  for (PersonIndex n = 0; n < order.size(); ++n) {
    remap[order[n]] = n;
    sorted_ids[n] = std::move(set.ids[order[n]]);
  }
  set.ids = std::move(sorted_ids);
  for (auto& r : rows) {
    r.x.i = remap[r.x.i];
    r.x.j = remap[r.x.j];
    if (r.x.i > r.x.j) {
      std::swap(r.x.i, r.x.j);
      std::swap(r.a.at_home_i, r.a.at_home_j);
      std::swap(r.a.in_home_tract_i, r.a.in_home_tract_j);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return canonical_less(a.x, b.x); });
  set.edges.reserve(rows.size());
  set.ann.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const bool same_pair = k > 0 && rows[k - 1].x.i == rows[k].x.i && rows[k - 1].x.j == rows[k].x.j;
    rows[k].x.k = same_pair ? set.edges.back().k + 1 : 0;
    set.edges.push_back(rows[k].x);
    set.ann.push_back(rows[k].a);
  }
  return set;
}

AnnotatedSet filter_set(const AnnotatedSet& set, const EdgeFilter& keep) {
  AnnotatedSet out;
  out.ids = set.ids;
  out.labels = set.labels;
  for (std::size_t k = 0; k < set.edges.size(); ++k) {
    if (!keep(set.edges[k], set.ann[k], set.labels)) continue;
    out.edges.push_back(set.edges[k]);
    out.ann.push_back(set.ann[k]);
  }
  return out;
}

}  // namespace interseg
