#include "interseg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"

namespace interseg {

bool ping_is_valid(const Ping& p) {
  if (p.person_id.empty()) return false;
  if (!(p.lat >= -90.0 && p.lat <= 90.0)) return false;
  if (!(p.lon >= -180.0 && p.lon <= 180.0)) return false;
  if (p.t <= 0) return false;
  if (p.accuracy_m && !(*p.accuracy_m >= 0.0)) return false;
  return true;
}

ParseStats parse_pings(std::istream& in, const PingSchema& schema,
                       const std::function<void(const Ping&)>& sink) {
  ParseStats stats;
  std::string line;
  if (!csv::next_data_line(in, line)) return stats;
  const csv::Header header(line);
  const std::size_t c_id = header.require(schema.person_id);
  const std::size_t c_t = header.require(schema.t);
  const std::size_t c_lat = header.require(schema.lat);
  const std::size_t c_lon = header.require(schema.lon);
  const auto c_acc = header.find(schema.accuracy);
  const std::size_t need = std::max({c_id, c_t, c_lat, c_lon}) + 1;

  std::vector<std::string_view> cols;
  Ping ping;
  while (csv::next_data_line(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++stats.rows_read;
    csv::split(line, cols);
    if (cols.size() < need) {
      ++stats.rows_rejected;
      continue;
    }
    const auto t = csv::parse_int(cols[c_t]);
    const auto lat = csv::parse_double(cols[c_lat]);
    const auto lon = csv::parse_double(cols[c_lon]);
    if (!t || !lat || !lon) {
      ++stats.rows_rejected;
      continue;
    }
    ping.person_id.assign(cols[c_id]);
    ping.t = *t;
    ping.lat = *lat;
    ping.lon = *lon;
    ping.accuracy_m.reset();
    if (c_acc && *c_acc < cols.size() && !cols[*c_acc].empty()) {
      const auto acc = csv::parse_double(cols[*c_acc]);
      if (!acc) {
        ++stats.rows_rejected;
        continue;
      }
      ping.accuracy_m = *acc;
    }
    if (!ping_is_valid(ping)) {
      ++stats.rows_rejected;
      continue;
    }
    sink(ping);
  }
  return stats;
}

std::vector<Ping> parse_pings(std::istream& in, const PingSchema& schema, ParseStats* stats) {
  std::vector<Ping> out;
  const auto s = parse_pings(in, schema, [&](const Ping& p) { out.push_back(p); });
  if (stats) *stats = s;
  return out;
}

std::vector<Ping> filter_accuracy(std::vector<Ping> pings, double max_accuracy_m) {
  std::erase_if(pings, [&](const Ping& p) { return !passes_accuracy(p, max_accuracy_m); });
  return pings;
}

std::optional<PersonIndex> PingStore::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void PingStore::rebuild_index() {
  index_.clear();
  index_.reserve(ids_.size());
  for (PersonIndex i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

PingStore PingStore::subset(const std::vector<bool>& keep) const {
  PingStore out;
  out.duplicates_dropped_ = duplicates_dropped_;
  for (PersonIndex p = 0; p < ids_.size(); ++p) {
    if (!keep[p]) continue;
    out.ids_.push_back(ids_[p]);
    const auto ps = pings(p);
    out.fixes_.insert(out.fixes_.end(), ps.begin(), ps.end());
    out.offsets_.push_back(out.fixes_.size());
  }
  out.rebuild_index();
  return out;
}

void PingStoreBuilder::add(const Ping& p) {
  Fix f{p.t, p.lat, p.lon};
  if (p.accuracy_m) f.accuracy_m = static_cast<float>(*p.accuracy_m);
  add(p.person_id, f);
}

void PingStoreBuilder::add(std::string_view person_id, const Fix& f) {
  auto it = per_person_.find(std::string(person_id));
  if (it == per_person_.end()) it = per_person_.emplace(std::string(person_id), std::vector<Fix>{}).first;
  it->second.push_back(f);
}

PingStore PingStoreBuilder::build() && {
  PingStore store;
  store.ids_.reserve(per_person_.size());
  for (const auto& [id, _] : per_person_) store.ids_.push_back(id);
  std::sort(store.ids_.begin(), store.ids_.end());
  std::size_t total = 0;
  for (const auto& [_, v] : per_person_) total += v.size();
  store.fixes_.reserve(total);
  for (const auto& id : store.ids_) {
    auto& v = per_person_[id];
    std::sort(v.begin(), v.end(), fix_less);
    const auto last = std::unique(v.begin(), v.end(), [](const Fix& a, const Fix& b) {
      return a.t == b.t && a.lat == b.lat && a.lon == b.lon;
    });
    store.duplicates_dropped_ += static_cast<std::uint64_t>(v.end() - last);
    store.fixes_.insert(store.fixes_.end(), v.begin(), last);
    store.offsets_.push_back(store.fixes_.size());
    std::vector<Fix>().swap(v);
  }
  per_person_.clear();
  store.rebuild_index();
  return store;
}

PingStore make_store(std::span<const Ping> pings) {
  PingStoreBuilder b;
  for (const auto& p : pings) b.add(p);
  return std::move(b).build();
}

PingStore filter_min_pings(const PingStore& store, std::size_t min_count) {
  std::vector<bool> keep(store.num_persons());
  for (PersonIndex p = 0; p < store.num_persons(); ++p) keep[p] = store.pings(p).size() >= min_count;
  return store.subset(keep);
}

namespace {

struct RoundedKey {
  std::int64_t t;
  std::int64_t lat_e6;
  std::int64_t lon_e6;
  PersonIndex person;
};

}  // namespace

DedupResult dedup_devices(const PingStore& store, double overlap_frac) {
  const std::size_t n = store.num_persons();
  std::vector<RoundedKey> keys;
  keys.reserve(store.num_pings());
  for (PersonIndex p = 0; p < n; ++p) {
    for (const auto& f : store.pings(p)) {
      keys.push_back({f.t, std::llround(f.lat * 1e6), std::llround(f.lon * 1e6), p});
    }
  }
  auto key_less = [](const RoundedKey& a, const RoundedKey& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.lat_e6 != b.lat_e6) return a.lat_e6 < b.lat_e6;
    if (a.lon_e6 != b.lon_e6) return a.lon_e6 < b.lon_e6;
    return a.person < b.person;
  };
  std::sort(keys.begin(), keys.end(), key_less);
  auto same_key = [](const RoundedKey& a, const RoundedKey& b) {
    return a.t == b.t && a.lat_e6 == b.lat_e6 && a.lon_e6 == b.lon_e6;
  };

  // Distinct rounded triples per person, and shared triples per person pair.
  std::vector<std::uint64_t> distinct(n, 0);
  std::map<std::pair<PersonIndex, PersonIndex>, std::uint64_t> shared;
  std::vector<PersonIndex> run;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    run.clear();
    while (j < keys.size() && same_key(keys[i], keys[j])) {
      if (run.empty() || run.back() != keys[j].person) run.push_back(keys[j].person);
      ++j;
    }
    for (PersonIndex p : run) ++distinct[p];
    for (std::size_t a = 0; a < run.size(); ++a)
      for (std::size_t b = a + 1; b < run.size(); ++b) ++shared[{run[a], run[b]}];
    i = j;
  }

  std::vector<bool> keep(n, true);
  for (const auto& [pair, count] : shared) {
    const auto [a, b] = pair;
    if (!keep[a] || !keep[b]) continue;
    const double fa = static_cast<double>(count) / static_cast<double>(distinct[a]);
    const double fb = static_cast<double>(count) / static_cast<double>(distinct[b]);
    if (std::max(fa, fb) <= overlap_frac) continue;
    const std::size_t na = store.pings(a).size();
    const std::size_t nb = store.pings(b).size();
    // a < b in index order, which is lexicographic id order
    const PersonIndex victim = na < nb ? a : b;
    keep[victim] = false;
  }

  DedupResult res;
  for (PersonIndex p = 0; p < n; ++p)
    if (!keep[p]) res.removed.push_back(store.person_id(p));
  res.store = store.subset(keep);
  return res;
}

void write_pings(const PingStore& store, std::ostream& out) {
  out << "person_id,t,lat,lon,accuracy_m\n";
  for (PersonIndex p = 0; p < store.num_persons(); ++p) {
    const auto& id = store.person_id(p);
    for (const auto& f : store.pings(p)) {
      out << id << ',' << f.t << ',' << csv::format_double(f.lat) << ','
          << csv::format_double(f.lon) << ',';
      if (f.has_accuracy()) out << csv::format_float(f.accuracy_m);
      out << '\n';
    }
  }
}

std::string IngestReport::to_json() const {
  nlohmann::ordered_json j;
  j["rows_read"] = rows_read;
  j["rows_rejected"] = rows_rejected;
  j["persons_in"] = persons_in;
  j["persons_out"] = persons_out;
  j["pings_dropped_accuracy"] = pings_dropped_accuracy;
  j["duplicate_rows"] = duplicate_rows;
  j["persons_dropped_min_pings"] = persons_dropped_min_pings;
  j["persons_dropped_dedup"] = persons_dropped_dedup;
  return j.dump(2);
}

PingStore ingest(std::istream& in, const IngestConfig& cfg, IngestReport* report) {
  PingStoreBuilder builder;
  std::uint64_t dropped_acc = 0;
  std::unordered_map<std::string, bool> seen;
  const auto stats = parse_pings(in, cfg.schema, [&](const Ping& p) {
    seen.try_emplace(p.person_id, true);
    if (!passes_accuracy(p, cfg.max_accuracy_m)) {
      ++dropped_acc;
      return;
    }
    builder.add(p);
  });
  PingStore store = std::move(builder).build();
  const std::size_t after_acc = store.num_persons();
  store = filter_min_pings(store, cfg.min_pings);
  const std::size_t after_min = store.num_persons();
  auto dedup = dedup_devices(store, cfg.dedup_overlap_frac);
  if (report) {
    report->rows_read = stats.rows_read;
    report->rows_rejected = stats.rows_rejected;
    report->persons_in = seen.size();
    report->persons_out = dedup.store.num_persons();
    report->pings_dropped_accuracy = dropped_acc;
    report->duplicate_rows = store.duplicates_dropped();
    report->persons_dropped_min_pings = (seen.size() - after_acc) + (after_acc - after_min);
    report->persons_dropped_dedup = dedup.removed.size();
  }
  return std::move(dedup.store);
}

PingStore load_store(std::istream& in, const PingSchema& schema) {
  PingStoreBuilder builder;
  parse_pings(in, schema, [&](const Ping& p) { builder.add(p); });
  return std::move(builder).build();
}

}  // namespace interseg
