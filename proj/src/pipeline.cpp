#include "interseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"
#include "interseg/layers.hpp"
#include "interseg/random.hpp"
#include "interseg/stats.hpp"

namespace interseg {

EsVariant parse_es_variant(const std::string& s) {
  if (s == "zscore" || s == "es") return EsVariant::zscore;
  if (s == "percentile") return EsVariant::percentile;
  if (s == "percentile_within_region") return EsVariant::percentile_within_region;
  if (s == "tract_income") return EsVariant::tract_income;
  throw ConfigError("unknown ES variant '" + s + "'");
}

std::string to_string(EsVariant v) {
  switch (v) {
    case EsVariant::zscore: return "zscore";
    case EsVariant::percentile: return "percentile";
    case EsVariant::percentile_within_region: return "percentile_within_region";
    case EsVariant::tract_income: return "tract_income";
  }
  return "zscore";
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["max_accuracy_m"] = ingest.max_accuracy_m;
  j["min_pings"] = ingest.min_pings;
  j["dedup_overlap_frac"] = ingest.dedup_overlap_frac;
  j["night_start_hour"] = home.night_start_hour;
  j["night_end_hour"] = home.night_end_hour;
  j["move_thresh_m"] = home.move_thresh_m;
  j["home_radius_m"] = home.radius_m;
  j["min_nights"] = home.min_nights;
  j["min_frac"] = home.min_frac;
  j["max_gap_h"] = home.max_gap_h;
  j["utc_offset_hours"] = home.utc_offset_hours;
  j["link_max_dist_m"] = link.max_dist_m;
  j["winsor_max"] = link.winsor_max;
  j["crowded_max_others"] = crowded_max_others;
  j["dist_m"] = join.dist_m;
  j["time_s"] = join.time_s;
  j["tie_strength"] = interseg::to_string(join.tie);
  j["weighting"] = interseg::to_string(join.weighting);
  j["collapse_repeats"] = join.collapse_repeats;
  j["at_home_radius_m"] = annotate.home_radius_m;
  j["road_dist_m"] = annotate.road_dist_m;
  j["estimator"] = interseg::to_string(estimator);
  j["es_variant"] = interseg::to_string(es_variant);
  j["region"] = region;
  j["seed"] = seed;
  return j;
}

void RunConfig::apply_json(const nlohmann::json& j) {
  try {
    ingest.max_accuracy_m = j.value("max_accuracy_m", ingest.max_accuracy_m);
    ingest.min_pings = j.value("min_pings", ingest.min_pings);
    ingest.dedup_overlap_frac = j.value("dedup_overlap_frac", ingest.dedup_overlap_frac);
    home.night_start_hour = j.value("night_start_hour", home.night_start_hour);
    home.night_end_hour = j.value("night_end_hour", home.night_end_hour);
    home.move_thresh_m = j.value("move_thresh_m", home.move_thresh_m);
    home.radius_m = j.value("home_radius_m", home.radius_m);
    home.min_nights = j.value("min_nights", home.min_nights);
    home.min_frac = j.value("min_frac", home.min_frac);
    home.max_gap_h = j.value("max_gap_h", home.max_gap_h);
    home.utc_offset_hours = j.value("utc_offset_hours", home.utc_offset_hours);
    link.max_dist_m = j.value("link_max_dist_m", link.max_dist_m);
    link.winsor_max = j.value("winsor_max", link.winsor_max);
    crowded_max_others = j.value("crowded_max_others", crowded_max_others);
    join.dist_m = j.value("dist_m", join.dist_m);
    join.time_s = j.value("time_s", join.time_s);
    if (j.contains("tie_strength")) join.tie = parse_tie_strength(j["tie_strength"].get<std::string>());
    if (j.contains("weighting")) join.weighting = parse_weighting(j["weighting"].get<std::string>());
    join.collapse_repeats = j.value("collapse_repeats", join.collapse_repeats);
    annotate.home_radius_m = j.value("at_home_radius_m", annotate.home_radius_m);
    annotate.road_dist_m = j.value("road_dist_m", annotate.road_dist_m);
    if (j.contains("estimator")) estimator = parse_estimator(j["estimator"].get<std::string>());
    if (j.contains("es_variant")) es_variant = parse_es_variant(j["es_variant"].get<std::string>());
    region = j.value("region", region);
    seed = j.value("seed", seed);
    threads = j.value("threads", threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  join.utc_offset_hours = home.utc_offset_hours;
  annotate.utc_offset_hours = home.utc_offset_hours;
  join.validate();
}

std::string RunConfig::hash() const {
  const auto h = fnv1a64(to_json().dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void require_file(const std::filesystem::path& p, const std::string& producing_stage) {
  if (!std::filesystem::exists(p))
    throw DataError("missing " + p.string() + " (run the '" + producing_stage + "' stage first)");
}

std::ofstream open_output(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  return f;
}

std::ifstream open_input(const std::filesystem::path& p, const std::string& producing_stage) {
  require_file(p, producing_stage);
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot read " + p.string());
  return f;
}

std::string read_config_hash(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::string line;
  const std::string key = "# config_hash=";
  if (std::getline(f, line) && line.rfind(key, 0) == 0) return line.substr(key.size());
  return {};
}

namespace {

void hash_line(std::ostream& out, const RunConfig& cfg) { out << "# config_hash=" << cfg.hash() << '\n'; }

PingStore load_clean(const RunPaths& run) {
  auto in = open_input(run.clean_pings(), "ingest");
  return load_store(in);
}

std::vector<Person> load_person_table(const RunPaths& run) {
  auto in = open_input(run.persons(), "link-es");
  return load_persons(in);
}

// Universe of an interactions file: every id it mentions, sorted.
std::vector<std::string> interaction_ids(const std::filesystem::path& p) {
  auto in = open_input(p, "join");
  std::set<std::string> ids;
  std::string line;
  if (!csv::next_data_line(in, line)) return {};
  const csv::Header h(line);
  const auto ci = h.require("i"), cj = h.require("j");
  std::vector<std::string_view> cols;
  while (csv::next_data_line(in, line)) {
    if (line.empty()) continue;
    csv::split(line, cols);
    if (cols.size() <= std::max(ci, cj)) throw DataError("malformed interaction row: " + line);
    ids.emplace(cols[ci]);
    ids.emplace(cols[cj]);
  }
  return {ids.begin(), ids.end()};
}

}  // namespace

IngestReport stage_ingest(const std::filesystem::path& raw_pings, const RunPaths& out, const RunConfig& cfg) {
  auto in = open_input(raw_pings, "synth");
  IngestReport report;
  const auto store = ingest(in, cfg.ingest, &report);
  {
    auto f = open_output(out.clean_pings());
    hash_line(f, cfg);
    write_pings(store, f);
  }
  auto f = open_output(out.ingest_report());
  auto j = nlohmann::ordered_json::parse(report.to_json());
  j["config_hash"] = cfg.hash();
  f << j.dump(2) << '\n';
  return report;
}

std::size_t stage_infer_homes(const RunPaths& run, const RunConfig& cfg) {
  const auto store = load_clean(run);
  const auto homes = infer_homes(store, cfg.home, cfg.threads);
  auto f = open_output(run.homes());
  hash_line(f, cfg);
  f << "person_id,home_lat,home_lon,nights,stationary,in_radius,frac_in_radius\n";
  std::size_t n = 0;
  for (PersonIndex p = 0; p < store.num_persons(); ++p) {
    if (!homes[p]) continue;
    const auto& h = *homes[p];
    f << store.person_id(p) << ',' << csv::format_double(h.home.lat) << ',' << csv::format_double(h.home.lon) << ','
      << h.nights << ',' << h.stationary << ',' << h.in_radius << ',' << csv::format_double(h.frac_in_radius)
      << '\n';
    ++n;
  }
  return n;
}

std::size_t stage_link_es(const RunPaths& run, const std::filesystem::path& properties,
                          const std::filesystem::path& layers, const RunConfig& cfg) {
  auto pin = open_input(properties, "synth");
  const PropertyIndex props(load_properties(pin));
  auto lin = open_input(layers, "synth");
  const auto layer = GeoLayer::load(lin);

  auto hin = open_input(run.homes(), "infer-homes");
  std::string line;
  std::vector<Person> persons;
  std::vector<std::size_t> linked;
  if (csv::next_data_line(hin, line)) {
    const csv::Header h(line);
    const auto cid = h.require("person_id"), clat = h.require("home_lat"), clon = h.require("home_lon");
    std::vector<std::string_view> cols;
    while (csv::next_data_line(hin, line)) {
      if (line.empty()) continue;
      csv::split(line, cols);
      if (cols.size() <= std::max({cid, clat, clon})) throw DataError("malformed home row: " + line);
      const auto lat = csv::parse_double(cols[clat]);
      const auto lon = csv::parse_double(cols[clon]);
      if (!lat || !lon) throw DataError("malformed home row: " + line);
      const LatLon home{*lat, *lon};
      const auto link = link_es(home, props, cfg.link);
      if (!link) continue;
      Person p;
      p.person_id = std::string(cols[cid]);
      p.home_lat = home.lat;
      p.home_lon = home.lon;
      p.es_raw = link->es_raw;
      if (const auto t = layer.tract_at(home.lat, home.lon)) {
        const auto& tract = layer.feature(*t);
        p.home_tract_id = tract.id;
        const auto inc = tract.attrs.find("tract_income");
        if (inc != tract.attrs.end()) p.tract_income = inc->second;
      }
      if (const auto r = layer.region_at(home.lat, home.lon)) p.region_id = layer.feature(*r).id;
      persons.push_back(std::move(p));
      linked.push_back(link->property);
    }
  }
  persons = filter_crowded_residences(std::move(persons), linked, props, cfg.crowded_max_others);
  compute_es_variants(persons);
  auto f = open_output(run.persons());
  hash_line(f, cfg);
  write_persons(persons, f);
  return persons.size();
}

std::size_t stage_join(const RunPaths& run, const RunConfig& cfg) {
  const auto store = load_clean(run);
  JoinConfig jc = cfg.join;
  jc.threads = cfg.threads;
  const auto edges = build_interactions(store, jc);
  auto f = open_output(run.interactions());
  hash_line(f, cfg);
  write_interactions(edges, store.person_ids(), f);
  return edges.size();
}

std::size_t stage_annotate(const RunPaths& run, const std::filesystem::path& layers, const RunConfig& cfg) {
  auto ids = interaction_ids(run.interactions());
  std::unordered_map<std::string, PersonIndex> index;
  for (PersonIndex p = 0; p < ids.size(); ++p) index.emplace(ids[p], p);
  auto in = open_input(run.interactions(), "join");
  auto edges = read_interactions(in, index);
  const auto persons = load_person_table(run);
  auto lin = open_input(layers, "synth");
  const auto layer = GeoLayer::load(lin);
  const auto lookup = person_lookup(ids, persons);
  AnnotateConfig ac = cfg.annotate;
  ac.threads = cfg.threads;
  const auto set = annotate_all(std::move(edges), std::move(ids), lookup, layer, ac);
  auto f = open_output(run.annotated());
  hash_line(f, cfg);
  write_annotated(set, f);
  return set.size();
}

std::vector<double> es_for_universe(std::span<const std::string> ids, std::span<const Person> persons,
                                    EsVariant variant) {
  const auto lookup = person_lookup(ids, persons);
  std::vector<double> v(ids.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const Person* person = lookup[p];
    if (!person) continue;
    switch (variant) {
      case EsVariant::zscore: v[p] = person->es; break;
      case EsVariant::percentile: v[p] = person->es_percentile; break;
      case EsVariant::percentile_within_region: v[p] = person->es_percentile_within_region; break;
      case EsVariant::tract_income:
        if (person->tract_income) v[p] = *person->tract_income;
        break;
    }
  }
  return standardize(v);
}

std::vector<double> es_raw_for_universe(std::span<const std::string> ids, std::span<const Person> persons) {
  const auto lookup = person_lookup(ids, persons);
  std::vector<double> v(ids.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t p = 0; p < ids.size(); ++p)
    if (lookup[p]) v[p] = lookup[p]->es_raw;
  return v;
}

std::vector<std::string> person_regions(std::span<const Person> persons) {
  std::set<std::string> s;
  for (const auto& p : persons)
    if (!p.region_id.empty()) s.insert(p.region_id);
  return {s.begin(), s.end()};
}

std::vector<char> region_egos(std::span<const std::string> ids, std::span<const Person> persons,
                              const std::string& region) {
  const auto lookup = person_lookup(ids, persons);
  std::vector<char> mask(ids.size(), 0);
  for (std::size_t p = 0; p < ids.size(); ++p)
    mask[p] = lookup[p] && (region == "all" || lookup[p]->region_id == region);
  return mask;
}

nlohmann::ordered_json estimate_json(const std::string& region, const SegregationEstimate& e,
                                     const std::string& filter, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["region_id"] = region;
  j["rho"] = e.rho;
  j["a"] = e.a;
  j["b"] = e.b;
  j["var_u"] = e.var_u;
  j["var_e"] = e.var_e;
  j["n_egos"] = e.n_egos;
  j["n_obs"] = e.n_obs;
  j["converged"] = e.converged;
  j["filter"] = filter;
  j["reml_loglik"] = e.reml_loglik;
  if (!e.diagnostic.empty()) j["diagnostic"] = e.diagnostic;
  j["config_hash"] = config_hash;
  return j;
}

namespace {

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '_';
  return s;
}

std::vector<std::string> regions_for(const RunConfig& cfg, std::span<const Person> persons) {
  if (cfg.region != "all") return {cfg.region};
  auto r = person_regions(persons);
  r.insert(r.begin(), "all");
  return r;
}

}  // namespace

std::vector<nlohmann::ordered_json> stage_segregate(const RunPaths& run, const RunConfig& cfg,
                                                    const std::string& filter_name, const EdgeFilter& filter) {
  auto in = open_input(run.annotated(), "annotate");
  const auto set = read_annotated(in);
  const auto persons = load_person_table(run);
  const auto es = es_for_universe(set.ids, persons, cfg.es_variant);
  const EdgeFilter keep =
      filter ? filter : EdgeFilter([](const Interaction&, const Annotation&, const LabelPool&) { return true; });
  std::vector<nlohmann::ordered_json> out;
  for (const auto& region : regions_for(cfg, persons)) {
    const auto egos = region_egos(set.ids, persons, region);
    nlohmann::ordered_json j;
    try {
      const auto est = is_decomposed(set, es, egos, keep, cfg.join.weighting, cfg.estimator);
      j = estimate_json(region, est, filter_name, cfg.hash());
      std::vector<double> res_es;
      std::vector<std::string> res_tract;
      for (const auto& p : persons) {
        if (region != "all" && p.region_id != region) continue;
        res_es.push_back(p.es);
        res_tract.push_back(p.home_tract_id);
      }
      try {
        j["nsi"] = nsi(res_es, res_tract);
      } catch (const DataError&) {
      }
    } catch (const DataError& e) {
      j = nlohmann::ordered_json{{"region_id", region}, {"rho", nullptr}, {"converged", false},
                                 {"filter", filter_name}, {"error", e.what()}, {"config_hash", cfg.hash()}};
    }
    auto f = open_output(run.estimates_dir() / (file_safe(region) + "__" + file_safe(filter_name) + ".json"));
    f << j.dump(2) << '\n';
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<nlohmann::ordered_json> run_pipeline(const std::filesystem::path& raw_pings,
                                                 const std::filesystem::path& properties,
                                                 const std::filesystem::path& layers, const RunPaths& run,
                                                 const RunConfig& cfg) {
  stage_ingest(raw_pings, run, cfg);
  stage_infer_homes(run, cfg);
  stage_link_es(run, properties, layers, cfg);
  stage_join(run, cfg);
  stage_annotate(run, layers, cfg);
  return stage_segregate(run, cfg);
}

std::vector<NamedFilter> decomposition_filters(const std::string& by, const AnnotatedSet& set) {
  std::vector<NamedFilter> out;
  if (by == "hour") {
    for (int b = 0; b < 8; ++b)
      out.push_back({"hour_" + std::to_string(b),
                     [b](const Interaction&, const Annotation& a, const LabelPool&) { return a.hour_bucket == b; }});
  } else if (by == "poi-category") {
    std::set<std::int32_t> cats;
    for (const auto& a : set.ann)
      if (a.poi_category != LabelPool::kNone) cats.insert(a.poi_category);
    std::vector<std::pair<std::string, std::int32_t>> named;
    for (const auto c : cats) named.emplace_back(set.labels.str(c), c);
    std::sort(named.begin(), named.end());
    for (const auto& [name, c] : named)
      out.push_back({"poi_" + name, [c = c](const Interaction&, const Annotation& a, const LabelPool&) {
                       return a.poi_category == c;
                     }});
  } else if (by == "tract-context") {
    for (const auto ctx : {TractContext::both_in_home_tract, TractContext::one_out, TractContext::both_out})
      out.push_back({to_string(ctx), [ctx](const Interaction&, const Annotation& a, const LabelPool&) {
                       return classify_tract_context(a) == ctx;
                     }});
  } else if (by == "road") {
    out.push_back({"on_road", [](const Interaction&, const Annotation& a, const LabelPool&) { return a.on_road; }});
    out.push_back({"off_road", [](const Interaction&, const Annotation& a, const LabelPool&) { return !a.on_road; }});
  } else {
    throw ConfigError("unknown decomposition '" + by + "' (expected hour, poi-category, tract-context or road)");
  }
  return out;
}

std::vector<RobustnessVariant> robustness_variants() {
  const EdgeFilter all = [](const Interaction&, const Annotation&, const LabelPool&) { return true; };
  const EdgeFilter not_same_home = [](const Interaction&, const Annotation& a, const LabelPool&) {
    return !a.same_home();
  };
  auto rejoin = [&](std::string name, std::function<void(RunConfig&)> edit) {
    return RobustnessVariant{std::move(name), std::move(edit), not_same_home, true};
  };
  std::vector<RobustnessVariant> v;
  v.push_back({"primary", [](RunConfig&) {}, all, false});
  v.push_back({"upweight_repeats", [](RunConfig& c) { c.join.weighting = Weighting::count_repeats; }, all, false});
  v.push_back({"es_percentile", [](RunConfig& c) { c.es_variant = EsVariant::percentile; }, all, false});
  v.push_back({"es_percentile_within_region",
               [](RunConfig& c) { c.es_variant = EsVariant::percentile_within_region; }, all, false});
  v.push_back({"es_tract_income", [](RunConfig& c) { c.es_variant = EsVariant::tract_income; }, all, false});
  v.push_back({"exclude_roads", [](RunConfig&) {},
               [](const Interaction&, const Annotation& a, const LabelPool&) { return !a.on_road; }, false});
  v.push_back({"exclude_same_home", [](RunConfig&) {}, not_same_home, false});
  v.push_back({"work_leisure", [](RunConfig&) {},
               [](const Interaction&, const Annotation& a, const LabelPool&) {
                 return classify_tract_context(a) == TractContext::both_out;
               },
               false});
  v.push_back({"leisure_in_poi", [](RunConfig&) {},
               [](const Interaction&, const Annotation& a, const LabelPool&) { return a.poi != LabelPool::kNone; },
               false});
  v.push_back(rejoin("dist_25", [](RunConfig& c) { c.join.dist_m = 25; }));
  v.push_back(rejoin("dist_10", [](RunConfig& c) { c.join.dist_m = 10; }));
  v.push_back(rejoin("time_120", [](RunConfig& c) { c.join.time_s = 120; }));
  v.push_back(rejoin("time_60", [](RunConfig& c) { c.join.time_s = 60; }));
  v.push_back(rejoin("consecutive_2", [](RunConfig& c) { c.join.tie = {TieKind::consecutive, 2}; }));
  v.push_back(rejoin("consecutive_3", [](RunConfig& c) { c.join.tie = {TieKind::consecutive, 3}; }));
  v.push_back(rejoin("unique_days_2", [](RunConfig& c) { c.join.tie = {TieKind::unique_days, 2}; }));
  v.push_back(rejoin("unique_days_3", [](RunConfig& c) { c.join.tie = {TieKind::unique_days, 3}; }));
  v.push_back(rejoin("dist_25_time_120_consecutive_2", [](RunConfig& c) {
    c.join.dist_m = 25;
    c.join.time_s = 120;
    c.join.tie = {TieKind::consecutive, 2};
  }));
  v.push_back(rejoin("dist_25_time_120_unique_days_2", [](RunConfig& c) {
    c.join.dist_m = 25;
    c.join.time_s = 120;
    c.join.tie = {TieKind::unique_days, 2};
  }));
  v.push_back(rejoin("dist_10_time_60_consecutive_3", [](RunConfig& c) {
    c.join.dist_m = 10;
    c.join.time_s = 60;
    c.join.tie = {TieKind::consecutive, 3};
  }));
  v.push_back(rejoin("dist_10_time_60_unique_days_3", [](RunConfig& c) {
    c.join.dist_m = 10;
    c.join.time_s = 60;
    c.join.tie = {TieKind::unique_days, 3};
  }));
  return v;
}

std::vector<RobustnessRow> robustness_matrix(const RunPaths& run, const std::filesystem::path& layers,
                                             const RunConfig& cfg) {
  auto in = open_input(run.annotated(), "annotate");
  const auto primary_set = read_annotated(in);
  const auto persons = load_person_table(run);
  const auto regions = regions_for(cfg, persons);

  std::optional<PingStore> store;
  std::optional<GeoLayer> layer;
  std::vector<RobustnessRow> rows;
  for (const auto& variant : robustness_variants()) {
    RunConfig vc = cfg;
    variant.edit(vc);
    AnnotatedSet rejoined;
    const AnnotatedSet* set = &primary_set;
    if (variant.rejoin) {
      if (!store) store = load_clean(run);
      if (!layer) {
        auto lin = open_input(layers, "synth");
        layer = GeoLayer::load(lin);
      }
      JoinConfig jc = vc.join;
      jc.threads = cfg.threads;
      auto edges = build_interactions(*store, jc);
      const auto& ids = store->person_ids();
      const auto lookup = person_lookup(ids, persons);
      AnnotateConfig ac = vc.annotate;
      ac.threads = cfg.threads;
      rejoined = annotate_all(std::move(edges), ids, lookup, *layer, ac);
      set = &rejoined;
    }
    const auto es = es_for_universe(set->ids, persons, vc.es_variant);
    for (const auto& region : regions) {
      RobustnessRow row;
      row.variant = variant.name;
      row.region = region;
      try {
        const auto egos = region_egos(set->ids, persons, region);
        row.rho = is_decomposed(*set, es, egos, variant.filter, vc.join.weighting, vc.estimator).rho;
      } catch (const DataError&) {
        row.ok = false;
        row.rho = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_report(const std::vector<std::filesystem::path>& jsons, std::ostream& out, bool force) {
  out << "region_id,population,venue_count,cov,venue_is,overall_is,bi,nsi,filter,converged,config_hash\n";
  std::string hash;
  std::vector<nlohmann::json> docs;
  for (const auto& p : jsons) {
    std::ifstream f(p);
    if (!f) throw DataError("cannot read " + p.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(p.string() + ": " + e.what());
    }
    const auto h = j.value("config_hash", std::string());
    if (hash.empty()) hash = h;
    else if (h != hash && !force)
      throw DataError("config hash mismatch: " + p.string() + " has " + h + ", expected " + hash +
                      " (use --force to merge anyway)");
    docs.push_back(std::move(j));
  }
  auto num = [](const nlohmann::json& j, const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_number()) return "";
    return csv::format_double(j[key].get<double>());
  };
  for (const auto& j : docs) {
    const auto filter = j.value("filter", std::string("all"));
    const bool venue = filter == "leisure_in_poi" || filter == "at_venue";
    out << j.value("region_id", std::string()) << ',';
    out << (j.contains("population") ? num(j, "population") : num(j, "n_egos")) << ',';
    out << num(j, "venue_count") << ',' << num(j, "cov") << ',';
    out << (venue ? num(j, "rho") : num(j, "venue_is")) << ',';
    out << (venue ? num(j, "overall_is") : num(j, "rho")) << ',';
    out << num(j, "bi") << ',' << num(j, "nsi") << ',' << filter << ',' << (j.value("converged", false) ? 1 : 0)
        << ',' << j.value("config_hash", std::string()) << '\n';
  }
}

}  // namespace interseg
