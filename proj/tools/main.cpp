#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "interseg/bridging.hpp"
#include "interseg/error.hpp"
#include "interseg/layers.hpp"
#include "interseg/nullmodels.hpp"
#include "interseg/pipeline.hpp"
#include "interseg/stats.hpp"
#include "interseg/synthcity.hpp"

namespace fs = std::filesystem;
using namespace interseg;
using ojson = nlohmann::ordered_json;

namespace {

bool g_json_logs = false;

void log(const std::string& level, const std::string& msg, const ojson& extra = ojson::object()) {
  if (g_json_logs) {
    ojson j;
    j["level"] = level;
    j["msg"] = msg;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "[" << level << "] " << msg;
    if (!extra.empty()) std::cerr << ' ' << extra.dump();
    std::cerr << '\n';
  }
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::string run = "run";
  std::size_t threads = 0;
  nlohmann::json file;  // raw config file, for path keys

  RunConfig load() {
    RunConfig cfg;
    if (!config.empty()) {
      std::ifstream f(config);
      if (!f) throw ConfigError("cannot read config " + config);
      try {
        file = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config + ": " + e.what());
      }
      cfg.apply_json(file);
    }
    if (threads) cfg.threads = threads;
    return cfg;
  }

  // A path from the flag, else the config file, else an error.
  fs::path path(const std::string& flag, const char* key) const {
    if (!flag.empty()) return flag;
    if (file.contains(key)) return file[key].get<std::string>();
    throw ConfigError(std::string("missing --") + key);
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--run", c.run, "run directory")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

struct JoinFlags {
  std::optional<double> dist_m, time_s;
  std::string tie, weighting;
  std::optional<bool> collapse;
  void add(CLI::App* app) {
    app->add_option("--dist-m", dist_m, "distance threshold (m)");
    app->add_option("--time-s", time_s, "time threshold (s)");
    app->add_option("--tie-strength", tie, "any | consecutive(k) | unique_days(k)");
    app->add_option("--weighting", weighting, "dedup_pairs | count_repeats");
    app->add_option("--collapse-repeats", collapse, "collapse repeated crossings within T");
  }
  void apply(RunConfig& cfg) const {
    if (dist_m) cfg.join.dist_m = *dist_m;
    if (time_s) cfg.join.time_s = *time_s;
    if (!tie.empty()) cfg.join.tie = parse_tie_strength(tie);
    if (!weighting.empty()) cfg.join.weighting = parse_weighting(weighting);
    if (collapse) cfg.join.collapse_repeats = *collapse;
    cfg.join.validate();
  }
};

// Settings that differ from the primary configuration.
std::vector<std::string> non_default_keys(const RunConfig& cfg) {
  const auto cur = cfg.to_json();
  const auto def = RunConfig{}.to_json();
  std::vector<std::string> keys;
  for (auto it = cur.begin(); it != cur.end(); ++it)
    if (def[it.key()] != it.value()) keys.push_back(it.key());
  return keys;
}

void warn_non_default(const RunConfig& cfg) {
  const auto keys = non_default_keys(cfg);
  if (keys.empty()) return;
  std::string s;
  for (const auto& k : keys) s += (s.empty() ? "" : ",") + k;
  log("warn", "settings differ from the primary configuration", {{"keys", s}});
}

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '_';
  return s;
}

int exit_for(const std::vector<ojson>& estimates) {
  bool bad = false;
  for (const auto& j : estimates)
    if (!j.contains("error") && !j.value("converged", false)) bad = true;
  return bad ? 3 : 0;
}

GeoLayer load_layer(const fs::path& p) {
  auto in = open_input(p, "synth");
  return GeoLayer::load(in);
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stoul(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interaction segregation from mobility pings"};
  app.require_subcommand(1);
  app.add_flag("--json-logs", g_json_logs, "structured JSON log lines on stderr");

  Common c;
  JoinFlags jf;

  // ---- ingest ----
  std::string pings_flag;
  auto* ingest_cmd = app.add_subcommand("ingest", "clean raw pings");
  add_common(ingest_cmd, c);
  ingest_cmd->add_option("--pings", pings_flag, "raw ping CSV");

  auto* homes_cmd = app.add_subcommand("infer-homes", "infer nighttime homes");
  add_common(homes_cmd, c);

  std::string props_flag, layers_flag;
  auto* link_cmd = app.add_subcommand("link-es", "attach economic standing to homes");
  add_common(link_cmd, c);
  link_cmd->add_option("--properties", props_flag, "property CSV");
  link_cmd->add_option("--layers", layers_flag, "layer JSONL");

  auto* join_cmd = app.add_subcommand("join", "detect path crossings");
  add_common(join_cmd, c);
  jf.add(join_cmd);

  auto* annotate_cmd = app.add_subcommand("annotate", "attach place context to interactions");
  add_common(annotate_cmd, c);
  annotate_cmd->add_option("--layers", layers_flag, "layer JSONL");

  std::string estimator_flag, variant_flag, region_flag;
  auto* seg_cmd = app.add_subcommand("segregate", "estimate interaction segregation per region");
  add_common(seg_cmd, c);
  seg_cmd->add_option("--weighting", jf.weighting, "dedup_pairs | count_repeats");
  seg_cmd->add_option("--estimator", estimator_flag, "mixed | naive");
  seg_cmd->add_option("--es-variant", variant_flag, "zscore | percentile | percentile_within_region | tract_income");
  seg_cmd->add_option("--region", region_flag, "region id or all");

  auto* nsi_cmd = app.add_subcommand("nsi", "neighborhood sorting index per region");
  add_common(nsi_cmd, c);

  std::string by_flag;
  bool robustness = false;
  auto* dec_cmd = app.add_subcommand("decompose", "segregation of interaction subsets");
  add_common(dec_cmd, c);
  dec_cmd->add_option("--by", by_flag, "hour | poi-category | tract-context | road");
  dec_cmd->add_flag("--robustness", robustness, "evaluate the robustness matrix");
  dec_cmd->add_option("--layers", layers_flag, "layer JSONL (needed for rejoin variants)");
  dec_cmd->add_option("--region", region_flag, "region id or all");

  std::string measure_flag = "gini", category_flag;
  std::size_t ablate_trials = 0;
  std::optional<std::uint64_t> seed_flag;
  auto* bridge_cmd = app.add_subcommand("bridge", "bridging index of hubs");
  add_common(bridge_cmd, c);
  bridge_cmd->add_option("--hubs", layers_flag, "layer JSONL with hub polygons");
  bridge_cmd->add_option("--category", category_flag, "use venues of this POI category as hubs");
  bridge_cmd->add_option("--measure", measure_flag, "gini | variance")->capture_default_str();
  bridge_cmd->add_option("--ablate-trials", ablate_trials, "random-hub trials");
  bridge_cmd->add_option("--seed", seed_flag, "root seed");
  bridge_cmd->add_option("--region", region_flag, "region id or all");

  auto* null_cmd = app.add_subcommand("nullmodel", "null-model interaction networks");
  null_cmd->require_subcommand(1);
  HomophilyConfig hc;
  std::string kernel_flag = "linear", transform_flag = "raw";
  auto* homophily_cmd = null_cmd->add_subcommand("homophily", "constant-homophily network");
  add_common(homophily_cmd, c);
  homophily_cmd->add_option("--degree", hc.degree_per_person, "partners per person")->capture_default_str();
  homophily_cmd->add_option("--H", hc.h, "homophily strength")->capture_default_str();
  homophily_cmd->add_option("--kernel", kernel_flag, "linear | softmax")->capture_default_str();
  homophily_cmd->add_option("--es", transform_flag, "raw | percentile")->capture_default_str();
  homophily_cmd->add_option("--seed", seed_flag, "root seed");
  homophily_cmd->add_option("--region", region_flag, "region id or all");
  auto* config_model_cmd = null_cmd->add_subcommand("config-model", "degree-preserving rewiring per POI category");
  add_common(config_model_cmd, c);
  config_model_cmd->add_option("--seed", seed_flag, "root seed");

  std::string recipe_flag, out_flag;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic region");
  synth_cmd->add_option("--recipe", recipe_flag, "recipe JSON (defaults otherwise)");
  synth_cmd->add_option("--out", out_flag, "output directory")->required();
  std::optional<std::size_t> synth_pop;
  synth_cmd->add_option("--population", synth_pop, "override recipe population");
  synth_cmd->add_option("--seed", seed_flag, "override recipe seed");

  std::string pops_flag = "300,3000,20";
  bool sweep_null = false, sweep_hubs = false;
  std::size_t sweep_threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "population sweep of synthetic regions");
  sweep_cmd->add_option("--recipe", recipe_flag, "base recipe JSON");
  sweep_cmd->add_option("--populations", pops_flag, "lo,hi,count (log spaced)")->capture_default_str();
  sweep_cmd->add_option("--seed", seed_flag, "root seed");
  sweep_cmd->add_flag("--null", sweep_null, "constant-homophily null instead of the venue mechanism");
  double null_h = 1.0;
  std::size_t null_draws = 30000;
  sweep_cmd->add_option("--H", null_h, "homophily strength of the null")->capture_default_str();
  sweep_cmd->add_option("--min-person-draws", null_draws, "replicate small null regions up to this many person draws")
      ->capture_default_str();
  sweep_cmd->add_flag("--hub-regimes", sweep_hubs, "compare bridging and segregating hubs at fixed population");
  sweep_cmd->add_option("--out", out_flag, "output CSV (stdout if omitted)");
  sweep_cmd->add_option("--threads", sweep_threads, "worker threads");

  std::vector<std::string> report_inputs;
  bool force = false;
  auto* report_cmd = app.add_subcommand("report", "merge region JSON files into one CSV");
  report_cmd->add_option("inputs", report_inputs, "JSON files or directories");
  report_cmd->add_option("--out", out_flag, "output CSV (stdout if omitted)");
  report_cmd->add_flag("--force", force, "merge despite config hash mismatches");

  auto* all_cmd = app.add_subcommand("run", "ingest through segregate in one go");
  add_common(all_cmd, c);
  all_cmd->add_option("--pings", pings_flag, "raw ping CSV");
  all_cmd->add_option("--properties", props_flag, "property CSV");
  all_cmd->add_option("--layers", layers_flag, "layer JSONL");
  jf.add(all_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto done = [&](const std::string& stage, ojson extra = ojson::object()) {
    extra["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log("info", stage + " done", extra);
  };

  try {
    if (*ingest_cmd) {
      auto cfg = c.load();
      const RunPaths run{c.run};
      const auto r = stage_ingest(c.path(pings_flag, "pings"), run, cfg);
      done("ingest", {{"persons", r.persons_out}, {"rows", r.rows_read}});
      return 0;
    }
    if (*homes_cmd) {
      auto cfg = c.load();
      done("infer-homes", {{"homes", stage_infer_homes(RunPaths{c.run}, cfg)}});
      return 0;
    }
    if (*link_cmd) {
      auto cfg = c.load();
      const auto n =
          stage_link_es(RunPaths{c.run}, c.path(props_flag, "properties"), c.path(layers_flag, "layers"), cfg);
      done("link-es", {{"persons", n}});
      return 0;
    }
    if (*join_cmd) {
      auto cfg = c.load();
      jf.apply(cfg);
      done("join", {{"interactions", stage_join(RunPaths{c.run}, cfg)}});
      return 0;
    }
    if (*annotate_cmd) {
      auto cfg = c.load();
      done("annotate", {{"interactions", stage_annotate(RunPaths{c.run}, c.path(layers_flag, "layers"), cfg)}});
      return 0;
    }
    if (*seg_cmd) {
      auto cfg = c.load();
      if (!jf.weighting.empty()) cfg.join.weighting = parse_weighting(jf.weighting);
      if (!estimator_flag.empty()) cfg.estimator = parse_estimator(estimator_flag);
      if (!variant_flag.empty()) cfg.es_variant = parse_es_variant(variant_flag);
      if (!region_flag.empty()) cfg.region = region_flag;
      warn_non_default(cfg);
      const auto est = stage_segregate(RunPaths{c.run}, cfg);
      for (const auto& j : est) std::cout << j.dump() << '\n';
      done("segregate", {{"regions", est.size()}});
      return exit_for(est);
    }
    if (*nsi_cmd) {
      auto cfg = c.load();
      const RunPaths run{c.run};
      auto in = open_input(run.persons(), "link-es");
      const auto persons = load_persons(in);
      auto regions = person_regions(persons);
      regions.insert(regions.begin(), "all");
      for (const auto& region : regions) {
        std::vector<double> es;
        std::vector<std::string> tract;
        for (const auto& p : persons)
          if (region == "all" || p.region_id == region) {
            es.push_back(p.es);
            tract.push_back(p.home_tract_id);
          }
        ojson j{{"region_id", region}, {"population", es.size()}};
        try {
          j["nsi"] = nsi(es, tract);
        } catch (const DataError& e) {
          j["nsi"] = nullptr;
          j["error"] = e.what();
        }
        j["config_hash"] = cfg.hash();
        auto f = open_output(run.dir / "nsi" / (file_safe(region) + ".json"));
        f << j.dump(2) << '\n';
        std::cout << j.dump() << '\n';
      }
      done("nsi");
      return 0;
    }
    if (*dec_cmd) {
      auto cfg = c.load();
      if (!region_flag.empty()) cfg.region = region_flag;
      const RunPaths run{c.run};
      if (robustness) {
        const auto rows = robustness_matrix(run, c.path(layers_flag, "layers"), cfg);
        const auto variants = robustness_variants();
        auto f = open_output(run.dir / "robustness.csv");
        f << "# config_hash=" << cfg.hash() << '\n' << "variant,region,rho,ok\n";
        for (const auto& r : rows) {
          f << r.variant << ',' << r.region << ',' << (r.ok ? std::to_string(r.rho) : "") << ',' << r.ok << '\n';
          std::cout << r.variant << ',' << r.region << ',' << r.rho << '\n';
        }
        // Correlation of each variant with the primary estimate across regions.
        std::map<std::string, std::map<std::string, double>> by_variant;
        for (const auto& r : rows)
          if (r.ok && r.region != "all") by_variant[r.variant][r.region] = r.rho;
        ojson summary = ojson::object();
        const auto& primary = by_variant["primary"];
        for (const auto& v : variants) {
          if (v.name == "primary") continue;
          std::vector<double> a, b;
          for (const auto& [region, rho] : by_variant[v.name]) {
            const auto it = primary.find(region);
            if (it == primary.end()) continue;
            a.push_back(it->second);
            b.push_back(rho);
          }
          if (a.size() >= 3) {
            try {
              summary[v.name] = spearman(a, b);
            } catch (const std::invalid_argument&) {
              summary[v.name] = nullptr;
            }
          } else {
            summary[v.name] = nullptr;
          }
        }
        auto s = open_output(run.dir / "robustness_summary.json");
        s << ojson{{"spearman_vs_primary", summary}, {"config_hash", cfg.hash()}}.dump(2) << '\n';
        done("decompose --robustness", {{"rows", rows.size()}});
        return 0;
      }
      if (by_flag.empty()) throw ConfigError("decompose needs --by or --robustness");
      warn_non_default(cfg);
      auto in = open_input(run.annotated(), "annotate");
      const auto set = read_annotated(in);
      std::vector<ojson> all;
      for (const auto& f : decomposition_filters(by_flag, set)) {
        auto est = stage_segregate(run, cfg, f.name, f.keep);
        for (auto& j : est) std::cout << j.dump() << '\n';
        all.insert(all.end(), est.begin(), est.end());
      }
      done("decompose", {{"estimates", all.size()}});
      return exit_for(all);
    }
    if (*bridge_cmd) {
      auto cfg = c.load();
      if (seed_flag) cfg.seed = *seed_flag;
      if (!region_flag.empty()) cfg.region = region_flag;
      const RunPaths run{c.run};
      auto in = open_input(run.persons(), "link-es");
      const auto persons = load_persons(in);
      const auto layer = load_layer(c.path(layers_flag, "layers"));
      std::vector<LatLon> homes;
      std::vector<double> es;
      for (const auto& p : persons)
        if (cfg.region == "all" || p.region_id == cfg.region) {
          homes.push_back(p.home());
          es.push_back(p.es_raw);
        }
      const auto measure = parse_measure(measure_flag);
      const auto hubs = category_flag.empty() ? hubs_from_layer(layer) : category_hubs(layer, category_flag);
      const auto res = bridging_index(homes, es, hubs, measure);
      ojson j{{"region_id", cfg.region}, {"bi", res.bi}, {"overall_diversity", res.overall},
              {"measure", to_string(measure)}, {"hubs", hubs.size()}, {"population", homes.size()}};
      ojson clusters = ojson::array();
      for (const auto& cl : res.clusters)
        clusters.push_back({{"hub_id", cl.hub_id}, {"size", cl.size}, {"diversity", cl.diversity}});
      j["clusters"] = clusters;
      if (ablate_trials > 0) {
        Ring ring;
        if (cfg.region != "all") {
          const auto idx = layer.find(cfg.region);
          if (!idx) throw DataError("region '" + cfg.region + "' not in layer");
          ring = layer.feature(*idx).coords;
        } else {
          const auto regions = layer.regions();
          if (regions.size() != 1) throw DataError("ablation needs --region when the layer has several regions");
          ring = layer.feature(regions.front()).coords;
        }
        const auto ab = ablate_random_hubs(homes, es, hubs.size(), ring, ablate_trials, cfg.seed, measure, cfg.threads);
        j["ablation"] = {{"trials", ablate_trials}, {"seed", cfg.seed}, {"mean", ab.mean}, {"p95", ab.p95},
                         {"exceeds_p95", res.bi > ab.p95}};
      }
      j["config_hash"] = cfg.hash();
      auto f = open_output(run.dir / "bridging" / (file_safe(cfg.region) + ".json"));
      f << j.dump(2) << '\n';
      std::cout << j.dump() << '\n';
      done("bridge");
      return 0;
    }
    if (*homophily_cmd) {
      auto cfg = c.load();
      if (seed_flag) cfg.seed = *seed_flag;
      if (!region_flag.empty()) cfg.region = region_flag;
      hc.seed = cfg.seed;
      hc.threads = cfg.threads;
      hc.kernel = parse_kernel(kernel_flag);
      hc.es_transform = parse_es_transform(transform_flag);
      const RunPaths run{c.run};
      auto in = open_input(run.persons(), "link-es");
      const auto persons = load_persons(in);
      std::vector<std::string> ids;
      std::vector<double> es;
      for (const auto& p : persons)
        if (cfg.region == "all" || p.region_id == cfg.region) {
          ids.push_back(p.person_id);
          es.push_back(p.es_raw);
        }
      const auto net = sample_homophily_network(es, hc);
      const auto est = network_is(net.edges, es, Estimator::naive);
      auto f = open_output(run.dir / "null_homophily.csv");
      f << "# config_hash=" << cfg.hash() << '\n';
      write_interactions(net.edges, ids, f);
      ojson prov{{"model", "homophily"},     {"degree", hc.degree_per_person}, {"H", hc.h},
                 {"kernel", kernel_flag},   {"es", transform_flag},           {"seed", hc.seed},
                 {"region_id", cfg.region}, {"persons", ids.size()},          {"edges", net.edges.size()},
                 {"complete_graph", net.complete_graph}, {"is_naive", est.rho}, {"config_hash", cfg.hash()}};
      auto p = open_output(run.dir / "null_homophily.json");
      p << prov.dump(2) << '\n';
      std::cout << prov.dump() << '\n';
      done("nullmodel homophily");
      return 0;
    }
    if (*config_model_cmd) {
      auto cfg = c.load();
      if (seed_flag) cfg.seed = *seed_flag;
      const RunPaths run{c.run};
      auto in = open_input(run.annotated(), "annotate");
      const auto set = read_annotated(in);
      const auto rw = configuration_by_category(set, cfg.seed);
      auto f = open_output(run.dir / "null_config_model.csv");
      f << "# config_hash=" << cfg.hash() << '\n';
      write_interactions(rw.edges, set.ids, f);
      ojson prov{{"model", "config-model"}, {"seed", cfg.seed}, {"edges", rw.edges.size()},
                 {"self_matches_left", rw.self_matches_left}, {"stubs_dropped", rw.stubs_dropped},
                 {"config_hash", cfg.hash()}};
      auto p = open_output(run.dir / "null_config_model.json");
      p << prov.dump(2) << '\n';
      std::cout << prov.dump() << '\n';
      done("nullmodel config-model");
      return 0;
    }
    if (*synth_cmd) {
      CityRecipe r;
      if (!recipe_flag.empty()) {
        std::ifstream f(recipe_flag);
        if (!f) throw ConfigError("cannot read recipe " + recipe_flag);
        try {
          r = recipe_from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(recipe_flag + ": " + e.what());
        }
      }
      if (synth_pop) r.population = *synth_pop;
      if (seed_flag) r.seed = *seed_flag;
      const auto files = generate(r, out_flag);
      done("synth", {{"pings", files.pings.string()}});
      return 0;
    }
    if (*sweep_cmd) {
      CityRecipe base;
      if (!recipe_flag.empty()) {
        std::ifstream f(recipe_flag);
        if (!f) throw ConfigError("cannot read recipe " + recipe_flag);
        base = recipe_from_json(nlohmann::json::parse(f));
      }
      const auto seed = seed_flag.value_or(base.seed);
      const auto spec = parse_sizes(pops_flag);
      if (spec.size() != 3 || spec[0] < 2 || spec[1] < spec[0] || spec[2] < 1)
        throw ConfigError("--populations expects lo,hi,count");
      const auto pops = log_spaced(spec[0], spec[1], spec[2]);
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!out_flag.empty()) {
        file = open_output(out_flag);
        out = &file;
      }
      if (sweep_null) {
        std::vector<std::vector<double>> regions;
        for (auto r : population_sweep_recipes(base, pops, SweepScaling{}, seed)) {
          r.visits_per_day = 0;  // only residents and their ES are needed
          const auto city = build_city(r);
          std::vector<double> es;
          for (const auto& p : city.persons) es.push_back(p.es);
          regions.push_back(std::move(es));
        }
        HomophilyConfig nc;
        nc.seed = seed;
        nc.threads = sweep_threads;
        nc.h = null_h;
        nc.min_person_draws = null_draws;
        const auto res = population_sweep_null(regions, nc);
        *out << "population,replicates,is\n";
        for (const auto& row : res.rows) *out << row.population << ',' << row.replicates << ',' << row.is << '\n';
        done("sweep --null", {{"spearman", res.spearman}});
        return 0;
      }
      std::vector<CityRecipe> recipes;
      if (sweep_hubs) {
        for (std::size_t k = 0; k < spec[2]; ++k)
          for (const auto placement : {HubPlacement::bridging, HubPlacement::segregating}) {
            CityRecipe r = base;
            r.hub_placement = placement;
            r.seed = derive_seed(seed, "hub-regime", k);
            r.region_id = to_string(placement) + "_" + std::to_string(k);
            recipes.push_back(r);
          }
      } else {
        recipes = population_sweep_recipes(base, pops, SweepScaling{}, seed);
      }
      const auto rows = sweep(recipes, sweep_threads);
      write_sweep_csv(rows, *out);
      if (!sweep_hubs && rows.size() >= 3) {
        std::vector<double> pop, is;
        for (const auto& row : rows) {
          pop.push_back(static_cast<double>(row.population));
          is.push_back(row.overall_is);
        }
        const double rs = spearman(pop, is);
        done("sweep", {{"spearman", rs}, {"p_value", correlation_p_value(rs, pop.size())}});
      } else {
        done("sweep", {{"rows", rows.size()}});
      }
      return 0;
    }
    if (*report_cmd) {
      std::vector<fs::path> files;
      for (const auto& s : report_inputs) {
        const fs::path p(s);
        if (fs::is_directory(p)) {
          std::vector<fs::path> found;
          for (const auto& e : fs::recursive_directory_iterator(p))
            if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
          std::sort(found.begin(), found.end());
          files.insert(files.end(), found.begin(), found.end());
        } else {
          require_file(p, "segregate");
          files.push_back(p);
        }
      }
      if (out_flag.empty()) {
        write_report(files, std::cout, force);
      } else {
        auto f = open_output(out_flag);
        write_report(files, f, force);
      }
      done("report", {{"files", files.size()}});
      return 0;
    }
    if (*all_cmd) {
      auto cfg = c.load();
      jf.apply(cfg);
      warn_non_default(cfg);
      const auto est = run_pipeline(c.path(pings_flag, "pings"), c.path(props_flag, "properties"),
                                    c.path(layers_flag, "layers"), RunPaths{c.run}, cfg);
      for (const auto& j : est) std::cout << j.dump() << '\n';
      done("run", {{"regions", est.size()}});
      return exit_for(est);
    }
  } catch (const ConfigError& e) {
    log("error", e.what());
    return 1;
  } catch (const DataError& e) {
    log("error", e.what());
    return 2;
  } catch (const DiagnosticError& e) {
    log("error", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    log("error", e.what());
    return 1;
  } catch (const std::exception& e) {
    log("error", e.what());
    return 2;
  }
  return 0;
}
