// Acceptance checks on synthetic data. Prints one PASS/FAIL line per
// criterion; exits nonzero on failure only with --strict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <CLI11.hpp>

#include "interseg/bridging.hpp"
#include "interseg/crossings.hpp"
#include "interseg/nullmodels.hpp"
#include "interseg/pipeline.hpp"
#include "interseg/random.hpp"
#include "interseg/segregation.hpp"
#include "interseg/stats.hpp"
#include "interseg/synthcity.hpp"

using namespace interseg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

std::size_t g_threads = 0;

// ---------------------------------------------------------------------------

using Key = std::tuple<PersonIndex, PersonIndex, std::int64_t, double, double>;

std::vector<Key> as_keys(const std::vector<Interaction>& v) {
  std::vector<Key> out;
  out.reserve(v.size());
  for (const auto& x : v) out.emplace_back(x.i, x.j, x.t, x.lat, x.lon);
  std::sort(out.begin(), out.end());
  return out;
}

Outcome join_correctness() {
  const double dists[] = {10, 25, 50};
  const std::int64_t times[] = {60, 120, 300};
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, total_pairs = 0, max_pings = 0;
  for (std::uint64_t f = 0; f < 100; ++f) {
    Rng rng(derive_seed(2024, "join-fixture", f));
    const std::size_t persons = 2 + uniform_index(rng, 60);
    const std::size_t per = 1 + uniform_index(rng, 2000 / persons);
    const double side_m = std::exp(uniform(rng, std::log(50.0), std::log(5000.0)));
    const double window_s = std::exp(uniform(rng, std::log(300.0), std::log(6 * 3600.0)));
    const LocalProjection proj({uniform(rng, -60, 60), uniform(rng, -179, 179)});
    PingStoreBuilder b;
    std::size_t n = 0;
    for (std::size_t p = 0; p < persons; ++p)
      for (std::size_t k = 0; k < per; ++k) {
        const auto at = proj.inverse(uniform(rng, 0, side_m), uniform(rng, 0, side_m));
        b.add("p" + std::to_string(p),
              Fix{1700000000 + static_cast<std::int64_t>(uniform(rng, 0, window_s)), at.lat, at.lon, 5.0f});
        ++n;
      }
    max_pings = std::max(max_pings, n);
    const auto store = std::move(b).build();
    JoinConfig cfg;
    cfg.dist_m = dists[f % 3];
    cfg.time_s = times[(f / 3) % 3];
    cfg.collapse_repeats = false;
    cfg.threads = g_threads;
    const auto brute = as_keys(join_bruteforce(store, cfg));
    const auto fast = as_keys(join_indexed(store, cfg));
    total_pairs += brute.size();
    if (brute != fast) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 120.0,
          "100 fixtures (max " + std::to_string(max_pings) + " pings), " + std::to_string(total_pairs) +
              " crossings, " + std::to_string(mismatches) + " mismatching fixtures, " + fmt(secs, 3) + " s (limit 120 s)"};
}

// ---------------------------------------------------------------------------

// x standardized exactly; u orthogonal to x with exact sample variance var_u.
void matched_effects(Rng& rng, std::size_t n, double var_u, std::vector<double>& x, std::vector<double>& u) {
  x.resize(n);
  u.resize(n);
  for (auto& v : x) v = standard_normal(rng);
  for (auto& v : u) v = standard_normal(rng);
  x = standardize(x);
  const double mu = mean(u);
  for (auto& v : u) v -= mu;
  double xu = 0.0;
  for (std::size_t k = 0; k < n; ++k) xu += x[k] * u[k];
  for (std::size_t k = 0; k < n; ++k) u[k] -= xu / static_cast<double>(n) * x[k];
  const double su = std::sqrt(variance(u));
  for (auto& v : u) v *= std::sqrt(var_u) / su;
}

Outcome mixed_recovery() {
  double worst = 0.0;
  std::string per_rho;
  for (const double rho : {0.1, 0.3, 0.6, 0.9}) {
    double rho_worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(derive_seed(7, "recovery", static_cast<std::uint64_t>(rho * 100), s));
      std::vector<double> x, u;
      matched_effects(rng, 2000, 1.0 - rho * rho, x, u);
      std::vector<EgoGroup> groups(2000);
      for (std::size_t g = 0; g < groups.size(); ++g) {
        groups[g].ego = static_cast<PersonIndex>(g);
        groups[g].x = x[g];
        for (int k = 0; k < 30; ++k) groups[g].ys.push_back(rho * x[g] + u[g] + standard_normal(rng));
      }
      const auto est = fit_mixed(groups);
      const double err = est.converged ? std::abs(est.rho - rho) : 1.0;
      rho_worst = std::max(rho_worst, err);
    }
    worst = std::max(worst, rho_worst);
    per_rho += " rho=" + fmt(rho, 2) + ":" + fmt(rho_worst, 3);
  }
  return {worst < 0.03, "max |est-truth| over 10 seeds:" + per_rho + " (limit 0.03)"};
}

// ---------------------------------------------------------------------------

Outcome bias_reproduction() {
  const double a = 0.5, var_u = 0.25;
  double gold = 0.0, naive5 = 0.0, mixed5 = 0.0;
  const int reps = 10;
  for (int s = 0; s < reps; ++s) {
    Rng rng(derive_seed(11, "bias", static_cast<std::uint64_t>(s)));
    std::vector<double> x, u;
    matched_effects(rng, 2000, var_u, x, u);
    std::vector<EgoGroup> full(2000), few(2000);
    for (std::size_t g = 0; g < full.size(); ++g) {
      full[g].ego = few[g].ego = static_cast<PersonIndex>(g);
      full[g].x = few[g].x = x[g];
      for (int k = 0; k < 500; ++k) full[g].ys.push_back(a * x[g] + u[g] + standard_normal(rng));
      few[g].ys.assign(full[g].ys.begin(), full[g].ys.begin() + 5);
    }
    gold += naive_corr(full) / reps;
    naive5 += naive_corr(few) / reps;
    mixed5 += fit_mixed(few).rho / reps;
  }
  const double rn = naive5 / gold, rm = mixed5 / gold;
  return {rn < 0.9 && rm >= 0.95 && rm <= 1.05,
          "gold(naive, 500 alters)=" + fmt(gold) + ", 5 alters: naive/gold=" + fmt(rn) + " (< 0.9), mixed/gold=" +
              fmt(rm) + " (in [0.95, 1.05]); means over " + std::to_string(reps) + " seeds"};
}

// ---------------------------------------------------------------------------

Outcome nsi_equivalence() {
  std::vector<double> ns, ms;
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    CityRecipe rc;
    rc.population = 400 + 100 * static_cast<std::size_t>(r);
    rc.seed = 100 + static_cast<std::uint64_t>(r);
    rc.tract_pattern = TractPattern::random;
    rc.visits_per_day = 0;
    const auto persons = city_persons(build_city(rc));
    std::vector<double> es;
    std::vector<std::string> tracts;
    for (const auto& p : persons) {
      es.push_back(p.es);
      tracts.push_back(p.home_tract_id);
    }
    const double n = nsi(es, tracts);
    const double m = fit_mixed(complete_tract_groups(es, tracts)).rho;
    ns.push_back(n);
    ms.push_back(m);
    worst = std::max(worst, std::abs(n - m));
  }
  const double sp = spearman(ns, ms), pe = pearson(ns, ms);
  const bool pass = worst < 1e-6 && std::abs(sp - 1.0) < 1e-9 && std::abs(pe - 1.0) < 1e-9;
  return {pass, "20 regions: max |mixed-nsi|=" + fmt(worst, 3) + " (limit 1e-6), Spearman=" + fmt(sp, 6) +
                    ", Pearson=" + fmt(pe, 6) + " (both must be 1.0)"};
}

// ---------------------------------------------------------------------------

Outcome bi_edge_cases() {
  const LocalProjection proj({40.0, -75.0});
  std::vector<LatLon> homes;
  std::vector<double> es;
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    homes.push_back(proj.inverse(uniform(rng, 0, 3000), uniform(rng, 0, 3000)));
    es.push_back(500 + uniform(rng, 0, 4000));
  }
  const std::vector<Hub> one{{"h0", proj.inverse(1500, 1500)}};
  const double bi1 = bridging_index(homes, es, one).bi;

  // two distant clusters, each homogeneous in ES
  std::vector<LatLon> h2;
  std::vector<double> e2;
  for (int k = 0; k < 20; ++k) {
    h2.push_back(proj.inverse(uniform(rng, 0, 200), uniform(rng, 0, 200)));
    e2.push_back(1000);
    h2.push_back(proj.inverse(8000 + uniform(rng, 0, 200), uniform(rng, 0, 200)));
    e2.push_back(3000);
  }
  const std::vector<Hub> two{{"a", proj.inverse(100, 100)}, {"b", proj.inverse(8100, 100)}};
  const double bi0 = bridging_index(h2, e2, two).bi;

  const double g = gini(std::vector<double>{1000, 3000});
  // pairwise form: (|1000-3000| + |3000-1000|) / (2 * 2^2 * 2000)
  const double pairwise = (2000.0 + 2000.0) / (2.0 * 4.0 * 2000.0);
  const bool pass = bi1 == 1.0 && bi0 == 0.0 && g == 0.25 && pairwise == 0.25;
  return {pass, "K=1 BI=" + fmt(bi1, 17) + ", homogeneous BI=" + fmt(bi0, 17) + ", Gini([1000,3000])=" + fmt(g, 17) +
                    " (pairwise oracle " + fmt(pairwise, 17) + ")"};
}

// ---------------------------------------------------------------------------

Outcome mechanism_signs() {
  CityRecipe base;
  base.days = 3;
  const auto pops = log_spaced(300, 3000, 20);
  const auto rows = sweep(population_sweep_recipes(base, pops, SweepScaling{}, 11), g_threads);
  std::vector<double> pop, is;
  for (const auto& r : rows) {
    pop.push_back(static_cast<double>(r.population));
    is.push_back(r.overall_is);
  }
  const double rs = spearman(pop, is);
  const double p = correlation_p_value(rs, pop.size());

  CityRecipe hub;
  hub.population = 2000;
  hub.days = 2;
  hub.distance_scale_m = 300;
  hub.gamma = 1.0;
  hub.favorites = 1;
  hub.categories = {{"restaurant", 64}, {"grocery", 32}};
  int wins = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    CityRecipe b = hub, s = hub;
    b.seed = s.seed = derive_seed(5, "pair", k);
    b.hub_placement = HubPlacement::bridging;
    s.hub_placement = HubPlacement::segregating;
    const auto rb = summarize_city(build_city(b), g_threads);
    const auto rsg = summarize_city(build_city(s), g_threads);
    wins += rb.overall_is < rsg.overall_is;
  }
  return {rs > 0 && p < 0.05 && wins >= 18,
          "population sweep over " + std::to_string(rows.size()) + " regions: Spearman=" + fmt(rs) + " p=" + fmt(p, 3) +
              "; IS(bridging) < IS(segregating) in " + std::to_string(wins) + "/20 pairs (need 18)"};
}

// ---------------------------------------------------------------------------

Outcome null_signs() {
  CityRecipe base;
  base.visits_per_day = 0;
  std::vector<std::vector<double>> regions;
  for (const auto& r : population_sweep_recipes(base, log_spaced(1000, 100000, 20), SweepScaling{}, 11)) {
    const auto city = build_city(r);
    std::vector<double> es;
    for (const auto& p : city.persons) es.push_back(p.es);
    regions.push_back(std::move(es));
  }
  HomophilyConfig hc;
  hc.seed = 3;
  hc.threads = g_threads;
  hc.min_person_draws = 30000;
  hc.h = 1.0;
  const auto h1 = population_sweep_null(regions, hc, Estimator::naive);
  hc.h = 0.0;
  const auto h0 = population_sweep_null(regions, hc, Estimator::naive);
  double worst0 = 0.0;
  for (const auto& r : h0.rows) worst0 = std::max(worst0, std::abs(r.is));

  CityRecipe venue_city;
  venue_city.days = 3;
  const auto city = build_city(venue_city);
  const auto set = stay_interactions(city, 50.0, g_threads);
  std::vector<double> es;
  for (const auto& p : city.persons) es.push_back(p.es);
  std::vector<Interaction> venue_edges;
  for (std::size_t k = 0; k < set.edges.size(); ++k)
    if (set.ann[k].poi_category != LabelPool::kNone) venue_edges.push_back(set.edges[k]);
  const auto rewired = configuration_by_category(set, 9);
  const double before = network_is(venue_edges, es, Estimator::naive).rho;
  const double after = network_is(rewired.edges, es, Estimator::naive).rho;
  const double reduction = (before - after) / before;

  const bool pass = h1.spearman <= 0 && worst0 < 0.05 && reduction > 0.5;
  return {pass, "H=1 Spearman(pop, IS)=" + fmt(h1.spearman) + " (<= 0); H=0 max|IS|=" + fmt(worst0, 3) +
                    " (< 0.05) over 20 regions of 1e3..1e5; config model IS " + fmt(before) + " -> " + fmt(after) +
                    " (reduction " + fmt(100 * reduction, 3) + "%, need > 50%)"};
}

// ---------------------------------------------------------------------------

Outcome ablation() {
  CityRecipe r;
  r.population = 3000;
  r.hub_placement = HubPlacement::bridging;
  r.visits_per_day = 0;
  r.seed = 17;
  const auto city = build_city(r);
  std::vector<LatLon> homes;
  std::vector<double> es;
  for (const auto& p : city.persons) {
    homes.push_back(p.home);
    es.push_back(p.es);
  }
  const double actual = bridging_index(homes, es, city.hubs).bi;
  const auto a = ablate_random_hubs(homes, es, city.hubs.size(), city.region_ring, 1000, 99, DiversityMeasure::gini,
                                    g_threads);
  const auto b = ablate_random_hubs(homes, es, city.hubs.size(), city.region_ring, 1000, 99, DiversityMeasure::gini,
                                    g_threads);
  const bool same = a.values == b.values;
  return {actual > a.p95 && same, "bridged fixture with " + std::to_string(city.hubs.size()) + " hubs: BI=" +
                                      fmt(actual) + ", random-hub p95=" + fmt(a.p95) + " (mean " + fmt(a.mean) +
                                      ", 1000 trials), rerun identical=" + (same ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Outcome decomposition() {
  CityRecipe r = recipe_from_json(nlohmann::json::parse(
      R"({"population":2000,"days":3,"local_venues_per_tract":4,"local_visit_prob":0.5,"local_gamma":4,"gamma":0,"tract_pattern":"random"})"));
  const auto city = build_city(r);
  const auto set = stay_interactions(city, 50.0, g_threads);
  std::vector<double> es;
  for (const auto& p : city_persons(city)) es.push_back(p.es);
  auto fit = [&](std::optional<TractContext> c) {
    return is_decomposed(
               set, es, {},
               [c](const Interaction&, const Annotation& a, const LabelPool&) {
                 return !c || classify_tract_context(a) == *c;
               },
               Weighting::dedup_pairs)
        .rho;
  };
  const double in = fit(TractContext::both_in_home_tract);
  const double all = fit(std::nullopt);
  const double out = fit(TractContext::both_out);
  return {in > all && all > out,
          "IS both_in_home_tract=" + fmt(in) + " > overall=" + fmt(all) + " > both_out=" + fmt(out)};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome end_to_end(const fs::path& scratch) {
  CityRecipe r;
  r.population = 10000;
  r.tracts_per_side = 6;
  r.categories = {{"restaurant", 240}, {"grocery", 80}};
  r.seed = 2024;
  fs::remove_all(scratch);
  const auto files = generate(r, scratch / "city");
  std::size_t pings = 0;
  {
    std::ifstream f(files.pings);
    std::string line;
    while (std::getline(f, line)) ++pings;
    if (pings > 0) --pings;
  }
  RunConfig cfg;
  cfg.threads = g_threads;
  double secs[2];
  for (int k = 0; k < 2; ++k) {
    const auto t0 = Clock::now();
    run_pipeline(files.pings, files.properties, files.layers, RunPaths{scratch / ("run" + std::to_string(k))}, cfg);
    secs[k] = seconds_since(t0);
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(scratch / "run0")) {
    if (!e.is_regular_file()) continue;
    const auto other = scratch / "run1" / fs::relative(e.path(), scratch / "run0");
    ++compared;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
  }
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  fs::remove_all(scratch);
  return {differing == 0 && compared > 0 && secs[0] < 600 && secs[1] < 600,
          std::to_string(r.population) + " persons, " + std::to_string(pings) + " pings: runs took " + fmt(secs[0], 4) +
              " s and " + fmt(secs[1], 4) + " s on " + std::to_string(cores) + " core(s) (limit 600 s); " +
              std::to_string(compared) + " output files, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  bool strict = false;
  std::vector<int> only;
  std::string scratch = (fs::temp_directory_path() / "interseg_acceptance").string();
  app.add_flag("--strict", strict, "exit nonzero when any criterion fails");
  app.add_option("--only", only, "run only these criteria (1-10)");
  app.add_option("--threads", g_threads, "worker threads (0 = all cores)");
  app.add_option("--scratch", scratch, "scratch directory for the end-to-end run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"join correctness", join_correctness},
      {"mixed-model recovery", mixed_recovery},
      {"naive bias reproduction", bias_reproduction},
      {"NSI equivalence", nsi_equivalence},
      {"BI edge cases", bi_edge_cases},
      {"mechanism sign checks", mechanism_signs},
      {"null-model sign checks", null_signs},
      {"hub ablation", ablation},
      {"homophily/visitor decomposition", decomposition},
      {"end-to-end determinism and performance", [&] { return end_to_end(scratch); }},
  };

  int failed = 0, ran = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    ++ran;
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << o.detail << " ["
              << fmt(seconds_since(t0), 3) << " s]" << std::endl;
  }
  std::cout << ran - failed << "/" << ran << " criteria passed" << std::endl;
  return strict && failed > 0 ? 1 : 0;
}
