#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "interseg/annotate.hpp"
#include "interseg/crossings.hpp"
#include "interseg/home_es.hpp"
#include "interseg/ingest.hpp"
#include "interseg/segregation.hpp"

namespace interseg {

enum class EsVariant { zscore, percentile, percentile_within_region, tract_income };
EsVariant parse_es_variant(const std::string& s);
std::string to_string(EsVariant v);

/// Every tunable of the pipeline. Defaults are the primary configuration.
struct RunConfig {
  IngestConfig ingest;
  HomeConfig home;
  LinkConfig link;
  std::size_t crowded_max_others = 10;
  JoinConfig join;
  AnnotateConfig annotate;
  Estimator estimator = Estimator::mixed;
  EsVariant es_variant = EsVariant::zscore;
  std::string region = "all";
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  /// Canonical JSON of every setting that influences outputs (threads excluded).
  nlohmann::ordered_json to_json() const;
  /// Applies the keys present in `j` on top of the current values.
  void apply_json(const nlohmann::json& j);
  /// 16 hex digits of FNV-1a over the canonical JSON.
  std::string hash() const;
};

/// Standard file names inside a run directory.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path clean_pings() const { return dir / "pings.clean.csv"; }
  std::filesystem::path ingest_report() const { return dir / "ingest_report.json"; }
  std::filesystem::path homes() const { return dir / "homes.csv"; }
  std::filesystem::path persons() const { return dir / "persons.csv"; }
  std::filesystem::path interactions() const { return dir / "interactions.csv"; }
  std::filesystem::path annotated() const { return dir / "annotated.csv"; }
  std::filesystem::path estimates_dir() const { return dir / "segregation"; }
};

/// Throws DataError naming the stage to run first when `p` is missing.
void require_file(const std::filesystem::path& p, const std::string& producing_stage);

std::ofstream open_output(const std::filesystem::path& p);
std::ifstream open_input(const std::filesystem::path& p, const std::string& producing_stage);

/// Reads the `# config_hash=` line at the top of a CSV, if any.
std::string read_config_hash(const std::filesystem::path& p);

// ---- stages (file in, file out) ----

IngestReport stage_ingest(const std::filesystem::path& raw_pings, const RunPaths& out, const RunConfig& cfg);
std::size_t stage_infer_homes(const RunPaths& run, const RunConfig& cfg);
std::size_t stage_link_es(const RunPaths& run, const std::filesystem::path& properties,
                          const std::filesystem::path& layers, const RunConfig& cfg);
std::size_t stage_join(const RunPaths& run, const RunConfig& cfg);
std::size_t stage_annotate(const RunPaths& run, const std::filesystem::path& layers, const RunConfig& cfg);

/// Estimates for every requested region; writes one JSON per region.
std::vector<nlohmann::ordered_json> stage_segregate(const RunPaths& run, const RunConfig& cfg,
                                                    const std::string& filter_name = "all",
                                                    const EdgeFilter& filter = {});

/// Runs ingest through segregate.
std::vector<nlohmann::ordered_json> run_pipeline(const std::filesystem::path& raw_pings,
                                                 const std::filesystem::path& properties,
                                                 const std::filesystem::path& layers, const RunPaths& run,
                                                 const RunConfig& cfg);

// ---- in-memory helpers shared by the CLI and tests ----

/// ES per universe index for the chosen variant, standardized (NaN when the
/// person has no ES).
std::vector<double> es_for_universe(std::span<const std::string> ids, std::span<const Person> persons,
                                    EsVariant variant);
std::vector<double> es_raw_for_universe(std::span<const std::string> ids, std::span<const Person> persons);

/// Region ids found among persons, sorted.
std::vector<std::string> person_regions(std::span<const Person> persons);

/// Ego mask for residents of `region` ("all" selects everybody with ES).
std::vector<char> region_egos(std::span<const std::string> ids, std::span<const Person> persons,
                              const std::string& region);

nlohmann::ordered_json estimate_json(const std::string& region, const SegregationEstimate& e,
                                     const std::string& filter, const std::string& config_hash);

/// Named decomposition filters: hour buckets, POI categories, tract context
/// and road exclusion.
struct NamedFilter {
  std::string name;
  EdgeFilter keep;
};
std::vector<NamedFilter> decomposition_filters(const std::string& by, const AnnotatedSet& set);

/// One row of the robustness matrix: a name plus config edits. `rejoin` is true
/// when the variant changes the interaction network itself.
struct RobustnessVariant {
  std::string name;
  std::function<void(RunConfig&)> edit;
  EdgeFilter filter;
  bool rejoin = false;
};
std::vector<RobustnessVariant> robustness_variants();

struct RobustnessRow {
  std::string variant;
  std::string region;
  double rho = 0.0;
  bool ok = true;
};

/// Evaluates every variant for every region with at least `min_egos` egos;
/// variants that change the join re-run it from the cleaned pings.
std::vector<RobustnessRow> robustness_matrix(const RunPaths& run, const std::filesystem::path& layers,
                                             const RunConfig& cfg);

/// Merges per-region estimate JSON files into CSV rows. Throws DataError on
/// mismatched config hashes unless `force`.
void write_report(const std::vector<std::filesystem::path>& jsons, std::ostream& out, bool force);

}  // namespace interseg
