#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"
#include "interseg/geo.hpp"
#include "interseg/pipeline.hpp"
#include "interseg/synthcity.hpp"

using namespace interseg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "interseg_pipeline_test";
    fs::remove_all(root_);
    CityRecipe r;
    r.population = 240;
    r.tracts_per_side = 3;
    r.categories = {{"restaurant", 12}, {"grocery", 4}};
    r.seed = 8;
    files_ = generate(r, root_ / "city");
    city_ = build_city(r);
    RunConfig cfg;
    cfg.threads = 2;
    estimates_ = run_pipeline(files_.pings, files_.properties, files_.layers, RunPaths{root_ / "run"}, cfg);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path root_;
  static GeneratedFiles files_;
  static City city_;
  static std::vector<nlohmann::ordered_json> estimates_;
};

fs::path PipelineTest::root_;
GeneratedFiles PipelineTest::files_;
City PipelineTest::city_;
std::vector<nlohmann::ordered_json> PipelineTest::estimates_;

}  // namespace

TEST_F(PipelineTest, HomesRecoveredWithinFiftyMeters) {
  std::ifstream in(RunPaths{root_ / "run"}.homes());
  std::string line;
  ASSERT_TRUE(csv::next_data_line(in, line));
  csv::Header h(line);
  const auto cid = h.require("person_id"), clat = h.require("home_lat"), clon = h.require("home_lon");
  std::map<std::string, LatLon> truth;
  for (const auto& p : city_.persons) truth[p.id] = p.home;
  std::size_t within = 0;
  std::vector<std::string_view> cols;
  while (csv::next_data_line(in, line)) {
    csv::split(line, cols);
    const LatLon got{*csv::parse_double(cols[clat]), *csv::parse_double(cols[clon])};
    if (haversine_m(got, truth.at(std::string(cols[cid]))) <= 50.0) ++within;
  }
  EXPECT_GE(static_cast<double>(within), 0.99 * static_cast<double>(city_.persons.size()));
}

TEST_F(PipelineTest, EstimatesWellFormed) {
  ASSERT_FALSE(estimates_.empty());
  EXPECT_EQ(estimates_[0]["region_id"], "all");
  for (const auto& e : estimates_) {
    if (!e.contains("rho")) continue;
    EXPECT_GE(e["rho"].get<double>(), -1.0);
    EXPECT_LE(e["rho"].get<double>(), 1.0);
    EXPECT_EQ(e["config_hash"], RunConfig{}.hash());
  }
}

TEST_F(PipelineTest, RerunIsByteIdentical) {
  const RunPaths first{root_ / "run"};
  const RunPaths second{root_ / "run2"};
  RunConfig cfg;
  cfg.threads = 1;
  run_pipeline(files_.pings, files_.properties, files_.layers, second, cfg);
  for (const auto& name : {"pings.clean.csv", "homes.csv", "persons.csv", "interactions.csv", "annotated.csv",
                           "segregation/all__all.json"})
    EXPECT_EQ(slurp(first.dir / name), slurp(second.dir / name)) << name;
}

TEST_F(PipelineTest, OutputsCarryConfigHash) {
  EXPECT_EQ(read_config_hash(RunPaths{root_ / "run"}.interactions()), RunConfig{}.hash());
}

TEST(Pipeline, MissingUpstreamNamesStage) {
  const auto dir = fs::temp_directory_path() / "interseg_empty_run";
  fs::remove_all(dir);
  try {
    stage_join(RunPaths{dir}, RunConfig{});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'ingest'"), std::string::npos) << e.what();
  }
}

TEST(Config, HashTracksSettings) {
  RunConfig a, b;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.threads = 7;
  EXPECT_EQ(a.hash(), b.hash());
  b.apply_json(nlohmann::json::parse(R"({"dist_m": 25})"));
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_DOUBLE_EQ(b.join.dist_m, 25.0);
  EXPECT_THROW(b.apply_json(nlohmann::json::parse(R"({"dist_m": -1})")), ConfigError);
  EXPECT_THROW(b.apply_json(nlohmann::json::parse(R"({"estimator": "bogus"})")), ConfigError);
}

TEST(Report, HashMismatchAndForce) {
  const auto dir = fs::temp_directory_path() / "interseg_report_test";
  fs::create_directories(dir);
  const auto a = dir / "a.json", b = dir / "b.json";
  std::ofstream(a) << R"({"region_id":"r1","rho":0.5,"n_egos":10,"converged":true,"config_hash":"aaaa"})";
  std::ofstream(b) << R"({"region_id":"r2","rho":0.25,"n_egos":12,"converged":true,"config_hash":"bbbb"})";
  std::ostringstream out;
  EXPECT_THROW(write_report({a, b}, out, false), DataError);
  std::ostringstream forced;
  write_report({a, b}, forced, true);
  std::istringstream lines(forced.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 3);
  std::ostringstream empty;
  write_report({}, empty, false);
  EXPECT_EQ(empty.str(), "region_id,population,venue_count,cov,venue_is,overall_is,bi,nsi,filter,converged,config_hash\n");
  fs::remove_all(dir);
}
