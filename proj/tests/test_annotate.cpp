#include <gtest/gtest.h>

#include <sstream>

#include "interseg/annotate.hpp"
#include "interseg/error.hpp"
#include "interseg/geo.hpp"
#include "interseg/layers.hpp"

using namespace interseg;

namespace {

const LocalProjection kProj({40.0, -75.0});

// Axis-aligned rectangle given in local meters.
Feature rect(const std::string& id, const std::string& cat, double x0, double y0, double x1, double y1) {
  Feature f;
  f.id = id;
  f.category = cat;
  for (auto [x, y] : {std::pair{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}) {
    const auto p = kProj.inverse(x, y);
    f.coords.push_back({p.lon, p.lat});
  }
  return f;
}

Feature road(const std::string& id, double x0, double y0, double x1, double y1) {
  Feature f;
  f.id = id;
  f.category = "road";
  f.kind = FeatureKind::polyline;
  for (auto [x, y] : {std::pair{x0, y0}, {x1, y1}}) {
    const auto p = kProj.inverse(x, y);
    f.coords.push_back({p.lon, p.lat});
  }
  return f;
}

GeoLayer test_layer() {
  std::vector<Feature> fs;
  fs.push_back(rect("T1", "tract", 0, 0, 1000, 1000));
  fs.push_back(rect("T2", "tract", 1000, 0, 2000, 1000));
  fs.push_back(rect("H1", "hub", 1200, 200, 1800, 800));
  auto poi = rect("P1", "poi:restaurant", 1400, 400, 1500, 500);
  poi.parent_id = "H1";
  fs.push_back(poi);
  fs.push_back(rect("P2", "poi:grocery", 1600, 600, 1700, 700));
  fs.push_back(rect("P3", "poi:grocery", 1620, 620, 1680, 680));
  fs.push_back(road("R1", 0, 1500, 2000, 1500));
  return GeoLayer(std::move(fs));
}

Person person_at(const std::string& id, double x, double y, const std::string& tract) {
  Person p;
  p.person_id = id;
  const auto h = kProj.inverse(x, y);
  p.home_lat = h.lat;
  p.home_lon = h.lon;
  p.home_tract_id = tract;
  return p;
}

Interaction edge_at(PersonIndex i, PersonIndex j, double x, double y, std::int64_t t = 1700000000) {
  const auto p = kProj.inverse(x, y);
  return {i, j, t, p.lat, p.lon, 0};
}

}  // namespace

TEST(HourBucket, Boundaries) {
  const std::int64_t day = 1704067200;
  EXPECT_EQ(hour_bucket(day + 30 * 60, 0.0), 0);
  EXPECT_EQ(hour_bucket(day + 23 * 3600 + 59 * 60, 0.0), 7);
  EXPECT_EQ(hour_bucket(day + 12 * 3600, 0.0), 4);
  EXPECT_EQ(hour_bucket(day + 2 * 3600 + 3599, 0.0), 0);
  EXPECT_EQ(hour_bucket(day + 3 * 3600, 0.0), 1);
  // 01:00 UTC is 20:00 the previous day at UTC-5
  EXPECT_EQ(hour_bucket(day + 3600, -5.0), 6);
}

TEST(TractContext, ThreeCases) {
  Annotation a;
  a.in_home_tract_i = a.in_home_tract_j = true;
  EXPECT_EQ(classify_tract_context(a), TractContext::both_in_home_tract);
  a.in_home_tract_j = false;
  EXPECT_EQ(classify_tract_context(a), TractContext::one_out);
  a.in_home_tract_i = false;
  EXPECT_EQ(classify_tract_context(a), TractContext::both_out);
}

TEST(Layer, PointInPolygonAndNesting) {
  const auto layer = test_layer();
  const auto p = kProj.inverse(1450, 450);
  const auto poi = layer.poi_at(p.lat, p.lon);
  ASSERT_TRUE(poi);
  EXPECT_EQ(layer.feature(*poi).id, "P1");
  // nested grocery POIs: the smaller one wins
  const auto q = kProj.inverse(1650, 650);
  EXPECT_EQ(layer.feature(*layer.poi_at(q.lat, q.lon)).id, "P3");
  const auto out = kProj.inverse(500, 1200);
  EXPECT_FALSE(layer.tract_at(out.lat, out.lon));
  EXPECT_EQ(layer.pois_of("grocery").size(), 2u);
}

TEST(Layer, RoadProximityInclusive) {
  const auto layer = test_layer();
  const auto near = kProj.inverse(500, 1515);
  const auto far = kProj.inverse(500, 1525);
  EXPECT_TRUE(layer.near_road(near.lat, near.lon, 20.0));
  EXPECT_FALSE(layer.near_road(far.lat, far.lon, 20.0));
}

TEST(Layer, ValidationErrors) {
  auto open = rect("T", "tract", 0, 0, 10, 10);
  open.coords.pop_back();
  EXPECT_THROW(GeoLayer({open}), LayerError);

  Feature bow;
  bow.id = "B";
  bow.category = "tract";
  for (auto [x, y] : {std::pair{0.0, 0.0}, {10.0, 10.0}, {10.0, 0.0}, {0.0, 10.0}, {0.0, 0.0}}) {
    const auto p = kProj.inverse(x, y);
    bow.coords.push_back({p.lon, p.lat});
  }
  EXPECT_THROW(GeoLayer({bow}), LayerError);

  EXPECT_THROW(GeoLayer({rect("A", "tract", 0, 0, 100, 100), rect("B", "tract", 50, 50, 150, 150)}), LayerError);

  auto orphan = rect("P", "poi:cafe", 0, 0, 10, 10);
  orphan.parent_id = "nope";
  EXPECT_THROW(GeoLayer({orphan}), LayerError);

  EXPECT_THROW(GeoLayer({rect("A", "tract", 0, 0, 10, 10), rect("A", "hub", 20, 20, 30, 30)}), LayerError);
}

TEST(Layer, JsonLinesRoundTrip) {
  const auto layer = test_layer();
  std::ostringstream out;
  layer.write(out);
  std::istringstream in(out.str());
  const auto back = GeoLayer::load(in);
  ASSERT_EQ(back.features().size(), layer.features().size());
  EXPECT_EQ(back.hubs().size(), 1u);
  EXPECT_EQ(back.feature(*back.find("P1")).parent_id, "H1");
}

TEST(Annotate, LabelsEveryField) {
  const auto layer = test_layer();
  const std::vector<Person> persons{person_at("a", 100, 100, "T1"), person_at("b", 130, 100, "T1"),
                                    person_at("c", 1300, 300, "T2")};
  const std::vector<std::string> ids{"a", "b", "c", "ghost"};
  const auto lookup = person_lookup(ids, persons);
  ASSERT_EQ(lookup[3], nullptr);

  std::vector<Interaction> edges{
      edge_at(0, 1, 115, 100),     // at both homes, in both home tracts
      edge_at(0, 2, 1450, 450),    // inside P1, under hub H1; c is in its home tract
      edge_at(1, 2, 1650, 650),    // inside P3 only, hub by containment
      edge_at(0, 3, 500, 1510),    // near the road, nobody at home
      edge_at(1, 2, 1100, 900),    // tract T2, no POI or hub
  };
  const auto set = annotate_all(edges, ids, lookup, layer);
  ASSERT_EQ(set.size(), 5u);

  const auto& a0 = set.ann[0];
  EXPECT_TRUE(a0.at_home_i && a0.at_home_j);
  EXPECT_TRUE(a0.same_home());
  EXPECT_EQ(classify_tract_context(a0), TractContext::both_in_home_tract);
  EXPECT_EQ(a0.poi, LabelPool::kNone);

  const auto& a1 = set.ann[1];
  EXPECT_FALSE(a1.at_home_i);
  EXPECT_EQ(set.labels.str(a1.poi), "P1");
  EXPECT_EQ(set.labels.str(a1.poi_category), "restaurant");
  EXPECT_EQ(set.labels.str(a1.hub), "H1");
  EXPECT_EQ(classify_tract_context(a1), TractContext::one_out);

  const auto& a2 = set.ann[2];
  EXPECT_EQ(set.labels.str(a2.poi), "P3");
  EXPECT_EQ(set.labels.str(a2.hub), "H1");

  const auto& a3 = set.ann[3];
  EXPECT_TRUE(a3.on_road);
  EXPECT_FALSE(a3.at_home_j);
  EXPECT_EQ(classify_tract_context(a3), TractContext::both_out);

  const auto& a4 = set.ann[4];
  EXPECT_EQ(a4.hub, LabelPool::kNone);
  EXPECT_FALSE(a4.on_road);
  EXPECT_EQ(classify_tract_context(a4), TractContext::one_out);
}

TEST(Annotate, HomeRadiusInclusive) {
  const auto layer = test_layer();
  const std::vector<Person> persons{person_at("a", 100, 100, "T1"), person_at("b", 900, 900, "T1")};
  const std::vector<std::string> ids{"a", "b"};
  const auto lookup = person_lookup(ids, persons);
  const auto set = annotate_all({edge_at(0, 1, 149.9, 100), edge_at(0, 1, 150.5, 100)}, ids, lookup, layer);
  EXPECT_TRUE(set.ann[0].at_home_i);
  EXPECT_FALSE(set.ann[1].at_home_i);
}

TEST(Annotate, CsvRoundTripAndFilter) {
  const auto layer = test_layer();
  const std::vector<Person> persons{person_at("a", 100, 100, "T1"), person_at("b", 130, 100, "T1"),
                                    person_at("c", 1300, 300, "T2")};
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto set = annotate_all({edge_at(0, 1, 115, 100), edge_at(0, 2, 1450, 450)}, ids,
                                person_lookup(ids, persons), layer);
  std::ostringstream out;
  write_annotated(set, out);
  std::istringstream in(out.str());
  const auto back = read_annotated(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.ids[back.edges[1].j], "c");
  EXPECT_EQ(back.labels.str(back.ann[1].hub), "H1");
  EXPECT_TRUE(back.ann[0].same_home());

  const auto only_poi = filter_set(back, [](const Interaction&, const Annotation& a, const LabelPool&) {
    return a.poi != LabelPool::kNone;
  });
  ASSERT_EQ(only_poi.size(), 1u);
  EXPECT_EQ(only_poi.labels.str(only_poi.ann[0].poi), "P1");
}
