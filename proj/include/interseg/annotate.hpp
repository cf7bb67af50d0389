#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "interseg/crossings.hpp"
#include "interseg/home_es.hpp"
#include "interseg/layers.hpp"

namespace interseg {

/// Interned label strings (POI ids, categories, hub ids).
class LabelPool {
 public:
  static constexpr std::int32_t kNone = -1;

  std::int32_t intern(const std::string& s);
  std::int32_t lookup(const std::string& s) const;
  const std::string& str(std::int32_t id) const { return labels_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct Annotation {
  bool at_home_i = false;
  bool at_home_j = false;
  bool in_home_tract_i = false;
  bool in_home_tract_j = false;
  bool on_road = false;
  std::int8_t hour_bucket = 0;
  std::int32_t poi = LabelPool::kNone;
  std::int32_t poi_category = LabelPool::kNone;
  std::int32_t hub = LabelPool::kNone;

  bool same_home() const { return at_home_i && at_home_j; }
};

/// Interactions with their annotations. `ids` names the person universe the
/// interaction indices refer to.
struct AnnotatedSet {
  std::vector<std::string> ids;
  std::vector<Interaction> edges;
  std::vector<Annotation> ann;
  LabelPool labels;

  std::size_t size() const { return edges.size(); }
  std::unordered_map<std::string, PersonIndex> id_index() const;
};

struct AnnotateConfig {
  double home_radius_m = 50.0;
  double road_dist_m = 20.0;
  double utc_offset_hours = 0.0;
  std::size_t threads = 0;
};

/// 3-hour local window, 0..7.
int hour_bucket(std::int64_t t_utc, double utc_offset_hours);

/// persons_by_index[p] is the Person for universe index p, or nullptr when the
/// person has no inferred home.
std::vector<const Person*> person_lookup(std::span<const std::string> ids, std::span<const Person> persons);

/// Labels every interaction: home proximity and home-tract containment of the
/// interaction point for both endpoints, smallest containing POI, hub (the POI's
/// parent hub, else the smallest containing hub polygon), road proximity and
/// hour bucket.
AnnotatedSet annotate_all(std::vector<Interaction> edges, std::vector<std::string> ids,
                          std::span<const Person* const> persons_by_index, const GeoLayer& layer,
                          const AnnotateConfig& cfg = {});

enum class TractContext { both_in_home_tract, one_out, both_out };

TractContext classify_tract_context(const Annotation& a);
std::string to_string(TractContext c);

void write_annotated(const AnnotatedSet& set, std::ostream& out);
AnnotatedSet read_annotated(std::istream& in);

/// Predicate over one annotated interaction.
using EdgeFilter = std::function<bool(const Interaction&, const Annotation&, const LabelPool&)>;

/// Subset of the set that passes `keep` (labels and ids carried over).
AnnotatedSet filter_set(const AnnotatedSet& set, const EdgeFilter& keep);

}  // namespace interseg
