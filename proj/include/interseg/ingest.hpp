#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace interseg {

using PersonIndex = std::uint32_t;

/// One timestamped GPS observation of one device.
struct Ping {
  std::string person_id;
  std::int64_t t = 0;  // epoch seconds, UTC
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> accuracy_m;
};

/// A ping without its owner; the store groups these per person.
struct Fix {
  std::int64_t t = 0;
  double lat = 0.0;
  double lon = 0.0;
  float accuracy_m = std::numeric_limits<float>::quiet_NaN();  // NaN when absent

  bool has_accuracy() const { return !std::isnan(accuracy_m); }
};

inline bool fix_less(const Fix& a, const Fix& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.lat != b.lat) return a.lat < b.lat;
  return a.lon < b.lon;
}

/// Column names of the ping CSV.
struct PingSchema {
  std::string person_id = "person_id";
  std::string t = "t";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string accuracy = "accuracy_m";
};

struct ParseStats {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_rejected = 0;
};

/// Field-level validity: coordinates in range, t > 0, accuracy >= 0 if present.
bool ping_is_valid(const Ping& p);

/// Streams valid pings from a CSV with header to `sink`. The Ping reference is
/// reused between calls. Throws SchemaError if a required column is missing;
/// malformed rows are counted in the returned stats and skipped.
ParseStats parse_pings(std::istream& in, const PingSchema& schema,
                       const std::function<void(const Ping&)>& sink);

/// Convenience overload collecting all valid pings.
std::vector<Ping> parse_pings(std::istream& in, const PingSchema& schema = {},
                              ParseStats* stats = nullptr);

inline constexpr double kDefaultMaxAccuracyM = 100.0;

/// Pings with accuracy strictly worse than the limit are dropped; absent
/// accuracy passes.
inline bool passes_accuracy(const Ping& p, double max_accuracy_m = kDefaultMaxAccuracyM) {
  return !p.accuracy_m || *p.accuracy_m <= max_accuracy_m;
}

std::vector<Ping> filter_accuracy(std::vector<Ping> pings,
                                  double max_accuracy_m = kDefaultMaxAccuracyM);

/// Per-person contiguous, time-sorted ping arrays. Persons are indexed in
/// lexicographic id order. Immutable once built.
class PingStore {
 public:
  PingStore() = default;

  std::size_t num_persons() const { return ids_.size(); }
  std::size_t num_pings() const { return fixes_.size(); }

  const std::string& person_id(PersonIndex p) const { return ids_[p]; }
  const std::vector<std::string>& person_ids() const { return ids_; }
  std::span<const Fix> pings(PersonIndex p) const {
    return {fixes_.data() + offsets_[p], offsets_[p + 1] - offsets_[p]};
  }
  std::optional<PersonIndex> find(std::string_view id) const;

  /// Copy containing only persons with keep[p] == true.
  PingStore subset(const std::vector<bool>& keep) const;

  /// Number of exact duplicate (t, lat, lon) pings merged during construction.
  std::uint64_t duplicates_dropped() const { return duplicates_dropped_; }

 private:
  friend class PingStoreBuilder;
  std::vector<std::string> ids_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Fix> fixes_;
  std::unordered_map<std::string, PersonIndex> index_;
  std::uint64_t duplicates_dropped_ = 0;

  void rebuild_index();
};

class PingStoreBuilder {
 public:
  void add(const Ping& p);
  void add(std::string_view person_id, const Fix& f);
  PingStore build() &&;

 private:
  std::unordered_map<std::string, std::vector<Fix>> per_person_;
};

PingStore make_store(std::span<const Ping> pings);

/// Drops persons with strictly fewer than `min_count` pings.
PingStore filter_min_pings(const PingStore& store, std::size_t min_count = 500);

struct DedupResult {
  PingStore store;
  std::vector<std::string> removed;
};

/// Removes duplicated devices: when more than `overlap_frac` of one person's
/// pings match (t, lat, lon) triples of another person (coordinates compared
/// after rounding to 1e-6 degrees), the person with fewer pings is removed;
/// on equal counts the lexicographically larger id goes.
DedupResult dedup_devices(const PingStore& store, double overlap_frac = 0.8);

/// Writes the store back as ping CSV (person-major, time-sorted).
void write_pings(const PingStore& store, std::ostream& out);

struct IngestReport {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_rejected = 0;
  std::uint64_t persons_in = 0;
  std::uint64_t persons_out = 0;
  std::uint64_t pings_dropped_accuracy = 0;
  std::uint64_t duplicate_rows = 0;
  std::uint64_t persons_dropped_min_pings = 0;
  std::uint64_t persons_dropped_dedup = 0;

  std::string to_json() const;
};

struct IngestConfig {
  double max_accuracy_m = kDefaultMaxAccuracyM;
  std::size_t min_pings = 500;
  double dedup_overlap_frac = 0.8;
  PingSchema schema;
};

/// Parse, accuracy filter, min-ping filter, then device dedup.
PingStore ingest(std::istream& in, const IngestConfig& cfg, IngestReport* report = nullptr);

/// Loads an already-cleaned ping CSV without filtering.
PingStore load_store(std::istream& in, const PingSchema& schema = {});

}  // namespace interseg
