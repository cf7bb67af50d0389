#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "interseg/ingest.hpp"

namespace interseg {

/// One path-crossing between persons i < j. `t` is the earlier ping time and
/// (lat, lon) the midpoint of the two pings; `k` numbers the crossings of a
/// pair in time order.
struct Interaction {
  PersonIndex i = 0;
  PersonIndex j = 0;
  std::int64_t t = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::uint32_t k = 0;
};

/// Ordering used for every emitted interaction list: (i, j, t, lat, lon).
bool canonical_less(const Interaction& a, const Interaction& b);
void sort_canonical(std::vector<Interaction>& v);

enum class TieKind { any, consecutive, unique_days };

struct TieStrength {
  TieKind kind = TieKind::any;
  int k = 1;
};

enum class Weighting { dedup_pairs, count_repeats };

struct JoinConfig {
  double dist_m = 50.0;
  std::int64_t time_s = 300;
  TieStrength tie;
  Weighting weighting = Weighting::dedup_pairs;
  /// Merge crossings of one pair that start within time_s of the previously
  /// kept one (after tie-strength filtering).
  bool collapse_repeats = true;
  double utc_offset_hours = 0.0;
  std::size_t threads = 0;

  void validate() const;
};

inline constexpr std::size_t kBruteForceMaxPings = 10000;

/// Reference O(n^2) join over all ping pairs. Refuses stores with more than
/// kBruteForceMaxPings pings (throws std::length_error).
std::vector<Interaction> join_bruteforce(const PingStore& store, const JoinConfig& cfg);

/// Time-slab join: pings are bucketed into time_s-wide slabs and each slab is
/// matched against itself and the next slab through a k-d tree on
/// earth-centred coordinates; candidates are confirmed with haversine. Output
/// equals join_bruteforce as a multiset and is canonically sorted.
std::vector<Interaction> join_indexed(const PingStore& store, const JoinConfig& cfg);

/// Keeps pairs that meet the tie-strength rule (all their crossings survive).
/// Input must be canonically sorted.
std::vector<Interaction> apply_tie_strength(std::vector<Interaction> v, const JoinConfig& cfg);

/// Within each pair keeps the earliest crossing of every time_s window and
/// renumbers `k`. Input must be canonically sorted.
std::vector<Interaction> collapse_repeats(std::vector<Interaction> v, std::int64_t time_s);

/// Full crossing stage: indexed join, tie strength, optional collapse.
std::vector<Interaction> build_interactions(const PingStore& store, const JoinConfig& cfg);

/// Partner lists per person (index into the same person universe). With
/// dedup_pairs each partner appears once; with count_repeats once per crossing.
std::vector<std::vector<PersonIndex>> partner_lists(std::span<const Interaction> v, std::size_t n_persons,
                                                    Weighting w);

/// ES values of each person's partners; partners whose ES is NaN are skipped.
std::vector<std::vector<double>> alter_multisets(std::span<const Interaction> v, std::span<const double> es,
                                                 Weighting w);

void write_interactions(std::span<const Interaction> v, std::span<const std::string> ids, std::ostream& out);

/// Reads `i,j,t,lat,lon`; ids are resolved through `index`. Rows whose ids are
/// unknown are skipped and counted in `skipped`.
std::vector<Interaction> read_interactions(std::istream& in,
                                           const std::unordered_map<std::string, PersonIndex>& index,
                                           std::uint64_t* skipped = nullptr);

TieStrength parse_tie_strength(const std::string& s);
std::string to_string(TieStrength t);
Weighting parse_weighting(const std::string& s);
std::string to_string(Weighting w);

}  // namespace interseg
