#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "mquine/kgdata.hpp"
#include "mquine/models.hpp"

namespace mquine {

/// Number of pairs (e2, e3), e2 != e3, with (h,r,e2), (e3,r,e2), (e3,r,t)
/// all observed. (h, r, t) itself need not be observed.
std::size_t z_value(const KnowledgeGraph& kg, EntityId h, RelationId r, EntityId t);

/// z_value(h, r, t') for every entity t', in one pass over the patterns
/// rooted at (h, r).
std::vector<std::size_t> z_values_for_tails(const KnowledgeGraph& kg, EntityId h, RelationId r);

/// Number of other candidates t' != t with (h, r, t') unobserved and
/// n_Z(h, r, t') >= n_Z(h, r, t).
std::size_t rank_z(const KnowledgeGraph& kg, EntityId h, RelationId r, EntityId t);

enum class ZCase { easy, neutral, hard };
std::string_view to_string(ZCase c);

struct ZTripleStat {
  Triple triple;
  std::size_t n_z = 0;
  std::size_t rank_z = 0;
  ZCase zcase = ZCase::easy;
};

/// Easy iff rank_z < 10; neutral iff n_Z equals the 10th-largest candidate
/// value (ties for 10th place); hard otherwise. Fewer than 10 candidates is easy.
ZTripleStat z_case(const KnowledgeGraph& kg, const Triple& x);

struct ZStatsReport {
  std::vector<ZTripleStat> per_triple;
  std::array<std::size_t, 3> counts{};  // easy, neutral, hard

  std::size_t total() const { return counts[0] + counts[1] + counts[2]; }
  double percent(ZCase c) const;
};

ZStatsReport case_split(const KnowledgeGraph& kg, Split split, std::size_t threads = 0);
ZStatsReport case_split(const KnowledgeGraph& kg, std::span<const Triple> triples,
                        std::size_t threads = 0);

// ---------------------------------------------------------------------------
// Z-paradox probe

struct ZParadoxWitness {
  EntityId e1 = 0, e2 = 0, e3 = 0, e4 = 0;
  double s12 = 0.0, s32 = 0.0, s34 = 0.0;
  /// Score of the completing link (e1, r, e4).
  double s14 = 0.0;
  /// s12 + s32 + s34: the distance-form upper bound on s14.
  double bound = 0.0;
  bool bound_respected = true;
};

struct ProbeOptions {
  /// A link counts as exact when its score is below this.
  double tolerance = 1e-9;
  /// Quadruples examined at most; pivots are visited in seeded random order
  /// when the budget truncates the enumeration.
  std::size_t budget = 1'000'000;
  std::uint64_t seed = 0;
  /// Flag witnesses whose s14 exceeds the bound.
  bool check_bound = false;
};

struct ProbeReport {
  std::vector<ZParadoxWitness> witnesses;
  std::size_t examined = 0;
  bool truncated = false;
};

/// Enumerates quadruples (e1, e2, e3, e4) with e1 != e3 and e2 != e4 whose
/// three pattern links score below tolerance under `score(a, b)` for a fixed
/// relation, and reports the completing score for each.
ProbeReport z_paradox_probe(const std::function<double(EntityId, EntityId)>& score,
                            std::size_t num_entities, const ProbeOptions& opts = {});

/// Probe over a model's entities for relation r; the bound check is enabled
/// for distance-form models.
ProbeReport z_paradox_probe(const ModelState& state, RelationId r, ProbeOptions opts = {});

}  // namespace mquine
