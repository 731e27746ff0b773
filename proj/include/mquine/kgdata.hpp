#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mquine {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId h = 0;
  RelationId r = 0;
  EntityId t = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& x) const noexcept {
    std::uint64_t k = (static_cast<std::uint64_t>(x.h) << 32) ^ x.t;
    k ^= static_cast<std::uint64_t>(x.r) * 0x9E3779B97F4A7C15ull;
    k ^= k >> 31;
    k *= 0xBF58476D1CE4E5B9ull;
    return static_cast<std::size_t>(k ^ (k >> 29));
  }
};

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bijection between names and dense ids in [0, size()).
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> names);

  /// Id of `name`, inserting it at the end if unseen.
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  /// FNV-1a over the newline-joined names; identifies the vocabulary in checkpoints.
  std::uint64_t hash() const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

enum class Split { train, valid, test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct LoadStats {
  std::size_t duplicates_train = 0;
  std::size_t duplicates_valid = 0;
  std::size_t duplicates_test = 0;
  std::size_t total_duplicates() const {
    return duplicates_train + duplicates_valid + duplicates_test;
  }
};

/// Triple splits over shared vocabularies. The observed set and the
/// adjacency indexes cover the train split only. Immutable once built.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Deduplicates each split (first occurrence wins) and builds the indexes.
  KnowledgeGraph(Vocab entities, Vocab relations, std::vector<Triple> train,
                 std::vector<Triple> valid, std::vector<Triple> test);

  /// Convenience for tests and tools: names are interned in order of appearance.
  using NamedTriple = std::array<std::string, 3>;
  static KnowledgeGraph from_named(std::span<const NamedTriple> train,
                                   std::span<const NamedTriple> valid = {},
                                   std::span<const NamedTriple> test = {});

  const Vocab& entities() const { return entities_; }
  const Vocab& relations() const { return relations_; }
  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }

  const std::vector<Triple>& train() const { return train_; }
  const std::vector<Triple>& valid() const { return valid_; }
  const std::vector<Triple>& test() const { return test_; }
  const std::vector<Triple>& split(Split s) const;

  const LoadStats& stats() const { return stats_; }

  /// Membership in the observed (train) set.
  bool observed(const Triple& x) const { return observed_.contains(x); }
  bool observed(EntityId h, RelationId r, EntityId t) const { return observed({h, r, t}); }

  /// Sorted tails t with (e, r, t) observed.
  std::span<const EntityId> neighbors_out(EntityId e, RelationId r) const;
  /// Sorted heads h with (h, r, e) observed.
  std::span<const EntityId> neighbors_in(EntityId e, RelationId r) const;

  void check_ids(const Triple& x) const;

 private:
  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  Vocab entities_;
  Vocab relations_;
  std::vector<Triple> train_, valid_, test_;
  LoadStats stats_;
  std::unordered_set<Triple, TripleHash> observed_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> by_hr_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> by_rt_;
};

/// Reads train.txt, valid.txt and test.txt (tab-separated head, relation,
/// tail). entities.dict / relations.dict ("id<TAB>name") fix the vocabularies
/// when present; otherwise ids follow first appearance over train, valid, test.
/// Dropped duplicate lines are reported to `log` when given.
KnowledgeGraph load_dataset(const std::filesystem::path& dir, std::ostream* log = nullptr);

/// Writes the graph back in the same layout, including both .dict files.
void save_dataset(const KnowledgeGraph& kg, const std::filesystem::path& dir);

/// All entities t with (h, r, t) not in the train split, ascending.
std::vector<EntityId> unobserved_tails(const KnowledgeGraph& kg, EntityId h, RelationId r);

}  // namespace mquine
