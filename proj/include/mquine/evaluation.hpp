#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mquine/kgdata.hpp"
#include "mquine/models.hpp"
#include "mquine/sampling.hpp"

namespace mquine {

/// Which known-true completions are removed from the candidate pool.
enum class FilterMode { all_splits, train_only, none };

std::string_view to_string(FilterMode m);
FilterMode parse_filter_mode(std::string_view s);

/// Known tails per (h, r) and heads per (r, t) over the splits selected by a
/// filter mode.
class CandidateFilter {
 public:
  CandidateFilter(const KnowledgeGraph& kg, FilterMode mode);

  std::span<const EntityId> known_tails(EntityId h, RelationId r) const;
  std::span<const EntityId> known_heads(RelationId r, EntityId t) const;

 private:
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_;
};

/// Averaged rank of scores[target] among all candidates except the sorted
/// `excluded` ids (the target itself is never excluded): 1 + #lower + #tied / 2.
double filtered_rank(const VectorXd& scores, EntityId target, std::span<const EntityId> excluded);

double rank_tail(const Scorer& scorer, const CandidateFilter& filter, const Triple& x);
double rank_head(const Scorer& scorer, const CandidateFilter& filter, const Triple& x);

struct Metrics {
  double mrr = 0.0;
  double mr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t count = 0;
};

/// MRR, MR and Hits@{1,3,10} of a rank list.
Metrics summarize(std::span<const double> ranks);

struct QueryRank {
  Triple triple;
  Corrupt direction = Corrupt::tail;
  double rank = 1.0;
};

struct EvalReport {
  Metrics overall;
  Metrics head;
  Metrics tail;
  /// Per-query ranks, tail queries first, in split order.
  std::vector<QueryRank> ranks;
};

struct EvalOptions {
  FilterMode filter = FilterMode::all_splits;
  std::size_t threads = 0;
};

/// Ranks every triple of the list in both directions.
EvalReport evaluate(const ModelState& state, const KnowledgeGraph& kg,
                    std::span<const Triple> triples, const EvalOptions& opts = {});
EvalReport evaluate(const ModelState& state, const KnowledgeGraph& kg, Split split,
                    const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Triple classification

struct LabeledTriple {
  Triple triple;
  bool label = false;
};

struct ScoredLabel {
  RelationId relation = 0;
  double score = 0.0;
  bool label = false;
};

struct ClassifReport {
  double accuracy = 0.0;
  double f1 = 0.0;
  double global_threshold = 0.0;
  /// Predict true iff score <= threshold.
  std::map<RelationId, double> thresholds;
};

/// Threshold maximizing accuracy on `valid`; ties resolve to the lowest one.
double best_threshold(std::span<const ScoredLabel> valid);

ClassifReport classify_scored(std::span<const ScoredLabel> test,
                              std::span<const ScoredLabel> valid);
ClassifReport classify(const ModelState& state, std::span<const LabeledTriple> test,
                       std::span<const LabeledTriple> valid);

/// Lines "head<TAB>relation<TAB>tail<TAB>label" with label 1/0 (or 1/-1).
std::vector<LabeledTriple> load_labeled(const std::filesystem::path& file,
                                        const KnowledgeGraph& kg);

}  // namespace mquine
