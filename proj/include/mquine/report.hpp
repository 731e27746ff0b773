#pragma once

#include <ostream>
#include <span>
#include <string>

#include "json.hpp"
#include "mquine/evaluation.hpp"
#include "mquine/patterns.hpp"
#include "mquine/training.hpp"
#include "mquine/zanalysis.hpp"

namespace mquine {

using Json = nlohmann::ordered_json;

Json to_json(const Metrics& m);
Json to_json(const LossBreakdown& l);
Json to_json(const Hyperparams& hp);
Json to_json(const TrainConfig& c);
Json to_json(const EvalReport& r);
Json to_json(const ClassifReport& r, const KnowledgeGraph& kg);
Json to_json(const ZStatsReport& r, const KnowledgeGraph& kg);
Json to_json(const PatternCheckResult& r);

/// One JSON-lines record: epoch, loss terms and (when evaluated) valid metrics.
std::string log_line(const EpochRecord& rec);

/// Aligned text table with overall, head and tail rows.
std::string eval_table(const EvalReport& r);
/// Per-case counts and percentages.
std::string zstats_table(const ZStatsReport& r);
std::string pattern_table(std::span<const PatternCheckResult> results);

/// Header "h,r,t,direction,rank", one row per ranked query, names from kg.
void write_rank_csv(std::ostream& os, const EvalReport& r, const KnowledgeGraph& kg);
/// Header "h,r,t,n_z,rank_z,case", one row per triple.
void write_zstats_csv(std::ostream& os, const ZStatsReport& r, const KnowledgeGraph& kg);

}  // namespace mquine
