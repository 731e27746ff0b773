#include "mquine/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "mquine/parallel.hpp"

namespace mquine {

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

std::string_view to_string(FilterMode m) {
  switch (m) {
    case FilterMode::all_splits: return "all-splits";
    case FilterMode::train_only: return "train-only";
    case FilterMode::none: return "none";
  }
  return "?";
}

FilterMode parse_filter_mode(std::string_view s) {
  if (s == "all-splits") return FilterMode::all_splits;
  if (s == "train-only") return FilterMode::train_only;
  if (s == "none") return FilterMode::none;
  throw std::invalid_argument("unknown filter mode '" + std::string(s) + "'");
}

CandidateFilter::CandidateFilter(const KnowledgeGraph& kg, FilterMode mode) {
  auto add = [this](const std::vector<Triple>& xs) {
    for (const auto& x : xs) {
      tails_[pair_key(x.h, x.r)].push_back(x.t);
      heads_[pair_key(x.r, x.t)].push_back(x.h);
    }
  };
  if (mode == FilterMode::none) return;
  add(kg.train());
  if (mode == FilterMode::all_splits) {
    add(kg.valid());
    add(kg.test());
  }
  for (auto* m : {&tails_, &heads_}) {
    for (auto& [_, v] : *m) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }
}

std::span<const EntityId> CandidateFilter::known_tails(EntityId h, RelationId r) const {
  if (auto it = tails_.find(pair_key(h, r)); it != tails_.end()) return it->second;
  return {};
}

std::span<const EntityId> CandidateFilter::known_heads(RelationId r, EntityId t) const {
  if (auto it = heads_.find(pair_key(r, t)); it != heads_.end()) return it->second;
  return {};
}

double filtered_rank(const VectorXd& scores, EntityId target, std::span<const EntityId> excluded) {
  const double s = scores(target);
  std::size_t lower = 0, tied = 0;
  std::size_t j = 0;
  for (Eigen::Index c = 0; c < scores.size(); ++c) {
    const auto id = static_cast<EntityId>(c);
    while (j < excluded.size() && excluded[j] < id) ++j;
    if (id == target) continue;
    if (j < excluded.size() && excluded[j] == id) continue;
    if (scores(c) < s) {
      ++lower;
    } else if (scores(c) == s) {
      ++tied;
    }
  }
  return 1.0 + static_cast<double>(lower) + static_cast<double>(tied) / 2.0;
}

double rank_tail(const Scorer& scorer, const CandidateFilter& filter, const Triple& x) {
  return filtered_rank(scorer.score_tails(x.h, x.r), x.t, filter.known_tails(x.h, x.r));
}

double rank_head(const Scorer& scorer, const CandidateFilter& filter, const Triple& x) {
  return filtered_rank(scorer.score_heads(x.r, x.t), x.h, filter.known_heads(x.r, x.t));
}

Metrics summarize(std::span<const double> ranks) {
  Metrics m;
  m.count = ranks.size();
  if (ranks.empty()) return m;
  for (double r : ranks) {
    m.mrr += 1.0 / r;
    m.mr += r;
    m.hits1 += r <= 1.0 ? 1.0 : 0.0;
    m.hits3 += r <= 3.0 ? 1.0 : 0.0;
    m.hits10 += r <= 10.0 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.mr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

EvalReport evaluate(const ModelState& state, const KnowledgeGraph& kg,
                    std::span<const Triple> triples, const EvalOptions& opts) {
  if (triples.empty()) throw std::invalid_argument("evaluate: empty triple list");
  const Scorer scorer(state);
  const CandidateFilter filter(kg, opts.filter);
  const std::size_t n = triples.size();
  std::vector<double> tail_ranks(n), head_ranks(n);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    kg.check_ids(triples[i]);
    tail_ranks[i] = rank_tail(scorer, filter, triples[i]);
    head_ranks[i] = rank_head(scorer, filter, triples[i]);
  });

  EvalReport rep;
  rep.tail = summarize(tail_ranks);
  rep.head = summarize(head_ranks);
  std::vector<double> all(tail_ranks);
  all.insert(all.end(), head_ranks.begin(), head_ranks.end());
  rep.overall = summarize(all);
  rep.ranks.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) rep.ranks.push_back({triples[i], Corrupt::tail, tail_ranks[i]});
  for (std::size_t i = 0; i < n; ++i) rep.ranks.push_back({triples[i], Corrupt::head, head_ranks[i]});
  return rep;
}

EvalReport evaluate(const ModelState& state, const KnowledgeGraph& kg, Split split,
                    const EvalOptions& opts) {
  const auto& xs = kg.split(split);
  if (xs.empty()) {
    throw std::invalid_argument("evaluate: split '" + std::string(to_string(split)) +
                                "' is empty");
  }
  return evaluate(state, kg, std::span<const Triple>(xs), opts);
}

double best_threshold(std::span<const ScoredLabel> valid) {
  if (valid.empty()) return 0.0;
  std::vector<ScoredLabel> xs(valid.begin(), valid.end());
  std::sort(xs.begin(), xs.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  std::size_t negatives = 0;
  for (const auto& x : xs) negatives += x.label ? 0 : 1;

  // Threshold below everything: all predicted false.
  std::size_t best_correct = negatives;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t correct = negatives;
  for (std::size_t i = 0; i < xs.size();) {
    std::size_t j = i;
    while (j < xs.size() && xs[j].score == xs[i].score) {
      correct += xs[j].label ? 1 : 0;
      correct -= xs[j].label ? 0 : 1;
      ++j;
    }
    if (correct > best_correct) {
      best_correct = correct;
      best = j < xs.size() ? 0.5 * (xs[i].score + xs[j].score)
                           : std::numeric_limits<double>::infinity();
    }
    i = j;
  }
  return best;
}

ClassifReport classify_scored(std::span<const ScoredLabel> test,
                              std::span<const ScoredLabel> valid) {
  ClassifReport rep;
  rep.global_threshold = best_threshold(valid);
  std::map<RelationId, std::vector<ScoredLabel>> by_rel;
  for (const auto& x : valid) by_rel[x.relation].push_back(x);
  for (const auto& [r, xs] : by_rel) rep.thresholds[r] = best_threshold(xs);

  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (const auto& x : test) {
    const auto it = rep.thresholds.find(x.relation);
    const double th = it != rep.thresholds.end() ? it->second : rep.global_threshold;
    const bool pred = x.score <= th;
    correct += pred == x.label ? 1 : 0;
    tp += pred && x.label ? 1 : 0;
    fp += pred && !x.label ? 1 : 0;
    fn += !pred && x.label ? 1 : 0;
  }
  if (!test.empty()) rep.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  const double denom = static_cast<double>(2 * tp + fp + fn);
  rep.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  return rep;
}

ClassifReport classify(const ModelState& state, std::span<const LabeledTriple> test,
                       std::span<const LabeledTriple> valid) {
  const Scorer scorer(state);
  auto scored = [&](std::span<const LabeledTriple> xs) {
    std::vector<ScoredLabel> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      out.push_back({x.triple.r, scorer.score(x.triple.h, x.triple.r, x.triple.t), x.label});
    }
    return out;
  };
  const auto t = scored(test);
  const auto v = scored(valid);
  return classify_scored(t, v);
}

std::vector<LabeledTriple> load_labeled(const std::filesystem::path& file,
                                        const KnowledgeGraph& kg) {
  std::ifstream in(file);
  if (!in) throw LoadError("cannot open " + file.string());
  std::vector<LabeledTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find('\t', start);
      f.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    const auto where = file.string() + ":" + std::to_string(lineno);
    if (f.size() != 4) throw LoadError(where + ": expected 4 tab-separated fields");
    const auto h = kg.entities().find(f[0]);
    const auto r = kg.relations().find(f[1]);
    const auto t = kg.entities().find(f[2]);
    if (!h || !r || !t) throw LoadError(where + ": unknown entity or relation");
    if (f[3] != "1" && f[3] != "0" && f[3] != "-1") throw LoadError(where + ": bad label");
    out.push_back({{*h, *r, *t}, f[3] == "1"});
  }
  return out;
}

}  // namespace mquine
