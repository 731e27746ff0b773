#include "mquine/zanalysis.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "mquine/parallel.hpp"

namespace mquine {

std::size_t z_value(const KnowledgeGraph& kg, EntityId h, RelationId r, EntityId t) {
  kg.check_ids({h, r, t});
  const auto h_out = kg.neighbors_out(h, r);
  std::size_t n = 0;
  for (const EntityId e3 : kg.neighbors_in(t, r)) {
    const auto e3_out = kg.neighbors_out(e3, r);
    // |out(h) ∩ out(e3) \ {e3}| by a merge over the two sorted lists.
    auto a = h_out.begin();
    auto b = e3_out.begin();
    while (a != h_out.end() && b != e3_out.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        if (*a != e3) ++n;
        ++a;
        ++b;
      }
    }
  }
  return n;
}

std::vector<std::size_t> z_values_for_tails(const KnowledgeGraph& kg, EntityId h, RelationId r) {
  kg.check_ids({h, r, h});
  std::vector<std::size_t> counts(kg.num_entities(), 0);
  for (const EntityId e2 : kg.neighbors_out(h, r)) {
    for (const EntityId e3 : kg.neighbors_in(e2, r)) {
      if (e3 == e2) continue;
      for (const EntityId t : kg.neighbors_out(e3, r)) ++counts[t];
    }
  }
  return counts;
}

namespace {

/// n_Z values of the unobserved candidates other than t.
std::vector<std::size_t> candidate_values(const KnowledgeGraph& kg, const Triple& x,
                                          const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> vals;
  vals.reserve(counts.size());
  for (EntityId c = 0; c < counts.size(); ++c) {
    if (c == x.t || kg.observed(x.h, x.r, c)) continue;
    vals.push_back(counts[c]);
  }
  return vals;
}

ZTripleStat z_case_from_counts(const KnowledgeGraph& kg, const Triple& x,
                               const std::vector<std::size_t>& counts) {
  ZTripleStat st;
  st.triple = x;
  st.n_z = counts[x.t];
  auto vals = candidate_values(kg, x, counts);
  st.rank_z = static_cast<std::size_t>(
      std::count_if(vals.begin(), vals.end(), [&](std::size_t v) { return v >= st.n_z; }));
  if (st.rank_z < 10 || vals.size() < 10) {
    st.zcase = ZCase::easy;
    return st;
  }
  std::nth_element(vals.begin(), vals.begin() + 9, vals.end(), std::greater<>());
  st.zcase = vals[9] == st.n_z ? ZCase::neutral : ZCase::hard;
  return st;
}

}  // namespace

std::size_t rank_z(const KnowledgeGraph& kg, EntityId h, RelationId r, EntityId t) {
  kg.check_ids({h, r, t});
  return z_case_from_counts(kg, {h, r, t}, z_values_for_tails(kg, h, r)).rank_z;
}

std::string_view to_string(ZCase c) {
  switch (c) {
    case ZCase::easy: return "easy";
    case ZCase::neutral: return "neutral";
    case ZCase::hard: return "hard";
  }
  return "?";
}

ZTripleStat z_case(const KnowledgeGraph& kg, const Triple& x) {
  kg.check_ids(x);
  return z_case_from_counts(kg, x, z_values_for_tails(kg, x.h, x.r));
}

double ZStatsReport::percent(ZCase c) const {
  const auto n = total();
  if (n == 0) return 0.0;
  return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(c)]) /
         static_cast<double>(n);
}

ZStatsReport case_split(const KnowledgeGraph& kg, std::span<const Triple> triples,
                        std::size_t threads) {
  if (triples.empty()) throw std::invalid_argument("case_split: empty triple list");
  for (const auto& x : triples) kg.check_ids(x);

  // Queries sharing (h, r) share one n_Z vector.
  std::map<std::pair<EntityId, RelationId>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    groups[{triples[i].h, triples[i].r}].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> members;
  members.reserve(groups.size());
  for (const auto& [_, idx] : groups) members.push_back(&idx);

  ZStatsReport rep;
  rep.per_triple.resize(triples.size());
  parallel_for(members.size(), threads, [&](std::size_t g) {
    const auto& idx = *members[g];
    const auto& first = triples[idx.front()];
    const auto counts = z_values_for_tails(kg, first.h, first.r);
    for (const auto i : idx) rep.per_triple[i] = z_case_from_counts(kg, triples[i], counts);
  });
  for (const auto& st : rep.per_triple) ++rep.counts[static_cast<std::size_t>(st.zcase)];
  return rep;
}

ZStatsReport case_split(const KnowledgeGraph& kg, Split split, std::size_t threads) {
  const auto& xs = kg.split(split);
  if (xs.empty()) {
    throw std::invalid_argument("case_split: split '" + std::string(to_string(split)) +
                                "' is empty");
  }
  return case_split(kg, std::span<const Triple>(xs), threads);
}

ProbeReport z_paradox_probe(const std::function<double(EntityId, EntityId)>& score,
                            std::size_t n, const ProbeOptions& opts) {
  MatrixXd s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::vector<EntityId>> heads_of(n), tails_of(n);
  for (EntityId a = 0; a < n; ++a) {
    for (EntityId b = 0; b < n; ++b) {
      s(a, b) = score(a, b);
      if (s(a, b) < opts.tolerance) {
        heads_of[b].push_back(a);
        tails_of[a].push_back(b);
      }
    }
  }

  std::size_t total = 0;
  for (EntityId e2 = 0; e2 < n; ++e2) {
    if (heads_of[e2].size() < 2) continue;
    for (const EntityId e3 : heads_of[e2]) {
      total += (heads_of[e2].size() - 1) * (tails_of[e3].size() - 1);
    }
  }

  std::vector<EntityId> pivots(n);
  std::iota(pivots.begin(), pivots.end(), EntityId{0});
  ProbeReport rep;
  if (total > opts.budget) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(pivots.begin(), pivots.end(), rng);
    rep.truncated = true;
  }

  for (const EntityId e2 : pivots) {
    for (const EntityId e1 : heads_of[e2]) {
      for (const EntityId e3 : heads_of[e2]) {
        if (e3 == e1) continue;
        for (const EntityId e4 : tails_of[e3]) {
          if (e4 == e2) continue;
          if (rep.examined >= opts.budget) return rep;
          ++rep.examined;
          ZParadoxWitness w{e1, e2, e3, e4, s(e1, e2), s(e3, e2), s(e3, e4), s(e1, e4)};
          w.bound = w.s12 + w.s32 + w.s34;
          if (opts.check_bound) {
            w.bound_respected = w.s14 <= w.bound + 1e-12 * (1.0 + w.bound);
          }
          rep.witnesses.push_back(w);
        }
      }
    }
  }
  return rep;
}

ProbeReport z_paradox_probe(const ModelState& state, RelationId r, ProbeOptions opts) {
  const Scorer scorer(state);
  opts.check_bound = opts.check_bound || is_distance_form(state.kind);
  return z_paradox_probe([&](EntityId a, EntityId b) { return scorer.score(a, r, b); },
                         state.num_entities(), opts);
}

}  // namespace mquine
