#include "mquine/sampling.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>
#include <string>

namespace mquine {

namespace {

std::string describe(const KnowledgeGraph& kg, const Triple& x, Corrupt dir) {
  const auto& e = kg.entities();
  const auto& r = kg.relations().name(x.r);
  if (dir == Corrupt::tail) return "(" + e.name(x.h) + ", " + r + ", ?)";
  return "(?, " + r + ", " + e.name(x.t) + ")";
}

}  // namespace

std::vector<Triple> sample_negatives(const KnowledgeGraph& kg, const Triple& x, std::size_t m,
                                     Corrupt direction, Rng& rng) {
  kg.check_ids(x);
  if (m == 0) throw std::invalid_argument("sample_negatives: m must be at least 1");
  const auto n = kg.num_entities();
  const auto taken = direction == Corrupt::tail ? kg.neighbors_out(x.h, x.r).size()
                                                : kg.neighbors_in(x.t, x.r).size();
  if (taken >= n) {
    throw SamplingError("no corruptible candidate for query " + describe(kg, x, direction));
  }
  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n - 1));
  std::vector<Triple> out;
  out.reserve(m);
  const std::size_t cap = 100 * m;
  std::size_t rejected = 0;
  while (out.size() < m) {
    Triple c = x;
    (direction == Corrupt::tail ? c.t : c.h) = pick(rng);
    if (kg.observed(c)) {
      if (++rejected > cap) {
        throw SamplingError("negative sampling exceeded " + std::to_string(cap) +
                            " rejections for query " + describe(kg, x, direction));
      }
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Triple> collect_z_set(const KnowledgeGraph& kg, const Triple& x,
                                  std::span<const Triple> negatives, Corrupt direction,
                                  const ZSampleOptions& opts) {
  const RelationId r = x.r;
  std::vector<Triple> out;

  // Distinct anchors: the corrupted side of each negative.
  std::vector<EntityId> anchors;
  if (opts.literal_anchor) {
    if (!negatives.empty()) anchors.push_back(direction == Corrupt::tail ? x.t : x.h);
  } else {
    for (const auto& neg : negatives) anchors.push_back(direction == Corrupt::tail ? neg.t : neg.h);
  }
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

  std::vector<EntityId> common;
  for (const EntityId a : anchors) {
    if (direction == Corrupt::tail) {
      // (h,r,e2), (e3,r,e2), (e3,r,a)
      const auto h_out = kg.neighbors_out(x.h, r);
      for (const EntityId e3 : kg.neighbors_in(a, r)) {
        const auto e3_out = kg.neighbors_out(e3, r);
        common.clear();
        std::set_intersection(h_out.begin(), h_out.end(), e3_out.begin(), e3_out.end(),
                              std::back_inserter(common));
        for (const EntityId e2 : common) {
          out.push_back({x.h, r, e2});
          out.push_back({e3, r, e2});
          out.push_back({e3, r, a});
        }
      }
    } else {
      // (e3,r,t), (e3,r,e2), (a,r,e2)
      const auto a_out = kg.neighbors_out(a, r);
      for (const EntityId e3 : kg.neighbors_in(x.t, r)) {
        const auto e3_out = kg.neighbors_out(e3, r);
        common.clear();
        std::set_intersection(a_out.begin(), a_out.end(), e3_out.begin(), e3_out.end(),
                              std::back_inserter(common));
        for (const EntityId e2 : common) {
          out.push_back({e3, r, x.t});
          out.push_back({e3, r, e2});
          out.push_back({a, r, e2});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Triple> z_sample(const KnowledgeGraph& kg, const Triple& x,
                             std::span<const Triple> negatives, std::size_t k, Rng& rng,
                             Corrupt direction, const ZSampleOptions& opts) {
  auto pool = collect_z_set(kg, x, negatives, direction, opts);
  if (pool.size() <= k) return pool;
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

SampleBatch tail_variant(const KnowledgeGraph& kg, const Triple& x, std::size_t m, std::size_t k,
                         Rng& rng, const ZSampleOptions& opts) {
  SampleBatch b;
  b.positive = x;
  b.direction = Corrupt::tail;
  b.negatives = sample_negatives(kg, x, m, Corrupt::tail, rng);
  if (k > 0) b.z_samples = z_sample(kg, x, b.negatives, k, rng, Corrupt::tail, opts);
  return b;
}

SampleBatch head_variant(const KnowledgeGraph& kg, const Triple& x, std::size_t m, std::size_t k,
                         Rng& rng, const ZSampleOptions& opts) {
  SampleBatch b;
  b.positive = x;
  b.direction = Corrupt::head;
  b.negatives = sample_negatives(kg, x, m, Corrupt::head, rng);
  if (k > 0) b.z_samples = z_sample(kg, x, b.negatives, k, rng, Corrupt::head, opts);
  return b;
}

}  // namespace mquine
