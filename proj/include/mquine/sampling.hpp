#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mquine/kgdata.hpp"

namespace mquine {

using Rng = std::mt19937_64;

enum class Corrupt { tail, head };

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One positive with its negatives and Z-samples.
struct SampleBatch {
  Triple positive;
  std::vector<Triple> negatives;
  std::vector<Triple> z_samples;
  Corrupt direction = Corrupt::tail;
};

struct ZSampleOptions {
  /// Bind the third fact of each pattern to the positive's own tail (head)
  /// rather than to the sampled negative.
  bool literal_anchor = false;
};

/// m corrupted triples drawn uniformly with replacement, rejecting observed
/// ones. Gives up after 100 * m rejections.
std::vector<Triple> sample_negatives(const KnowledgeGraph& kg, const Triple& x, std::size_t m,
                                     Corrupt direction, Rng& rng);

/// The full Z-pattern set collected from the negatives of a tail-corrupted
/// batch, sorted and without duplicates:
///   { (h,r,e2), (e3,r,e2), (e3,r,t_i) : all three observed }.
std::vector<Triple> collect_z_set(const KnowledgeGraph& kg, const Triple& x,
                                  std::span<const Triple> negatives, Corrupt direction,
                                  const ZSampleOptions& opts = {});

/// min(k, |S_Z|) distinct elements of collect_z_set chosen uniformly.
std::vector<Triple> z_sample(const KnowledgeGraph& kg, const Triple& x,
                             std::span<const Triple> negatives, std::size_t k, Rng& rng,
                             Corrupt direction = Corrupt::tail, const ZSampleOptions& opts = {});

SampleBatch tail_variant(const KnowledgeGraph& kg, const Triple& x, std::size_t m, std::size_t k,
                         Rng& rng, const ZSampleOptions& opts = {});
SampleBatch head_variant(const KnowledgeGraph& kg, const Triple& x, std::size_t m, std::size_t k,
                         Rng& rng, const ZSampleOptions& opts = {});

}  // namespace mquine
