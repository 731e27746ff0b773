#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mquine/evaluation.hpp"
#include "mquine/models.hpp"
#include "mquine/sampling.hpp"

namespace mquine {

/// total = positive + lambda_neg * negative + lambda_z * z + lambda_reg * reg.
struct LossBreakdown {
  double positive_term = 0.0;
  double negative_term = 0.0;
  double z_term = 0.0;
  double reg_term = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator*=(double c);
  LossBreakdown& operator/=(double n);
};

/// Recomputes `total` from the four terms.
void recompose(LossBreakdown& l, const Hyperparams& hp);

struct LossOptions {
  bool self_adversarial = true;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log(sigmoid(x)) with x clamped to [-80, 80].
double log_sigmoid(double x);
double sigmoid(double x);

/// Negative weights: softmax(-alpha * s_i), or uniform 1/m when disabled.
std::vector<double> negative_weights(std::span<const double> scores, double alpha,
                                     bool self_adversarial);

LossBreakdown loss(const SampleBatch& batch, const ModelState& state,
                   const LossOptions& opts = {});

/// Loss of one positive and its gradient added into `grad`. Negative weights
/// are constants; pass `fixed_weights` to pin them.
LossBreakdown loss_and_gradient(const SampleBatch& batch, const ModelState& state,
                                const LossOptions& opts, ParamGradient& grad,
                                std::span<const double> fixed_weights = {});

enum class OptimizerKind { adam, sgd };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain SGD with constant
/// learning rate. Updates only the rows present in a gradient.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  void step(ModelState& state, const ParamGradient& grad);

  OptimizerKind kind() const { return kind_; }
  std::uint64_t steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::uint64_t steps_ = 0;
  MatrixXd m_ent_, v_ent_, m_rel_, v_rel_;
};

/// One optimizer step over a minibatch of positives; the loss is averaged
/// over positives. Throws TrainingError on a non-finite loss or gradient.
LossBreakdown train_step(std::span<const SampleBatch> batches, ModelState& state,
                         Optimizer& optimizer, const LossOptions& opts = {},
                         std::size_t threads = 1);

struct TrainConfig {
  ModelKind model = ModelKind::mquine;
  Hyperparams hyper;
  std::size_t epochs = 100;
  std::size_t eval_every = 10;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::string checkpoint = "checkpoint.mq5e";
  bool z_sampling = true;
  bool self_adversarial = true;
  bool z_literal_anchor = false;
  FilterMode filter = FilterMode::all_splits;
  std::size_t threads = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;
  std::optional<Metrics> valid;
};

struct FitResult {
  /// State with the best validation MRR (the last state when nothing was evaluated).
  ModelState best;
  ModelState last;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Builds the per-positive sample batches of one epoch: shuffled train order,
/// tail corruption at even positions and head corruption at odd ones.
std::vector<SampleBatch> sample_epoch(const KnowledgeGraph& kg, const TrainConfig& config,
                                      Rng& rng);

FitResult fit(const KnowledgeGraph& kg, const TrainConfig& config,
              const EpochCallback& on_epoch = {});

}  // namespace mquine
