#include "mquine/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mquine/parallel.hpp"

namespace mquine {

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  positive_term += o.positive_term;
  negative_term += o.negative_term;
  z_term += o.z_term;
  reg_term += o.reg_term;
  total += o.total;
  return *this;
}

LossBreakdown& LossBreakdown::operator*=(double c) {
  positive_term *= c;
  negative_term *= c;
  z_term *= c;
  reg_term *= c;
  total *= c;
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double n) { return *this *= 1.0 / n; }

void recompose(LossBreakdown& l, const Hyperparams& hp) {
  l.total = l.positive_term + hp.lambda_neg * l.negative_term + hp.lambda_z * l.z_term +
            hp.lambda_reg * l.reg_term;
}

namespace {
constexpr double kSigmoidClamp = 80.0;
}

double log_sigmoid(double x) {
  x = std::clamp(x, -kSigmoidClamp, kSigmoidClamp);
  return -std::log1p(std::exp(-x));
}

double sigmoid(double x) {
  x = std::clamp(x, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

std::vector<double> negative_weights(std::span<const double> scores, double alpha,
                                     bool self_adversarial) {
  const std::size_t n = scores.size();
  std::vector<double> w(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  if (!self_adversarial || n == 0) return w;
  // softmax(-alpha * s), shifted by the smallest score for stability.
  const double smin = *std::min_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-alpha * (scores[i] - smin));
    z += w[i];
  }
  for (auto& x : w) x /= z;
  return w;
}

namespace {

template <bool WithGradient>
LossBreakdown loss_impl(const SampleBatch& batch, const ModelState& state,
                        const LossOptions& opts, ParamGradient* grad,
                        std::span<const double> fixed_weights) {
  const auto& hp = state.hyper;
  const double gamma = hp.gamma;
  LossBreakdown out;

  const double s_pos = score(state, batch.positive);
  out.positive_term = -log_sigmoid(gamma - s_pos);
  if constexpr (WithGradient) {
    accumulate_score_gradient(state, batch.positive, sigmoid(s_pos - gamma), *grad);
  }

  if (!batch.negatives.empty()) {
    std::vector<double> s(batch.negatives.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = score(state, batch.negatives[i]);
    std::vector<double> w;
    if (!fixed_weights.empty()) {
      if (fixed_weights.size() != s.size()) {
        throw std::invalid_argument("fixed_weights must match the number of negatives");
      }
      w.assign(fixed_weights.begin(), fixed_weights.end());
    } else {
      w = negative_weights(s, hp.alpha, opts.self_adversarial);
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      out.negative_term -= w[i] * log_sigmoid(s[i] - gamma);
      if constexpr (WithGradient) {
        accumulate_score_gradient(state, batch.negatives[i],
                                  -hp.lambda_neg * w[i] * sigmoid(gamma - s[i]), *grad);
      }
    }
  }

  if (!batch.z_samples.empty()) {
    const double inv = 1.0 / static_cast<double>(batch.z_samples.size());
    for (const auto& z : batch.z_samples) {
      const double s = score(state, z);
      out.z_term -= inv * log_sigmoid(gamma - s);
      if constexpr (WithGradient) {
        accumulate_score_gradient(state, z, hp.lambda_z * inv * sigmoid(s - gamma), *grad);
      }
    }
  }

  if (hp.lambda_reg > 0.0) {
    std::vector<EntityId> ents;
    ents.reserve(2 + 2 * (batch.negatives.size() + batch.z_samples.size()));
    auto collect = [&ents](const Triple& x) {
      ents.push_back(x.h);
      ents.push_back(x.t);
    };
    collect(batch.positive);
    for (const auto& x : batch.negatives) collect(x);
    for (const auto& x : batch.z_samples) collect(x);
    std::sort(ents.begin(), ents.end());
    ents.erase(std::unique(ents.begin(), ents.end()), ents.end());
    const RelationId rels[] = {batch.positive.r};
    out.reg_term = regularization(state, ents, rels);
    if constexpr (WithGradient) {
      accumulate_regularization_gradient(state, ents, rels, hp.lambda_reg, *grad);
    }
  }

  recompose(out, hp);
  return out;
}

std::string dump_batch(const SampleBatch& b, const ModelState& state) {
  std::ostringstream ss;
  auto show = [&](const Triple& x) {
    ss << "  (" << x.h << ", " << x.r << ", " << x.t << ") score=" << score(state, x) << '\n';
  };
  ss << "positive:\n";
  show(b.positive);
  ss << "negatives (" << b.negatives.size() << "):\n";
  for (const auto& x : b.negatives) show(x);
  ss << "z-samples (" << b.z_samples.size() << "):\n";
  for (const auto& x : b.z_samples) show(x);
  return ss.str();
}

}  // namespace

LossBreakdown loss(const SampleBatch& batch, const ModelState& state, const LossOptions& opts) {
  return loss_impl<false>(batch, state, opts, nullptr, {});
}

LossBreakdown loss_and_gradient(const SampleBatch& batch, const ModelState& state,
                                const LossOptions& opts, ParamGradient& grad,
                                std::span<const double> fixed_weights) {
  return loss_impl<true>(batch, state, opts, &grad, fixed_weights);
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
}

void Optimizer::step(ModelState& state, const ParamGradient& grad) {
  ++steps_;
  if (kind_ == OptimizerKind::sgd) {
    for (const auto& [id, g] : grad.entities) state.entities.row(id) -= lr_ * g;
    for (const auto& [id, g] : grad.relations) state.relations.row(id) -= lr_ * g;
    return;
  }
  auto ensure = [](MatrixXd& m, const MatrixXd& like) {
    if (m.rows() != like.rows() || m.cols() != like.cols()) {
      m = MatrixXd::Zero(like.rows(), like.cols());
    }
  };
  ensure(m_ent_, state.entities);
  ensure(v_ent_, state.entities);
  ensure(m_rel_, state.relations);
  ensure(v_rel_, state.relations);
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  auto update = [&](MatrixXd& params, MatrixXd& m, MatrixXd& v, Eigen::Index row,
                    const RowVectorXd& g) {
    m.row(row) = beta1_ * m.row(row) + (1.0 - beta1_) * g;
    v.row(row) = beta2_ * v.row(row) + (1.0 - beta2_) * g.cwiseProduct(g);
    params.row(row).array() -=
        lr_ * (m.row(row).array() / c1) / ((v.row(row).array() / c2).sqrt() + eps_);
  };
  for (const auto& [id, g] : grad.entities) update(state.entities, m_ent_, v_ent_, id, g);
  for (const auto& [id, g] : grad.relations) update(state.relations, m_rel_, v_rel_, id, g);
}

LossBreakdown train_step(std::span<const SampleBatch> batches, ModelState& state,
                         Optimizer& optimizer, const LossOptions& opts, std::size_t threads) {
  LossBreakdown mean;
  if (batches.empty()) return mean;
  const std::size_t n = batches.size();
  std::vector<ParamGradient> grads(n);
  std::vector<LossBreakdown> losses(n);
  parallel_for(n, threads, [&](std::size_t i) {
    losses[i] = loss_and_gradient(batches[i], state, opts, grads[i]);
  });

  ParamGradient total;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(losses[i].total) || !grads[i].all_finite()) {
      throw TrainingError("non-finite loss or gradient (loss " +
                          std::to_string(losses[i].total) + ")\n" +
                          dump_batch(batches[i], state));
    }
    mean += losses[i];
    total.merge(grads[i], inv);
  }
  mean /= static_cast<double>(n);
  recompose(mean, state.hyper);
  optimizer.step(state, total);
  return mean;
}

void TrainConfig::validate() const {
  hyper.validate();
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
}

std::vector<SampleBatch> sample_epoch(const KnowledgeGraph& kg, const TrainConfig& config,
                                      Rng& rng) {
  std::vector<std::size_t> order(kg.train().size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t k = config.z_sampling ? config.hyper.k : 0;
  const ZSampleOptions zopts{config.z_literal_anchor};
  std::vector<SampleBatch> out;
  out.reserve(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto& x = kg.train()[order[j]];
    out.push_back(j % 2 == 0 ? tail_variant(kg, x, config.hyper.m, k, rng, zopts)
                             : head_variant(kg, x, config.hyper.m, k, rng, zopts));
  }
  return out;
}

FitResult fit(const KnowledgeGraph& kg, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  FitResult res;
  ModelState state = init_model(config.model, config.hyper.d, kg.num_entities(),
                                kg.num_relations(), config.seed, config.hyper);
  Rng rng(config.seed + 1);
  Optimizer opt(config.optimizer, config.hyper.eta);
  const LossOptions lopts{config.self_adversarial};
  const bool can_eval = !kg.valid().empty();
  const EvalOptions eopts{config.filter, config.threads};

  double best_mrr = -1.0;
  auto record = [&](EpochRecord rec) {
    if (can_eval && rec.valid && rec.valid->mrr > best_mrr) {
      best_mrr = rec.valid->mrr;
      res.best = state;
      res.best_epoch = rec.epoch;
    }
    if (on_epoch) on_epoch(rec);
    res.log.push_back(std::move(rec));
  };

  if (can_eval && config.eval_every > 0) {
    EpochRecord rec;
    rec.valid = evaluate(state, kg, Split::valid, eopts).overall;
    record(std::move(rec));
  }

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = sample_epoch(kg, config, rng);
    LossBreakdown sum;
    for (std::size_t start = 0; start < batches.size(); start += config.hyper.b) {
      const std::size_t len = std::min(config.hyper.b, batches.size() - start);
      auto l = train_step(std::span(batches).subspan(start, len), state, opt, lopts,
                          config.threads);
      l *= static_cast<double>(len);
      sum += l;
    }
    if (!batches.empty()) sum /= static_cast<double>(batches.size());
    recompose(sum, state.hyper);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = sum;
    const bool due = config.eval_every > 0 &&
                     (epoch % config.eval_every == 0 || epoch == config.epochs);
    if (can_eval && due) rec.valid = evaluate(state, kg, Split::valid, eopts).overall;
    record(std::move(rec));
  }

  res.last = state;
  if (best_mrr < 0.0) {
    res.best = state;
    res.best_epoch = config.epochs;
  }
  return res;
}

}  // namespace mquine
