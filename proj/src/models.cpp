#include "mquine/models.hpp"

#include <numbers>
#include <random>
#include <stdexcept>

namespace mquine {

namespace {

const std::vector<std::string> kKindNames = {"mquine", "mquade", "transe",
                                             "rotate", "distmult", "complex"};

using ConstRowMap = Eigen::Map<const RowVectorXd>;
using ConstMatMap = Eigen::Map<const MatrixXd>;

ConstMatMap block_matrix(const MatrixXd& table, Eigen::Index row, std::size_t d,
                         std::size_t index) {
  return ConstMatMap(table.row(row).data() + index * d * d, static_cast<Eigen::Index>(d),
                     static_cast<Eigen::Index>(d));
}

VectorXd segment(const MatrixXd& table, Eigen::Index row, std::size_t offset, std::size_t n) {
  return table.row(row)
      .segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(n))
      .transpose();
}

void put_matrix(RowVectorXd& row, std::size_t index, const MatrixXd& m) {
  const auto n = m.size();
  row.segment(static_cast<Eigen::Index>(index) * n, n) += Eigen::Map<const RowVectorXd>(m.data(), n);
}

}  // namespace

std::string_view to_string(ModelKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

const std::vector<std::string>& model_kind_names() { return kKindNames; }

ModelKind parse_model_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ModelKind>(i);
  }
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

void Hyperparams::validate() const {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("hyperparameter ") + what + " out of range");
  };
  if (d < 1) fail("d");
  if (!(gamma > 0)) fail("gamma");
  if (m < 1) fail("m");
  if (k > k_cap) fail("k");
  if (!(alpha > 0)) fail("alpha");
  if (!(eta > 0)) fail("eta");
  if (b < 1) fail("b");
  if (!(lambda_reg >= 0)) fail("lambda_reg");
  if (!(lambda_neg > 0)) fail("lambda_neg");
  if (!(lambda_z >= 0)) fail("lambda_z");
  if (!(init_variance > 0)) fail("init_variance");
  if (!(reg_exponent >= 1)) fail("reg_exponent");
}

std::size_t ModelState::entity_width(ModelKind kind, std::size_t d) {
  switch (kind) {
    case ModelKind::mquine:
    case ModelKind::mquade: return lower_size(d);
    case ModelKind::transe:
    case ModelKind::distmult: return d;
    case ModelKind::rotate:
    case ModelKind::complex: return 2 * d;
  }
  return 0;
}

std::size_t ModelState::relation_width(ModelKind kind, std::size_t d) {
  switch (kind) {
    case ModelKind::mquine: return 3 * d * d;
    case ModelKind::mquade: return 2 * d * d;
    case ModelKind::transe:
    case ModelKind::distmult:
    case ModelKind::rotate: return d;
    case ModelKind::complex: return 2 * d;
  }
  return 0;
}

void ModelState::validate_layout() const {
  if (dim == 0) throw DimensionError("model dimension must be at least 1");
  if (static_cast<std::size_t>(entities.cols()) != entity_width(kind, dim) ||
      static_cast<std::size_t>(relations.cols()) != relation_width(kind, dim)) {
    throw DimensionError("parameter tables do not match " + std::string(to_string(kind)) +
                         " with d=" + std::to_string(dim));
  }
}

MatrixXd ModelState::entity_matrix(EntityId e) const {
  if (!is_matrix_model()) throw std::logic_error("entity_matrix on a vector model");
  return symmetric_from_lower(entities.row(e), dim);
}

void ModelState::set_entity_matrix(EntityId e, const MatrixXd& symmetric) {
  if (!is_matrix_model()) throw std::logic_error("set_entity_matrix on a vector model");
  if (symmetric.rows() != static_cast<Eigen::Index>(dim) ||
      symmetric.cols() != static_cast<Eigen::Index>(dim)) {
    throw DimensionError("entity matrix must be " + std::to_string(dim) + "x" +
                         std::to_string(dim));
  }
  entities.row(e) = lower_from_symmetric(symmetric).transpose();
}

RelationMatrices<double> ModelState::relation_matrices(RelationId r) const {
  const auto row = static_cast<Eigen::Index>(r);
  const auto d = static_cast<Eigen::Index>(dim);
  switch (kind) {
    case ModelKind::mquine:
      return {block_matrix(relations, row, dim, 0), block_matrix(relations, row, dim, 1),
              block_matrix(relations, row, dim, 2)};
    case ModelKind::mquade:
      return {block_matrix(relations, row, dim, 0), block_matrix(relations, row, dim, 1),
              MatrixXd::Zero(d, d)};
    default: throw std::logic_error("relation_matrices on a vector model");
  }
}

void ModelState::set_relation_matrices(RelationId r, const RelationMatrices<double>& rel) {
  if (!is_matrix_model()) throw std::logic_error("set_relation_matrices on a vector model");
  check_dims(rel.head, rel, rel.head);
  if (rel.dim() != static_cast<Eigen::Index>(dim)) throw DimensionError("relation dimension");
  RowVectorXd row = RowVectorXd::Zero(relations.cols());
  put_matrix(row, 0, rel.head);
  put_matrix(row, 1, rel.tail);
  if (kind == ModelKind::mquine) put_matrix(row, 2, rel.cross);
  relations.row(r) = row;
}

VectorXd lower_from_symmetric(const MatrixXd& e) {
  const auto d = static_cast<std::size_t>(e.rows());
  VectorXd a(lower_size(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      a(lower_index(i, j)) = i == j ? e(i, i) / 2.0 : e(i, j);
    }
  }
  return a;
}

ModelState init_model(ModelKind kind, std::size_t dim, std::size_t num_entities,
                      std::size_t num_relations, std::uint64_t seed, const Hyperparams& hyper) {
  if (dim == 0) throw std::invalid_argument("model dimension must be at least 1");
  ModelState st;
  st.kind = kind;
  st.dim = dim;
  st.hyper = hyper;
  st.hyper.d = dim;
  const auto ne = static_cast<Eigen::Index>(num_entities);
  const auto nr = static_cast<Eigen::Index>(num_relations);
  st.entities.resize(ne, static_cast<Eigen::Index>(ModelState::entity_width(kind, dim)));
  st.relations.resize(nr, static_cast<Eigen::Index>(ModelState::relation_width(kind, dim)));

  std::mt19937_64 rng(seed);
  if (st.is_matrix_model()) {
    std::normal_distribution<double> normal(0.0, std::sqrt(hyper.init_variance));
    for (Eigen::Index i = 0; i < st.entities.rows(); ++i) {
      for (Eigen::Index j = 0; j < st.entities.cols(); ++j) st.entities(i, j) = normal(rng);
    }
    const auto d = static_cast<Eigen::Index>(dim);
    const MatrixXd eye = MatrixXd::Identity(d, d);
    for (Eigen::Index r = 0; r < nr; ++r) {
      st.set_relation_matrices(static_cast<RelationId>(r), {eye, eye, eye});
    }
    return st;
  }

  const double bound = hyper.gamma / static_cast<double>(dim);
  std::uniform_real_distribution<double> unif(-bound, bound);
  for (Eigen::Index i = 0; i < st.entities.rows(); ++i) {
    for (Eigen::Index j = 0; j < st.entities.cols(); ++j) st.entities(i, j) = unif(rng);
  }
  if (kind == ModelKind::rotate) {
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    for (Eigen::Index i = 0; i < st.relations.rows(); ++i) {
      for (Eigen::Index j = 0; j < st.relations.cols(); ++j) st.relations(i, j) = phase(rng);
    }
  } else {
    for (Eigen::Index i = 0; i < st.relations.rows(); ++i) {
      for (Eigen::Index j = 0; j < st.relations.cols(); ++j) st.relations(i, j) = unif(rng);
    }
  }
  return st;
}

double score(const ModelState& st, const Triple& x) {
  const auto d = st.dim;
  const auto h = static_cast<Eigen::Index>(x.h), t = static_cast<Eigen::Index>(x.t);
  const auto r = static_cast<Eigen::Index>(x.r);
  switch (st.kind) {
    case ModelKind::mquine:
      return mquine_score(st.entity_matrix(x.h), st.relation_matrices(x.r),
                          st.entity_matrix(x.t));
    case ModelKind::mquade: {
      const auto rel = st.relation_matrices(x.r);
      return mquade_score<double>(st.entity_matrix(x.h), rel.head, rel.tail,
                                  st.entity_matrix(x.t));
    }
    case ModelKind::transe:
      return transe_score<double>(segment(st.entities, h, 0, d), segment(st.relations, r, 0, d),
                                  segment(st.entities, t, 0, d));
    case ModelKind::distmult:
      return distmult_score<double>(segment(st.entities, h, 0, d),
                                    segment(st.relations, r, 0, d),
                                    segment(st.entities, t, 0, d));
    case ModelKind::rotate:
      return rotate_score<double>(segment(st.entities, h, 0, d), segment(st.entities, h, d, d),
                                  segment(st.relations, r, 0, d), segment(st.entities, t, 0, d),
                                  segment(st.entities, t, d, d));
    case ModelKind::complex:
      return complex_score<double>(
          segment(st.entities, h, 0, d), segment(st.entities, h, d, d),
          segment(st.relations, r, 0, d), segment(st.relations, r, d, d),
          segment(st.entities, t, 0, d), segment(st.entities, t, d, d));
  }
  return 0.0;
}

RowVectorXd& ParamGradient::entity(EntityId e, std::size_t width) {
  auto [it, inserted] = entities.try_emplace(e);
  if (inserted) it->second = RowVectorXd::Zero(static_cast<Eigen::Index>(width));
  return it->second;
}

RowVectorXd& ParamGradient::relation(RelationId r, std::size_t width) {
  auto [it, inserted] = relations.try_emplace(r);
  if (inserted) it->second = RowVectorXd::Zero(static_cast<Eigen::Index>(width));
  return it->second;
}

void ParamGradient::merge(const ParamGradient& other, double weight) {
  for (const auto& [id, g] : other.entities) {
    entity(id, static_cast<std::size_t>(g.size())) += weight * g;
  }
  for (const auto& [id, g] : other.relations) {
    relation(id, static_cast<std::size_t>(g.size())) += weight * g;
  }
}

bool ParamGradient::all_finite() const {
  for (const auto& [_, g] : entities) {
    if (!g.allFinite()) return false;
  }
  for (const auto& [_, g] : relations) {
    if (!g.allFinite()) return false;
  }
  return true;
}

void accumulate_score_gradient(const ModelState& st, const Triple& x, double upstream,
                               ParamGradient& grad) {
  const auto d = st.dim;
  const auto di = static_cast<Eigen::Index>(d);
  const auto ew = ModelState::entity_width(st.kind, d);
  const auto rw = ModelState::relation_width(st.kind, d);
  const auto h = static_cast<Eigen::Index>(x.h), t = static_cast<Eigen::Index>(x.t);
  const auto r = static_cast<Eigen::Index>(x.r);

  switch (st.kind) {
    case ModelKind::mquine: {
      const auto g = mquine_gradient(st.entity_matrix(x.h), st.relation_matrices(x.r),
                                     st.entity_matrix(x.t));
      grad.entity(x.h, ew) += upstream * lower_from_symmetric_grad(g.head_entity).transpose();
      grad.entity(x.t, ew) += upstream * lower_from_symmetric_grad(g.tail_entity).transpose();
      auto& rg = grad.relation(x.r, rw);
      put_matrix(rg, 0, upstream * g.rel_head);
      put_matrix(rg, 1, upstream * g.rel_tail);
      put_matrix(rg, 2, upstream * g.rel_cross);
      return;
    }
    case ModelKind::mquade: {
      const MatrixXd hm = st.entity_matrix(x.h), tm = st.entity_matrix(x.t);
      const auto rel = st.relation_matrices(x.r);
      const MatrixXd diff = hm * rel.head - rel.tail * tm;
      const double s = diff.norm();
      if (s == 0.0) return;
      const double c = upstream / s;
      const MatrixXd gh = diff * rel.head.transpose();
      const MatrixXd gt = -rel.tail.transpose() * diff;
      grad.entity(x.h, ew) += c * lower_from_symmetric_grad(gh).transpose();
      grad.entity(x.t, ew) += c * lower_from_symmetric_grad(gt).transpose();
      auto& rg = grad.relation(x.r, rw);
      put_matrix(rg, 0, c * (hm.transpose() * diff));
      put_matrix(rg, 1, -c * (diff * tm.transpose()));
      return;
    }
    case ModelKind::transe: {
      const RowVectorXd diff =
          st.entities.row(h) + st.relations.row(r) - st.entities.row(t);
      const double s = diff.norm();
      if (s == 0.0) return;
      const RowVectorXd g = (upstream / s) * diff;
      grad.entity(x.h, ew) += g;
      grad.relation(x.r, rw) += g;
      grad.entity(x.t, ew) -= g;
      return;
    }
    case ModelKind::distmult: {
      const RowVectorXd hv = st.entities.row(h), rv = st.relations.row(r),
                        tv = st.entities.row(t);
      grad.entity(x.h, ew) -= upstream * rv.cwiseProduct(tv);
      grad.relation(x.r, rw) -= upstream * hv.cwiseProduct(tv);
      grad.entity(x.t, ew) -= upstream * hv.cwiseProduct(rv);
      return;
    }
    case ModelKind::rotate: {
      const auto a = st.entities.row(h).head(di).array(), b = st.entities.row(h).tail(di).array();
      const auto e = st.entities.row(t).head(di).array(), f = st.entities.row(t).tail(di).array();
      const Eigen::ArrayXXd phase = st.relations.row(r).array();
      const Eigen::ArrayXXd c = phase.cos(), sn = phase.sin();
      const Eigen::ArrayXXd u = a * c - b * sn - e;
      const Eigen::ArrayXXd v = a * sn + b * c - f;
      const double s = std::sqrt(u.square().sum() + v.square().sum());
      if (s == 0.0) return;
      const double k = upstream / s;
      auto& gh = grad.entity(x.h, ew);
      gh.head(di).array() += k * (u * c + v * sn);
      gh.tail(di).array() += k * (-u * sn + v * c);
      auto& gt = grad.entity(x.t, ew);
      gt.head(di).array() -= k * u;
      gt.tail(di).array() -= k * v;
      grad.relation(x.r, rw).array() += k * (u * (-a * sn - b * c) + v * (a * c - b * sn));
      return;
    }
    case ModelKind::complex: {
      const Eigen::ArrayXXd a = st.entities.row(h).head(di).array(),
                            b = st.entities.row(h).tail(di).array();
      const Eigen::ArrayXXd c = st.relations.row(r).head(di).array(),
                            dd = st.relations.row(r).tail(di).array();
      const Eigen::ArrayXXd e = st.entities.row(t).head(di).array(),
                            f = st.entities.row(t).tail(di).array();
      auto& gh = grad.entity(x.h, ew);
      gh.head(di).array() -= upstream * (c * e + dd * f);
      gh.tail(di).array() -= upstream * (-dd * e + c * f);
      auto& gr = grad.relation(x.r, rw);
      gr.head(di).array() -= upstream * (a * e + b * f);
      gr.tail(di).array() -= upstream * (-b * e + a * f);
      auto& gt = grad.entity(x.t, ew);
      gt.head(di).array() -= upstream * (a * c - b * dd);
      gt.tail(di).array() -= upstream * (a * dd + b * c);
      return;
    }
  }
}

namespace {

/// ||x||^p and its gradient scale p * ||x||^(p - 2).
std::pair<double, double> norm_power(double sq_norm, double p) {
  if (p == 2.0) return {sq_norm, 2.0};
  if (sq_norm == 0.0) return {0.0, 0.0};
  const double n = std::sqrt(sq_norm);
  return {std::pow(n, p), p * std::pow(n, p - 2.0)};
}

}  // namespace

double regularization(const ModelState& st, std::span<const EntityId> entities,
                      std::span<const RelationId> relations) {
  const double p = st.hyper.reg_exponent;
  double total = 0.0;
  for (auto e : entities) {
    const double sq = st.is_matrix_model() ? st.entity_matrix(e).squaredNorm()
                                           : st.entities.row(e).squaredNorm();
    total += norm_power(sq, p).first;
  }
  if (st.kind == ModelKind::rotate) return total;
  for (auto r : relations) {
    if (st.is_matrix_model()) {
      const auto rel = st.relation_matrices(r);
      total += norm_power(rel.head.squaredNorm(), p).first;
      total += norm_power(rel.tail.squaredNorm(), p).first;
      if (st.kind == ModelKind::mquine) total += norm_power(rel.cross.squaredNorm(), p).first;
    } else {
      total += norm_power(st.relations.row(r).squaredNorm(), p).first;
    }
  }
  return total;
}

void accumulate_regularization_gradient(const ModelState& st,
                                        std::span<const EntityId> entities,
                                        std::span<const RelationId> relations, double upstream,
                                        ParamGradient& grad) {
  const double p = st.hyper.reg_exponent;
  const auto ew = ModelState::entity_width(st.kind, st.dim);
  const auto rw = ModelState::relation_width(st.kind, st.dim);
  for (auto e : entities) {
    if (st.is_matrix_model()) {
      const MatrixXd em = st.entity_matrix(e);
      const double scale = norm_power(em.squaredNorm(), p).second;
      grad.entity(e, ew) += (upstream * scale) * lower_from_symmetric_grad(em).transpose();
    } else {
      const double scale = norm_power(st.entities.row(e).squaredNorm(), p).second;
      grad.entity(e, ew) += (upstream * scale) * st.entities.row(e);
    }
  }
  if (st.kind == ModelKind::rotate) return;
  for (auto r : relations) {
    if (st.is_matrix_model()) {
      const auto rel = st.relation_matrices(r);
      auto& g = grad.relation(r, rw);
      put_matrix(g, 0, upstream * norm_power(rel.head.squaredNorm(), p).second * rel.head);
      put_matrix(g, 1, upstream * norm_power(rel.tail.squaredNorm(), p).second * rel.tail);
      if (st.kind == ModelKind::mquine) {
        put_matrix(g, 2, upstream * norm_power(rel.cross.squaredNorm(), p).second * rel.cross);
      }
    } else {
      const double scale = norm_power(st.relations.row(r).squaredNorm(), p).second;
      grad.relation(r, rw) += (upstream * scale) * st.relations.row(r);
    }
  }
}

Scorer::Scorer(const ModelState& state) : state_(&state) {
  state.validate_layout();
  if (state.is_matrix_model()) {
    entity_mats_.reserve(state.num_entities());
    for (std::size_t e = 0; e < state.num_entities(); ++e) {
      entity_mats_.push_back(state.entity_matrix(static_cast<EntityId>(e)));
    }
    relation_mats_.reserve(state.num_relations());
    for (std::size_t r = 0; r < state.num_relations(); ++r) {
      relation_mats_.push_back(state.relation_matrices(static_cast<RelationId>(r)));
    }
  }
}

double Scorer::score(EntityId h, RelationId r, EntityId t) const {
  switch (state_->kind) {
    case ModelKind::mquine: return mquine_score(entity_mats_[h], relation_mats_[r], entity_mats_[t]);
    case ModelKind::mquade:
      return mquade_score(entity_mats_[h], relation_mats_[r].head, relation_mats_[r].tail,
                          entity_mats_[t]);
    default: return mquine::score(*state_, {h, r, t});
  }
}

VectorXd Scorer::score_tails(EntityId h, RelationId r) const {
  const auto n = state_->num_entities();
  VectorXd out(static_cast<Eigen::Index>(n));
  if (state_->kind == ModelKind::mquine) {
    const auto f = tail_factors(entity_mats_[h], relation_mats_[r]);
    for (std::size_t t = 0; t < n; ++t) out(static_cast<Eigen::Index>(t)) = f.score(entity_mats_[t]);
    return out;
  }
  if (state_->kind == ModelKind::mquade) {
    const MatrixXd l = entity_mats_[h] * relation_mats_[r].head;
    for (std::size_t t = 0; t < n; ++t) {
      out(static_cast<Eigen::Index>(t)) = (l - relation_mats_[r].tail * entity_mats_[t]).norm();
    }
    return out;
  }
  for (std::size_t t = 0; t < n; ++t) {
    out(static_cast<Eigen::Index>(t)) = mquine::score(*state_, {h, r, static_cast<EntityId>(t)});
  }
  return out;
}

VectorXd Scorer::score_heads(RelationId r, EntityId t) const {
  const auto n = state_->num_entities();
  VectorXd out(static_cast<Eigen::Index>(n));
  if (state_->kind == ModelKind::mquine) {
    const auto f = head_factors(relation_mats_[r], entity_mats_[t]);
    for (std::size_t h = 0; h < n; ++h) out(static_cast<Eigen::Index>(h)) = f.score(entity_mats_[h]);
    return out;
  }
  if (state_->kind == ModelKind::mquade) {
    const MatrixXd q = relation_mats_[r].tail * entity_mats_[t];
    for (std::size_t h = 0; h < n; ++h) {
      out(static_cast<Eigen::Index>(h)) = (entity_mats_[h] * relation_mats_[r].head - q).norm();
    }
    return out;
  }
  for (std::size_t h = 0; h < n; ++h) {
    out(static_cast<Eigen::Index>(h)) = mquine::score(*state_, {static_cast<EntityId>(h), r, t});
  }
  return out;
}

}  // namespace mquine
