#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mquine/kgdata.hpp"
#include "mquine/linalg.hpp"

namespace mquine {

enum class ModelKind { mquine, mquade, transe, rotate, distmult, complex };

std::string_view to_string(ModelKind k);
/// Throws std::invalid_argument on an unknown name.
ModelKind parse_model_kind(std::string_view name);
const std::vector<std::string>& model_kind_names();

/// True for scores of the form ||f(h, r) - g(t, r)||, which force the fourth
/// link of a Z-pattern once the other three are exact.
constexpr bool is_distance_form(ModelKind k) {
  return k == ModelKind::transe || k == ModelKind::rotate || k == ModelKind::mquade;
}

// ---------------------------------------------------------------------------
// Matrix-quintuple kernels

/// <R^h, R^t, R^c>. MQuadE's pair (R, R-hat) is stored as head/tail with a
/// zero cross term.
template <typename Scalar>
struct RelationMatrices {
  Matrix<Scalar> head;
  Matrix<Scalar> tail;
  Matrix<Scalar> cross;

  Eigen::Index dim() const { return head.rows(); }

  static RelationMatrices identity(Eigen::Index d) {
    return {Matrix<Scalar>::Identity(d, d), Matrix<Scalar>::Identity(d, d),
            Matrix<Scalar>::Identity(d, d)};
  }
};

template <typename Scalar>
void check_dims(const Matrix<Scalar>& h, const RelationMatrices<Scalar>& r,
                const Matrix<Scalar>& t) {
  const auto d = h.rows();
  auto square = [d](const Matrix<Scalar>& m) { return m.rows() == d && m.cols() == d; };
  if (!square(h) || !square(t) || !square(r.head) || !square(r.tail) || !square(r.cross)) {
    throw DimensionError("matrix quintuple: all five matrices must be " + std::to_string(d) +
                         "x" + std::to_string(d));
  }
}

/// D = H R^h - R^t T + H R^c T.
template <typename Scalar>
Matrix<Scalar> mquine_residual(const Matrix<Scalar>& h, const RelationMatrices<Scalar>& r,
                               const Matrix<Scalar>& t) {
  check_dims(h, r, t);
  return h * r.head - r.tail * t + h * r.cross * t;
}

/// ||H R^h - R^t T + H R^c T||_F^2 on symmetric entity matrices.
template <typename Scalar>
Scalar mquine_score(const Matrix<Scalar>& h, const RelationMatrices<Scalar>& r,
                    const Matrix<Scalar>& t) {
  return mquine_residual(h, r, t).squaredNorm();
}

/// Per-query factors for tail ranking: s(t') = ||L - M T'||^2 with
/// L = H R^h and M = R^t - H R^c.
template <typename Scalar>
struct TailFactors {
  Matrix<Scalar> l;
  Matrix<Scalar> m;

  Scalar score(const Matrix<Scalar>& t) const { return (l - m * t).squaredNorm(); }
};

template <typename Scalar>
TailFactors<Scalar> tail_factors(const Matrix<Scalar>& h, const RelationMatrices<Scalar>& r) {
  check_dims(h, r, h);
  return {h * r.head, r.tail - h * r.cross};
}

/// Head ranking mirror: s(h') = ||H' P - Q||^2 with P = R^h + R^c T and Q = R^t T.
template <typename Scalar>
struct HeadFactors {
  Matrix<Scalar> p;
  Matrix<Scalar> q;

  Scalar score(const Matrix<Scalar>& h) const { return (h * p - q).squaredNorm(); }
};

template <typename Scalar>
HeadFactors<Scalar> head_factors(const RelationMatrices<Scalar>& r, const Matrix<Scalar>& t) {
  check_dims(t, r, t);
  return {r.head + r.cross * t, r.tail * t};
}

/// Gradients of the quintuple score with respect to the materialized
/// entity matrices and the three relation matrices.
template <typename Scalar>
struct QuintupleGradient {
  Matrix<Scalar> head_entity;
  Matrix<Scalar> rel_head;
  Matrix<Scalar> rel_tail;
  Matrix<Scalar> rel_cross;
  Matrix<Scalar> tail_entity;
};

template <typename Scalar>
QuintupleGradient<Scalar> mquine_gradient(const Matrix<Scalar>& h,
                                          const RelationMatrices<Scalar>& r,
                                          const Matrix<Scalar>& t) {
  const Matrix<Scalar> d = mquine_residual(h, r, t);
  QuintupleGradient<Scalar> g;
  g.head_entity = Scalar(2) * d * (r.head + r.cross * t).transpose();
  g.tail_entity = Scalar(2) * (h * r.cross - r.tail).transpose() * d;
  g.rel_head = Scalar(2) * h.transpose() * d;
  g.rel_tail = Scalar(-2) * d * t.transpose();
  g.rel_cross = Scalar(2) * h.transpose() * d * t.transpose();
  return g;
}

/// MQuadE: ||H R - R-hat T||_F (not squared).
template <typename Scalar>
Scalar mquade_score(const Matrix<Scalar>& h, const Matrix<Scalar>& rel,
                    const Matrix<Scalar>& rel_hat, const Matrix<Scalar>& t) {
  require_same_shape(h, rel, "mquade");
  require_same_shape(h, rel_hat, "mquade");
  require_same_shape(h, t, "mquade");
  return (h * rel - rel_hat * t).norm();
}

// ---------------------------------------------------------------------------
// Vector baselines

template <typename Scalar>
Scalar transe_score(const Vector<Scalar>& h, const Vector<Scalar>& r, const Vector<Scalar>& t) {
  require_same_shape(h, r, "transe");
  require_same_shape(h, t, "transe");
  return (h + r - t).norm();
}

/// ||h o r - t|| with r_k = exp(i * phase_k).
template <typename Scalar>
Scalar rotate_score(const Vector<Scalar>& h_re, const Vector<Scalar>& h_im,
                    const Vector<Scalar>& phase, const Vector<Scalar>& t_re,
                    const Vector<Scalar>& t_im) {
  require_same_shape(h_re, phase, "rotate");
  const Vector<Scalar> c = phase.array().cos();
  const Vector<Scalar> s = phase.array().sin();
  const Vector<Scalar> u = h_re.cwiseProduct(c) - h_im.cwiseProduct(s) - t_re;
  const Vector<Scalar> v = h_re.cwiseProduct(s) + h_im.cwiseProduct(c) - t_im;
  return std::sqrt(u.squaredNorm() + v.squaredNorm());
}

template <typename Scalar>
Scalar distmult_score(const Vector<Scalar>& h, const Vector<Scalar>& r, const Vector<Scalar>& t) {
  require_same_shape(h, r, "distmult");
  require_same_shape(h, t, "distmult");
  return -(h.array() * r.array() * t.array()).sum();
}

/// -Re(<h, r, conj(t)>).
template <typename Scalar>
Scalar complex_score(const Vector<Scalar>& h_re, const Vector<Scalar>& h_im,
                     const Vector<Scalar>& r_re, const Vector<Scalar>& r_im,
                     const Vector<Scalar>& t_re, const Vector<Scalar>& t_im) {
  require_same_shape(h_re, r_re, "complex");
  require_same_shape(h_re, t_re, "complex");
  const auto a = h_re.array(), b = h_im.array(), c = r_re.array(), d = r_im.array();
  const auto e = t_re.array(), f = t_im.array();
  return -(((a * c - b * d) * e) + ((a * d + b * c) * f)).sum();
}

// ---------------------------------------------------------------------------
// Model state

struct Hyperparams {
  std::size_t d = 38;
  double gamma = 12.0;
  std::size_t m = 256;
  std::size_t k = 32;
  double alpha = 0.5;
  double eta = 1e-4;
  std::size_t b = 1024;
  double lambda_reg = 0.01;
  double lambda_neg = 1.0;
  double lambda_z = 1.0;
  /// Variance of the normal used for matrix-model entity initialization.
  double init_variance = 0.01;
  /// Exponent p of the ||X||_F^p regularizer.
  double reg_exponent = 2.0;

  static constexpr std::size_t k_cap = 4096;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

/// Parameter tables for one model: a row per entity and a row per relation,
/// laid out according to the model kind (see entity_width / relation_width).
struct ModelState {
  ModelKind kind = ModelKind::mquine;
  std::size_t dim = 0;
  MatrixXd entities;
  MatrixXd relations;
  Hyperparams hyper;

  static std::size_t entity_width(ModelKind kind, std::size_t d);
  static std::size_t relation_width(ModelKind kind, std::size_t d);

  std::size_t num_entities() const { return static_cast<std::size_t>(entities.rows()); }
  std::size_t num_relations() const { return static_cast<std::size_t>(relations.rows()); }

  bool is_matrix_model() const { return kind == ModelKind::mquine || kind == ModelKind::mquade; }

  /// Materialized symmetric entity matrix (matrix models only).
  MatrixXd entity_matrix(EntityId e) const;
  /// Stores a symmetric matrix as its packed lower-triangular parameters.
  void set_entity_matrix(EntityId e, const MatrixXd& symmetric);
  RelationMatrices<double> relation_matrices(RelationId r) const;
  void set_relation_matrices(RelationId r, const RelationMatrices<double>& rel);

  /// Throws DimensionError when the tables do not match kind and dim.
  void validate_layout() const;
};

/// Packed lower triangle A of a symmetric E, chosen so that A + A^T == E.
VectorXd lower_from_symmetric(const MatrixXd& e);

/// Matrix models: lower-triangular entity entries ~ N(0, init_variance),
/// relation matrices = identity. Vector models: uniform in [-gamma/d, gamma/d]
/// (RotatE phases uniform in [-pi, pi]). Deterministic for a fixed seed.
ModelState init_model(ModelKind kind, std::size_t dim, std::size_t num_entities,
                      std::size_t num_relations, std::uint64_t seed,
                      const Hyperparams& hyper = {});

double score(const ModelState& state, const Triple& x);

/// Sparse gradient over table rows, ordered by id for deterministic merges.
struct ParamGradient {
  std::map<EntityId, RowVectorXd> entities;
  std::map<RelationId, RowVectorXd> relations;

  RowVectorXd& entity(EntityId e, std::size_t width);
  RowVectorXd& relation(RelationId r, std::size_t width);
  void merge(const ParamGradient& other, double weight = 1.0);
  bool all_finite() const;
};

/// Adds upstream * d score(x) / d params to `grad`.
void accumulate_score_gradient(const ModelState& state, const Triple& x, double upstream,
                               ParamGradient& grad);

/// Sum of ||X||_F^p over the given entities and relations: materialized
/// matrices for matrix models, raw vectors otherwise. RotatE phases are
/// not regularized.
double regularization(const ModelState& state, std::span<const EntityId> entities,
                      std::span<const RelationId> relations);
void accumulate_regularization_gradient(const ModelState& state,
                                        std::span<const EntityId> entities,
                                        std::span<const RelationId> relations, double upstream,
                                        ParamGradient& grad);

/// Read-only scoring view with materialized entity matrices cached. Used
/// by ranking, classification and the Z-paradox probe.
class Scorer {
 public:
  explicit Scorer(const ModelState& state);

  double score(EntityId h, RelationId r, EntityId t) const;
  /// Scores of (h, r, t') for every entity t'.
  VectorXd score_tails(EntityId h, RelationId r) const;
  /// Scores of (h', r, t) for every entity h'.
  VectorXd score_heads(RelationId r, EntityId t) const;

  const ModelState& state() const { return *state_; }

 private:
  const ModelState* state_;
  std::vector<MatrixXd> entity_mats_;
  std::vector<RelationMatrices<double>> relation_mats_;
};

}  // namespace mquine
