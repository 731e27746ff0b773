#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mquine/models.hpp"
#include "mquine/patterns.hpp"
#include "oracles.hpp"

using namespace mquine;

namespace {

MatrixXd m2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

/// Mixed-sign random parameters so no term is trivially zero.
ModelState random_state(ModelKind kind, std::size_t d, std::size_t ne, std::size_t nr,
                        std::uint64_t seed) {
  auto st = init_model(kind, d, ne, nr, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.5);
  for (Eigen::Index i = 0; i < st.entities.size(); ++i) st.entities.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < st.relations.size(); ++i) st.relations.data()[i] = n(rng);
  return st;
}

}  // namespace

TEST_CASE("counterexample scores") {
  const auto c = z_counterexample();
  CHECK(c.rel.head == m2(1, 0, 0, 0));
  CHECK(c.rel.tail == m2(0, 0, 0, -1));
  CHECK(c.rel.cross == m2(-1, 0, 0, -1));
  CHECK(mquine_score(c.e1, c.rel, c.e2) == 0.0);
  CHECK(mquine_score(c.e3, c.rel, c.e2) == 0.0);
  CHECK(mquine_score(c.e3, c.rel, c.e4) == 0.0);
  CHECK(mquine_score(c.e1, c.rel, c.e4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mquine_score(c.e3, c.rel, c.e4_alt) == 0.0);
  CHECK(mquine_score(c.e1, c.rel, c.e4_alt) == 0.0);
}

TEST_CASE("zero entities score zero") {
  std::mt19937_64 rng(3);
  const auto r = random_relation(3, rng);
  const MatrixXd z = MatrixXd::Zero(3, 3);
  CHECK(mquine_score(z, r, z) == 0.0);
}

TEST_CASE("zero cross term reduces to MQuadE") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    auto r = random_relation(4, rng);
    r.cross.setZero();
    const auto h = random_symmetric(4, rng), t = random_symmetric(4, rng);
    const double q = mquade_score<double>(h, r.head, r.tail, t);
    CHECK(mquine_score(h, r, t) == doctest::Approx(q * q).epsilon(1e-12));
  }
}

TEST_CASE("dimension mismatch throws") {
  const auto r = RelationMatrices<double>::identity(2);
  CHECK_THROWS_AS((void)mquine_score<double>(MatrixXd::Identity(3, 3), r, MatrixXd::Identity(2, 2)),
                  DimensionError);
  CHECK_THROWS_AS((void)transe_score<double>(VectorXd::Zero(2), VectorXd::Zero(3), VectorXd::Zero(2)),
                  DimensionError);
}

TEST_CASE("baseline scores") {
  VectorXd z(1), one(1);
  z << 0;
  one << 1;
  CHECK(transe_score<double>(z, one, one) == 0.0);
  const VectorXd ones = VectorXd::Ones(2);
  CHECK(distmult_score<double>(ones, ones, ones) == -2.0);
  VectorXd phase(1), minus(1);
  phase << std::numbers::pi;
  minus << -1;
  CHECK(rotate_score<double>(one, z, phase, minus, z) == doctest::Approx(0.0).epsilon(1e-12));
  // ComplEx with zero imaginary parts is DistMult.
  const VectorXd a = VectorXd::LinSpaced(3, -1, 2), b = VectorXd::LinSpaced(3, 0.5, 1.5),
                 c = VectorXd::LinSpaced(3, 2, -3), zero3 = VectorXd::Zero(3);
  CHECK(complex_score<double>(a, zero3, b, zero3, c, zero3) ==
        doctest::Approx(distmult_score<double>(a, b, c)));
}

TEST_CASE("materialize") {
  auto st = init_model(ModelKind::mquine, 2, 1, 1, 0);
  st.entities.setZero();
  CHECK(st.entity_matrix(0) == MatrixXd::Zero(2, 2));
  st.entities(0, static_cast<Eigen::Index>(lower_index(1, 0))) = 1.0;
  CHECK(st.entity_matrix(0) == m2(0, 1, 1, 0));
  st.entities.setZero();
  st.entities(0, static_cast<Eigen::Index>(lower_index(0, 0))) = 1.0;
  st.entities(0, static_cast<Eigen::Index>(lower_index(1, 1))) = 1.0;
  CHECK(st.entity_matrix(0) == 2.0 * MatrixXd::Identity(2, 2));

  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto e = random_symmetric(5, rng);
    const auto a = lower_from_symmetric(e);
    CHECK((symmetric_from_lower(a, 5) - e).norm() < 1e-12);
  }
}

TEST_CASE("init") {
  SUBCASE("dim 0 rejected") {
    CHECK_THROWS((void)init_model(ModelKind::mquine, 0, 3, 1, 0));
    CHECK_THROWS((void)init_model(ModelKind::transe, 0, 3, 1, 0));
  }
  SUBCASE("deterministic per seed") {
    for (const auto& name : model_kind_names()) {
      const auto k = parse_model_kind(name);
      const auto a = init_model(k, 3, 7, 2, 42), b = init_model(k, 3, 7, 2, 42);
      const auto c = init_model(k, 3, 7, 2, 43);
      CHECK(a.entities == b.entities);
      CHECK(a.relations == b.relations);
      CHECK(a.entities != c.entities);
      CHECK_NOTHROW(a.validate_layout());
    }
  }
  SUBCASE("identity relations at init") {
    const auto st = init_model(ModelKind::mquine, 3, 5, 2, 9);
    for (EntityId h = 0; h < 5; ++h) {
      for (EntityId t = 0; t < 5; ++t) {
        const MatrixXd H = st.entity_matrix(h), T = st.entity_matrix(t);
        const double expect = (H - T + H * T).squaredNorm();
        CHECK(score(st, {h, 1, t}) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  SUBCASE("coinciding entities are interchangeable") {
    auto st = init_model(ModelKind::mquine, 3, 4, 1, 1);
    st.entities.row(2) = st.entities.row(0);
    for (EntityId e = 0; e < 4; ++e) {
      CHECK(score(st, {0, 0, e}) == score(st, {2, 0, e}));
      CHECK(score(st, {e, 0, 0}) == score(st, {e, 0, 2}));
    }
    CHECK(score(st, {0, 0, 0}) == score(st, {2, 0, 2}));
  }
  SUBCASE("bad model name") { CHECK_THROWS((void)parse_model_kind("transh")); }
}

TEST_CASE("tail and head factorizations match the direct score") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50; ++i) {
    const auto r = random_relation(4, rng);
    const auto h = random_symmetric(4, rng), t = random_symmetric(4, rng);
    const double s = mquine_score(h, r, t);
    CHECK(tail_factors(h, r).score(t) == doctest::Approx(s).epsilon(1e-10));
    CHECK(head_factors(r, t).score(h) == doctest::Approx(s).epsilon(1e-10));
  }
}

TEST_CASE("Scorer agrees with score() for every model") {
  for (const auto& name : model_kind_names()) {
    const auto st = random_state(parse_model_kind(name), 3, 6, 2, 4);
    const Scorer sc(st);
    for (EntityId h = 0; h < 6; ++h) {
      const auto tails = sc.score_tails(h, 1);
      const auto heads = sc.score_heads(1, h);
      for (EntityId e = 0; e < 6; ++e) {
        CHECK(tails(e) == doctest::Approx(score(st, {h, 1, e})).epsilon(1e-10));
        CHECK(heads(e) == doctest::Approx(score(st, {e, 1, h})).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  for (const auto& name : model_kind_names()) {
    CAPTURE(name);
    const auto kind = parse_model_kind(name);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto st = random_state(kind, 3, 4, 2, seed);
      const Triple x{0, 1, 2};
      ParamGradient g;
      accumulate_score_gradient(st, x, 1.0, g);
      const auto fd = oracle::fd_score_gradient(st, x, 1e-6);
      auto rel = [](const RowVectorXd& a, const RowVectorXd& f) {
        return (a - f).norm() / std::max(1.0, f.norm());
      };
      CHECK(rel(g.entities.at(0), fd.head) < 1e-5);
      CHECK(rel(g.entities.at(2), fd.tail) < 1e-5);
      CHECK(rel(g.relations.at(1), fd.relation) < 1e-5);
    }
  }
}

TEST_CASE("upstream scales the gradient linearly") {
  const auto st = random_state(ModelKind::mquine, 3, 3, 1, 8);
  ParamGradient a, b;
  accumulate_score_gradient(st, {0, 0, 1}, 1.0, a);
  accumulate_score_gradient(st, {0, 0, 1}, -2.5, b);
  CHECK((b.entities.at(0) + 2.5 * a.entities.at(0)).norm() < 1e-12);
  CHECK((b.relations.at(0) + 2.5 * a.relations.at(0)).norm() < 1e-12);
}

TEST_CASE("exact triples have zero gradient") {
  const auto c = z_counterexample();
  for (const auto& [h, t] : {std::pair{c.e1, c.e2}, {c.e3, c.e2}, {c.e3, c.e4}, {c.e1, c.e4_alt}}) {
    const auto g = mquine_gradient(h, c.rel, t);
    CHECK(g.head_entity.norm() == 0.0);
    CHECK(g.tail_entity.norm() == 0.0);
    CHECK(g.rel_head.norm() == 0.0);
    CHECK(g.rel_tail.norm() == 0.0);
    CHECK(g.rel_cross.norm() == 0.0);
  }
}

TEST_CASE("zero cross term: relation gradients match MQuadE finite differences") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    auto r = random_relation(3, rng);
    r.cross.setZero();
    const auto h = random_symmetric(3, rng), t = random_symmetric(3, rng);
    const auto g = mquine_gradient(h, r, t);
    const double step = 1e-6;
    auto sq = [&](const MatrixXd& a, const MatrixXd& b) {
      const double q = mquade_score<double>(h, a, b, t);
      return q * q;
    };
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        MatrixXd up = r.head, dn = r.head;
        up(i, j) += step;
        dn(i, j) -= step;
        const double fh = (sq(up, r.tail) - sq(dn, r.tail)) / (2 * step);
        CHECK(g.rel_head(i, j) == doctest::Approx(fh).epsilon(1e-5).scale(1.0));
        up = r.tail;
        dn = r.tail;
        up(i, j) += step;
        dn(i, j) -= step;
        const double ft = (sq(r.head, up) - sq(r.head, dn)) / (2 * step);
        CHECK(g.rel_tail(i, j) == doctest::Approx(ft).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("symmetric construction scores symmetrically") {
  std::mt19937_64 rng(29);
  for (const bool upper : {true, false}) {
    for (int i = 0; i < 20; ++i) {
      const auto r = make_symmetric_relation(3, rng, upper);
      const auto h = random_symmetric(3, rng), t = random_symmetric(3, rng);
      const double a = mquine_score(h, r, t), b = mquine_score(t, r, h);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, a));
    }
  }
}

TEST_CASE("regularization gradient matches finite differences") {
  for (const auto& name : model_kind_names()) {
    CAPTURE(name);
    auto st = random_state(parse_model_kind(name), 2, 3, 1, 6);
    st.hyper.reg_exponent = 3.0;
    const std::vector<EntityId> ents{0, 2};
    const std::vector<RelationId> rels{0};
    ParamGradient g;
    accumulate_regularization_gradient(st, ents, rels, 1.0, g);
    const double step = 1e-6;
    for (const EntityId e : ents) {
      for (Eigen::Index j = 0; j < st.entities.cols(); ++j) {
        const double p = st.entities(e, j);
        st.entities(e, j) = p + step;
        const double up = regularization(st, ents, rels);
        st.entities(e, j) = p - step;
        const double dn = regularization(st, ents, rels);
        st.entities(e, j) = p;
        const double got = g.entities.count(e) ? g.entities.at(e)(j) : 0.0;
        CHECK(got == doctest::Approx((up - dn) / (2 * step)).epsilon(1e-5).scale(1.0));
      }
    }
    for (Eigen::Index j = 0; j < st.relations.cols(); ++j) {
      const double p = st.relations(0, j);
      st.relations(0, j) = p + step;
      const double up = regularization(st, ents, rels);
      st.relations(0, j) = p - step;
      const double dn = regularization(st, ents, rels);
      st.relations(0, j) = p;
      const double got = g.relations.count(0) ? g.relations.at(0)(j) : 0.0;
      CHECK(got == doctest::Approx((up - dn) / (2 * step)).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  CHECK_NOTHROW(hp.validate());
  hp.gamma = -1;
  CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
  hp = {};
  hp.d = 0;
  CHECK_THROWS(hp.validate());
  hp = {};
  hp.alpha = 0;
  CHECK_THROWS(hp.validate());
}
