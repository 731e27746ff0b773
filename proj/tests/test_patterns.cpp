#include <random>

#include "doctest.h"
#include "mquine/patterns.hpp"

using namespace mquine;

namespace {

MatrixXd eye(Eigen::Index d) { return MatrixXd::Identity(d, d); }

}  // namespace

TEST_CASE("symmetry examples") {
  const Relation upper{eye(2), -eye(2), eye(2)};
  const auto a = check_symmetry(upper);
  CHECK(a.satisfied);
  CHECK(a.residual == 0.0);

  const Relation lower{eye(2), eye(2), MatrixXd::Zero(2, 2)};
  const auto b = check_symmetry(lower);
  CHECK(b.satisfied);
  CHECK(b.residual == 0.0);
  CHECK(b.detail.find("lower") != std::string::npos);
  CHECK_FALSE(check_asymmetry(lower).satisfied);

  std::mt19937_64 rng(1);
  const auto r = random_relation(3, rng);
  const auto c = check_symmetry(r);
  CHECK_FALSE(c.satisfied);
  CHECK(c.residual > 0.0);
  CHECK(check_asymmetry(r).satisfied);
  // Functional witness of asymmetry.
  bool differs = false;
  for (int i = 0; i < 20 && !differs; ++i) {
    const auto h = random_symmetric(3, rng), t = random_symmetric(3, rng);
    differs = std::abs(mquine_score(h, r, t) - mquine_score(t, r, h)) > 1e-6;
  }
  CHECK(differs);
}

TEST_CASE("constructed symmetric relations pass the check") {
  std::mt19937_64 rng(2);
  for (const bool upper : {true, false}) {
    for (int i = 0; i < 20; ++i) {
      const auto r = make_symmetric_relation(4, rng, upper);
      const auto res = check_symmetry(r);
      CHECK(res.satisfied);
      CHECK(res.detail.find(upper ? "upper" : "lower") != std::string::npos);
    }
  }
}

TEST_CASE("inverse") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto r2 = random_relation(3, rng);
    const auto r1 = make_inverse_relation(r2);
    const auto res = check_inverse(r1, r2);
    CHECK(res.satisfied);
    CHECK(res.residual == 0.0);
    // Inversion is mutual.
    CHECK(check_inverse(r2, r1).satisfied);
    const auto h = random_symmetric(3, rng), t = random_symmetric(3, rng);
    const double a = mquine_score(h, r1, t), b = mquine_score(t, r2, h);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, a));
  }
  const auto r = random_relation(3, rng);
  CHECK_FALSE(check_inverse(r, random_relation(3, rng)).satisfied);
}

TEST_CASE("composition") {
  const Relation id{eye(3), eye(3), MatrixXd::Zero(3, 3)};
  const auto c = compose_relations(id, id);
  CHECK(c.head == eye(3));
  CHECK(c.tail == eye(3));
  CHECK(c.cross == MatrixXd::Zero(3, 3));
  CHECK(check_composition(id, id, id).satisfied);

  std::mt19937_64 rng(4);
  SUBCASE("associative") {
    for (int i = 0; i < 20; ++i) {
      const auto a = random_relation(3, rng), b = random_relation(3, rng),
                 d = random_relation(3, rng);
      const auto left = compose_relations(compose_relations(a, b), d);
      const auto right = compose_relations(a, compose_relations(b, d));
      CHECK(check_composition(left, Relation{eye(3), eye(3), MatrixXd::Zero(3, 3)},
                              right, 1e-9).residual >= 0.0);
      const double res = (left.head - right.head).norm() + (left.tail - right.tail).norm() +
                         (left.cross - right.cross).norm();
      CHECK(res <= 1e-9 * std::max(1.0, left.cross.norm()));
    }
  }
  SUBCASE("witnesses compose") {
    for (int i = 0; i < 20; ++i) {
      const auto w = make_composition_witness(3, rng);
      REQUIRE(w.has_value());
      CHECK(mquine_score(w->e1, w->r1, w->e2) < 1e-18 + 1e-12 * w->e1.squaredNorm());
      CHECK(mquine_score(w->e2, w->r2, w->e3) < 1e-18 + 1e-12 * w->e2.squaredNorm());
      const auto r3 = compose_relations(w->r1, w->r2);
      CHECK(std::sqrt(mquine_score(w->e1, r3, w->e3)) < 1e-9 * std::max(1.0, r3.cross.norm()));
    }
  }
  SUBCASE("abelian") {
    std::normal_distribution<double> n;
    auto diag = [&]() -> MatrixXd { return VectorXd::NullaryExpr(3, [&] { return n(rng); }).asDiagonal(); };
    const Relation a{diag(), diag(), diag()}, b{diag(), diag(), diag()};
    // Diagonal heads and tails commute; the cross equality leaves exactly
    // R^c_2 (R^h_1 - R^t_1) - R^c_1 (R^h_2 - R^t_2).
    const auto res = check_abelian(a, b);
    const double cross = (b.cross * (a.head - a.tail) - a.cross * (b.head - b.tail)).norm();
    CHECK(res.residual == doctest::Approx(cross).epsilon(1e-12));
    CHECK_FALSE(res.satisfied);
    // Zero cross terms, or R^h = R^t on both sides, make diagonal relations commute.
    const Relation a0{a.head, a.tail, MatrixXd::Zero(3, 3)}, b0{b.head, b.tail, MatrixXd::Zero(3, 3)};
    CHECK(check_abelian(a0, b0).satisfied);
    CHECK(check_abelian(a0, b0).residual == 0.0);
    const Relation a1{a.head, a.head, a.cross}, b1{b.head, b.head, b.cross};
    CHECK(check_abelian(a1, b1).satisfied);
    CHECK_FALSE(check_abelian(random_relation(3, rng), random_relation(3, rng)).satisfied);
  }
}

TEST_CASE("capacity") {
  const MatrixXd z = MatrixXd::Zero(2, 2);
  const auto a = check_capacity(Relation{eye(2), z, z});
  CHECK(a[0].satisfied);
  CHECK(a[0].pattern == Pattern::one_to_n);
  CHECK_FALSE(a[1].satisfied);
  CHECK_FALSE(a[2].satisfied);

  std::mt19937_64 rng(5);
  const auto full = check_capacity(random_relation(3, rng));
  for (const auto& r : full) {
    CHECK_FALSE(r.satisfied);
    CHECK(r.residual > 0.0);
  }

  SUBCASE("1-N witness: a second tail at score zero") {
    for (int i = 0; i < 20; ++i) {
      Relation r;
      r.head = random_matrix(5, rng);
      r.tail = random_low_rank(5, 2, rng);
      r.cross = random_low_rank(5, 2, rng);
      CHECK(check_capacity(r)[0].satisfied);
      const auto h = random_symmetric(5, rng);
      // Make (h, r, t1) exact by choosing R^h.
      const auto t1 = random_symmetric(5, rng);
      r.head = h.fullPivLu().solve(r.tail * t1 - h * r.cross * t1);
      REQUIRE(mquine_score(h, r, t1) < 1e-16 * std::max(1.0, t1.squaredNorm()));
      const auto t2 = second_tail(h, r, t1);
      REQUIRE(t2.has_value());
      CHECK((*t2 - t1).norm() > 1e-3);
      CHECK((*t2 - t2->transpose()).norm() < 1e-12);
      CHECK(mquine_score(h, r, *t2) < 1e-16 * std::max(1.0, t2->squaredNorm()) + 1e-18);
    }
  }
  SUBCASE("full-rank M has no second tail") {
    const auto r = random_relation(3, rng);
    const auto h = random_symmetric(3, rng), t = random_symmetric(3, rng);
    CHECK_FALSE(second_tail(h, r, t).has_value());
  }
  SUBCASE("low rank helper") {
    const auto m = random_low_rank(6, 2, rng);
    Eigen::JacobiSVD<MatrixXd> svd(m);
    CHECK(svd.singularValues()(2) < 1e-10 * svd.singularValues()(0));
    CHECK(svd.singularValues()(1) > 1e-6);
  }
}

TEST_CASE("construction suite passes") {
  std::mt19937_64 rng(6);
  for (const Eigen::Index d : {2, 3, 4}) {
    const auto res = construction_suite(d, 10, rng);
    CHECK(res.size() == 6);
    for (const auto& r : res) {
      CAPTURE(r.detail);
      CHECK(r.satisfied);
    }
  }
}

TEST_CASE("counterexample self-test") {
  CHECK(counterexample_selftest());
  const auto c = z_counterexample();
  CHECK(counterexample_selftest(c, ScoreRoute::direct));
  CHECK(counterexample_selftest(c, ScoreRoute::factored));

  // Relation entries and the head-side entities: every single-entry
  // perturbation by 0.5 is caught by both routes.
  auto perturb = [&](auto member, Eigen::Index i, Eigen::Index j) {
    auto p = c;
    member(p)(i, j) += 0.5;
    return std::pair{counterexample_selftest(p, ScoreRoute::direct),
                     counterexample_selftest(p, ScoreRoute::factored)};
  };
  using Get = MatrixXd& (*)(ZCounterexample&);
  const Get always[] = {
      [](ZCounterexample& x) -> MatrixXd& { return x.rel.head; },
      [](ZCounterexample& x) -> MatrixXd& { return x.rel.tail; },
      [](ZCounterexample& x) -> MatrixXd& { return x.rel.cross; },
      [](ZCounterexample& x) -> MatrixXd& { return x.e1; },
      [](ZCounterexample& x) -> MatrixXd& { return x.e3; },
  };
  for (const auto get : always) {
    for (Eigen::Index i = 0; i < 2; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        CAPTURE(i);
        CAPTURE(j);
        const auto [direct, factored] = perturb(get, i, j);
        CHECK_FALSE(direct);
        CHECK_FALSE(factored);
      }
    }
  }
  // e2, e4 and e4_alt only appear as tails, against M = R^t - H R^c whose
  // second row is zero for both heads used. Their first row is checked;
  // their second row is invisible to every score in the test.
  const Get tails[] = {
      [](ZCounterexample& x) -> MatrixXd& { return x.e2; },
      [](ZCounterexample& x) -> MatrixXd& { return x.e4; },
      [](ZCounterexample& x) -> MatrixXd& { return x.e4_alt; },
  };
  for (const MatrixXd& h : {c.e1, c.e3}) {
    const auto f = tail_factors(h, c.rel);
    CHECK(f.m.row(1).norm() == 0.0);
  }
  for (const auto get : tails) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const auto [direct, factored] = perturb(get, 0, j);
      CHECK_FALSE(direct);
      CHECK_FALSE(factored);
      const auto [d1, f1] = perturb(get, 1, j);
      CHECK(d1);
      CHECK(f1);
    }
  }
}

TEST_CASE("pattern names") {
  CHECK(to_string(Pattern::one_to_n) == "1-N");
  CHECK(to_string(Pattern::n_to_one) == "N-1");
  CHECK(to_string(Pattern::symmetric) == "symmetric");
}
