#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mquine/linalg.hpp"
#include "mquine/models.hpp"

namespace mquine {

// Algebraic conditions under which the quintuple score models a relation
// pattern. They are sufficient constructions, not characterizations: a
// "not satisfied" result says the construction does not hold, nothing more.

enum class Pattern { symmetric, asymmetric, inverse, composition, one_to_n, n_to_one, n_to_n, abelian };

std::string_view to_string(Pattern p);

struct PatternCheckResult {
  Pattern pattern = Pattern::symmetric;
  bool satisfied = false;
  double residual = 0.0;
  std::string detail;
};

using Relation = RelationMatrices<double>;

inline constexpr double kPatternTolerance = 1e-9;

/// Residual: min over the two sign pairings of the summed Frobenius norms,
/// (R^t)^T = -R^h with (R^c)^T = R^c, or (R^t)^T = R^h with (R^c)^T = -R^c.
/// Checks report whether the construction holds, not whether the relation
/// can behave symmetrically by other means.
PatternCheckResult check_symmetry(const Relation& r, double tol = kPatternTolerance);
/// Satisfied when neither symmetric pairing holds.
PatternCheckResult check_asymmetry(const Relation& r, double tol = kPatternTolerance);

/// r1 inverts r2 when R^h_1 = (R^t_2)^T, R^t_1 = (R^h_2)^T and R^c_1 = -(R^c_2)^T.
PatternCheckResult check_inverse(const Relation& r1, const Relation& r2,
                                 double tol = kPatternTolerance);

/// (R^h_1 R^h_2, R^t_1 R^t_2, R^h_1 R^c_2 + R^c_1 R^t_2).
Relation compose_relations(const Relation& r1, const Relation& r2);

/// Residual between r3 and compose_relations(r1, r2).
PatternCheckResult check_composition(const Relation& r1, const Relation& r2, const Relation& r3,
                                     double tol = kPatternTolerance);

/// Residual of the three commutation equalities between r1 (+) r2 and r2 (+) r1.
PatternCheckResult check_abelian(const Relation& r1, const Relation& r2,
                                 double tol = kPatternTolerance);

/// 1-N: rank(R^t) + rank(R^c) < d. N-1: rank(R^h) + rank(R^c) < d. N-N: both.
/// Residual is how far the rank sum sits above d - 1.
std::array<PatternCheckResult, 3> check_capacity(const Relation& r);

// ---------------------------------------------------------------------------
// Constructive witnesses

MatrixXd random_symmetric(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0);
MatrixXd random_matrix(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0);
Relation random_relation(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0);

/// A relation satisfying the symmetric construction; `upper` picks the
/// (R^t)^T = -R^h, (R^c)^T = R^c pairing.
Relation make_symmetric_relation(Eigen::Index d, std::mt19937_64& rng, bool upper = true);
/// The relation r1 that inverts r2 by construction.
Relation make_inverse_relation(const Relation& r2);

/// Entities e1, e2, e3 and relations r1, r2 with s(e1, r1, e2) = 0 and
/// s(e2, r2, e3) = 0, built by solving for the head matrices of r1 and r2.
struct CompositionWitness {
  Relation r1, r2;
  MatrixXd e1, e2, e3;
  double solve_residual = 0.0;
};
std::optional<CompositionWitness> make_composition_witness(Eigen::Index d, std::mt19937_64& rng,
                                                           int max_tries = 10);

/// Given an exact link (h, r, t1) and a relation whose R^t - H R^c is
/// singular, returns a second symmetric tail t2 != t1 with s(h, r, t2) = 0.
std::optional<MatrixXd> second_tail(const MatrixXd& h, const Relation& r, const MatrixXd& t1);
/// Mirror of second_tail: a second head h2 != h1 with s(h2, r, t) = 0 when
/// R^h + R^c T is singular.
std::optional<MatrixXd> second_head(const MatrixXd& h1, const Relation& r, const MatrixXd& t);

/// Random d x d matrix of rank at most `rank`.
MatrixXd random_low_rank(Eigen::Index d, Eigen::Index rank, std::mt19937_64& rng);

/// Runs every construction `trials` times on random instances and reports,
/// per pattern, the worst functional residual: |s(h,r,t) - s(t,r,h)| for the
/// symmetric pairings, |s(h,r1,t) - s(t,r2,h)| for inverse, the composed
/// relation's score on a composition witness, and the second-tail /
/// second-head scores for the capacity constructions.
std::vector<PatternCheckResult> construction_suite(Eigen::Index d, int trials,
                                                   std::mt19937_64& rng,
                                                   double tol = kPatternTolerance);

// ---------------------------------------------------------------------------
// No-Z-paradox counterexample

/// The 2x2 relation and entities of the counterexample: three exact links
/// of a Z-pattern with the completing link at score 1 (e4) or 0 (e4_alt).
struct ZCounterexample {
  Relation rel;
  MatrixXd e1, e2, e3, e4, e4_alt;
};
ZCounterexample z_counterexample();

enum class ScoreRoute { direct, factored };

/// Checks s(e1,e2) = s(e3,e2) = s(e3,e4) = 0, s(e1,e4) = 1 and the two zero
/// scores for e4_alt, each within 1e-12.
bool counterexample_selftest(const ZCounterexample& c, ScoreRoute route = ScoreRoute::direct);
bool counterexample_selftest();

}  // namespace mquine
