#include "mquine/patterns.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace mquine {

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::symmetric: return "symmetric";
    case Pattern::asymmetric: return "asymmetric";
    case Pattern::inverse: return "inverse";
    case Pattern::composition: return "composition";
    case Pattern::one_to_n: return "1-N";
    case Pattern::n_to_one: return "N-1";
    case Pattern::n_to_n: return "N-N";
    case Pattern::abelian: return "abelian";
  }
  return "?";
}

namespace {

void check_relation(const Relation& r) {
  const auto d = r.dim();
  if (r.head.cols() != d || r.tail.rows() != d || r.tail.cols() != d || r.cross.rows() != d ||
      r.cross.cols() != d) {
    throw DimensionError("relation matrices must all be d x d");
  }
}

void check_same_dim(const Relation& a, const Relation& b) {
  check_relation(a);
  check_relation(b);
  if (a.dim() != b.dim()) throw DimensionError("relations differ in dimension");
}

double sum3(double a, double b, double c) { return a + b + c; }

}  // namespace

PatternCheckResult check_symmetry(const Relation& r, double tol) {
  check_relation(r);
  const MatrixXd tt = r.tail.transpose();
  const MatrixXd ct = r.cross.transpose();
  const double upper = (tt + r.head).norm() + (ct - r.cross).norm();
  const double lower = (tt - r.head).norm() + (ct + r.cross).norm();
  PatternCheckResult res;
  res.pattern = Pattern::symmetric;
  res.residual = std::min(upper, lower);
  res.satisfied = res.residual <= tol;
  if (res.satisfied) {
    res.detail = upper <= lower ? "upper pairing (R^t)^T = -R^h, (R^c)^T = R^c"
                                : "lower pairing (R^t)^T = R^h, (R^c)^T = -R^c";
  } else {
    res.detail = "no symmetric pairing holds";
  }
  return res;
}

PatternCheckResult check_asymmetry(const Relation& r, double tol) {
  auto sym = check_symmetry(r, tol);
  PatternCheckResult res;
  res.pattern = Pattern::asymmetric;
  res.residual = sym.residual;
  res.satisfied = !sym.satisfied;
  res.detail = res.satisfied ? "symmetric pairings violated" : sym.detail;
  return res;
}

PatternCheckResult check_inverse(const Relation& r1, const Relation& r2, double tol) {
  check_same_dim(r1, r2);
  PatternCheckResult res;
  res.pattern = Pattern::inverse;
  res.residual = sum3((r1.head - r2.tail.transpose()).norm(),
                        (r1.tail - r2.head.transpose()).norm(),
                        (r1.cross + r2.cross.transpose()).norm());
  res.satisfied = res.residual <= tol;
  return res;
}

Relation compose_relations(const Relation& r1, const Relation& r2) {
  check_same_dim(r1, r2);
  return {r1.head * r2.head, r1.tail * r2.tail, r1.head * r2.cross + r1.cross * r2.tail};
}

PatternCheckResult check_composition(const Relation& r1, const Relation& r2, const Relation& r3,
                                     double tol) {
  check_same_dim(r1, r3);
  const auto c = compose_relations(r1, r2);
  PatternCheckResult res;
  res.pattern = Pattern::composition;
  res.residual = sum3((r3.head - c.head).norm(), (r3.tail - c.tail).norm(),
                        (r3.cross - c.cross).norm());
  res.satisfied = res.residual <= tol;
  return res;
}

PatternCheckResult check_abelian(const Relation& r1, const Relation& r2, double tol) {
  const auto a = compose_relations(r1, r2);
  const auto b = compose_relations(r2, r1);
  PatternCheckResult res;
  res.pattern = Pattern::abelian;
  res.residual = sum3((a.head - b.head).norm(), (a.tail - b.tail).norm(),
                        (a.cross - b.cross).norm());
  res.satisfied = res.residual <= tol;
  return res;
}

std::array<PatternCheckResult, 3> check_capacity(const Relation& r) {
  check_relation(r);
  const auto d = static_cast<double>(r.dim());
  const auto rh = static_cast<double>(numerical_rank(r.head));
  const auto rt = static_cast<double>(numerical_rank(r.tail));
  const auto rc = static_cast<double>(numerical_rank(r.cross));

  auto make = [&](Pattern p, double sum, const char* label) {
    PatternCheckResult res;
    res.pattern = p;
    res.residual = std::max(0.0, sum - (d - 1.0));
    res.satisfied = sum < d;
    std::ostringstream os;
    os << label << " = " << sum << ", d = " << d;
    res.detail = os.str();
    return res;
  };
  auto one_n = make(Pattern::one_to_n, rt + rc, "rank(R^t) + rank(R^c)");
  auto n_one = make(Pattern::n_to_one, rh + rc, "rank(R^h) + rank(R^c)");
  PatternCheckResult nn;
  nn.pattern = Pattern::n_to_n;
  nn.satisfied = one_n.satisfied && n_one.satisfied;
  nn.residual = std::max(one_n.residual, n_one.residual);
  nn.detail = one_n.detail + "; " + n_one.detail;
  return {one_n, n_one, nn};
}

MatrixXd random_matrix(Eigen::Index d, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

MatrixXd random_symmetric(Eigen::Index d, std::mt19937_64& rng, double scale) {
  const MatrixXd a = random_matrix(d, rng, scale);
  return (a + a.transpose()).eval();
}

Relation random_relation(Eigen::Index d, std::mt19937_64& rng, double scale) {
  Relation r;
  r.head = random_matrix(d, rng, scale);
  r.tail = random_matrix(d, rng, scale);
  r.cross = random_matrix(d, rng, scale);
  return r;
}

Relation make_symmetric_relation(Eigen::Index d, std::mt19937_64& rng, bool upper) {
  Relation r;
  r.head = random_matrix(d, rng);
  if (upper) {
    r.tail = -r.head.transpose();
    r.cross = random_symmetric(d, rng);
  } else {
    r.tail = r.head.transpose();
    const MatrixXd a = random_matrix(d, rng);
    r.cross = a - a.transpose();
  }
  return r;
}

Relation make_inverse_relation(const Relation& r2) {
  check_relation(r2);
  return {r2.tail.transpose(), r2.head.transpose(), -r2.cross.transpose()};
}

namespace {

/// R^h such that E R^h - R^t E' + E R^c E' = 0.
std::optional<MatrixXd> solve_head(const MatrixXd& e, const MatrixXd& e_next, const Relation& r) {
  Eigen::FullPivLU<MatrixXd> lu(e);
  if (!lu.isInvertible()) return std::nullopt;
  return MatrixXd(lu.solve(r.tail * e_next - e * r.cross * e_next));
}

}  // namespace

std::optional<CompositionWitness> make_composition_witness(Eigen::Index d, std::mt19937_64& rng,
                                                           int max_tries) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    CompositionWitness w;
    w.e1 = random_symmetric(d, rng);
    w.e2 = random_symmetric(d, rng);
    w.e3 = random_symmetric(d, rng);
    w.r1 = random_relation(d, rng);
    w.r2 = random_relation(d, rng);
    auto h1 = solve_head(w.e1, w.e2, w.r1);
    auto h2 = solve_head(w.e2, w.e3, w.r2);
    if (!h1 || !h2) continue;
    w.r1.head = *h1;
    w.r2.head = *h2;
    w.solve_residual =
        std::max(mquine_score(w.e1, w.r1, w.e2), mquine_score(w.e2, w.r2, w.e3));
    if (std::isfinite(w.solve_residual)) return w;
  }
  return std::nullopt;
}

std::optional<MatrixXd> second_tail(const MatrixXd& h, const Relation& r, const MatrixXd& t1) {
  const auto f = tail_factors(h, r);
  if (numerical_rank(f.m) >= static_cast<std::size_t>(f.m.rows())) return std::nullopt;
  Eigen::JacobiSVD<MatrixXd> svd(f.m, Eigen::ComputeFullV);
  const Eigen::VectorXd v = svd.matrixV().col(svd.matrixV().cols() - 1);
  return MatrixXd(t1 + v * v.transpose());
}

std::optional<MatrixXd> second_head(const MatrixXd& h1, const Relation& r, const MatrixXd& t) {
  const auto f = head_factors(r, t);
  if (numerical_rank(f.p) >= static_cast<std::size_t>(f.p.rows())) return std::nullopt;
  Eigen::JacobiSVD<MatrixXd> svd(f.p, Eigen::ComputeFullU);
  const Eigen::VectorXd u = svd.matrixU().col(svd.matrixU().cols() - 1);
  return MatrixXd(h1 + u * u.transpose());
}

MatrixXd random_low_rank(Eigen::Index d, Eigen::Index rank, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd a(d, rank), b(rank, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
  return a * b;
}

std::vector<PatternCheckResult> construction_suite(Eigen::Index d, int trials,
                                                   std::mt19937_64& rng, double tol) {
  if (d < 2) throw DimensionError("construction_suite needs d >= 2");
  auto rel_gap = [](double a, double b) { return std::abs(a - b) / (1.0 + std::abs(a)); };
  double sym_upper = 0.0, sym_lower = 0.0, inv = 0.0, comp = 0.0, one_n = 0.0, n_one = 0.0;
  int comp_missing = 0, cap_missing = 0;
  const Eigen::Index low = (d - 1) / 2;  // rank(R^t) + rank(R^c) <= 2 low + ... < d
  for (int i = 0; i < trials; ++i) {
    const MatrixXd h = random_symmetric(d, rng);
    const MatrixXd t = random_symmetric(d, rng);

    const auto ru = make_symmetric_relation(d, rng, true);
    sym_upper = std::max(sym_upper, rel_gap(mquine_score(h, ru, t), mquine_score(t, ru, h)));
    const auto rl = make_symmetric_relation(d, rng, false);
    sym_lower = std::max(sym_lower, rel_gap(mquine_score(h, rl, t), mquine_score(t, rl, h)));

    const auto r2 = random_relation(d, rng);
    const auto r1 = make_inverse_relation(r2);
    inv = std::max(inv, rel_gap(mquine_score(h, r1, t), mquine_score(t, r2, h)));

    if (auto w = make_composition_witness(d, rng)) {
      const auto r3 = compose_relations(w->r1, w->r2);
      comp = std::max(comp, mquine_score(w->e1, r3, w->e3) + w->solve_residual);
    } else {
      ++comp_missing;
    }

    // 1-N: low-rank R^t and R^c, R^h solved so that (h, r, t) is exact.
    Relation cap;
    cap.tail = random_low_rank(d, std::max<Eigen::Index>(low, 0), rng);
    cap.cross = random_low_rank(d, d - 1 - low, rng);
    Eigen::FullPivLU<MatrixXd> lu_h(h);
    cap.head = lu_h.solve(cap.tail * t - h * cap.cross * t);
    const auto t2 = second_tail(h, cap, t);
    if (t2 && (*t2 - t).norm() > 1e-6) {
      one_n = std::max(one_n, mquine_score(h, cap, *t2) + mquine_score(h, cap, t));
    } else {
      ++cap_missing;
    }

    // N-1: low-rank R^h and R^c, R^t solved from the same exact link.
    Relation capn;
    capn.head = random_low_rank(d, std::max<Eigen::Index>(low, 0), rng);
    capn.cross = random_low_rank(d, d - 1 - low, rng);
    Eigen::FullPivLU<MatrixXd> lu_t(t.transpose());
    capn.tail = lu_t.solve((h * capn.head + h * capn.cross * t).transpose()).transpose();
    const auto h2 = second_head(h, capn, t);
    if (h2 && (*h2 - h).norm() > 1e-6) {
      n_one = std::max(n_one, mquine_score(*h2, capn, t) + mquine_score(h, capn, t));
    } else {
      ++cap_missing;
    }
  }

  auto result = [&](Pattern p, double residual, std::string detail, int missing = 0) {
    PatternCheckResult r;
    r.pattern = p;
    r.residual = residual;
    r.satisfied = residual <= tol && missing == 0;
    if (missing > 0) detail += "; " + std::to_string(missing) + " trials without a witness";
    r.detail = std::move(detail);
    return r;
  };
  const std::string n = std::to_string(trials) + " trials, d = " + std::to_string(d);
  std::vector<PatternCheckResult> out;
  out.push_back(result(Pattern::symmetric, sym_upper, "pairing (R^t)^T = -R^h; " + n));
  out.push_back(result(Pattern::symmetric, sym_lower, "pairing (R^t)^T = R^h; " + n));
  out.push_back(result(Pattern::inverse, inv, n));
  out.push_back(result(Pattern::composition, comp, n, comp_missing));
  out.push_back(result(Pattern::one_to_n, one_n, "second tail scores; " + n, cap_missing));
  out.push_back(result(Pattern::n_to_one, n_one, "second head scores; " + n, cap_missing));
  return out;
}

ZCounterexample z_counterexample() {
  ZCounterexample c;
  c.rel.head = MatrixXd{{1, 0}, {0, 0}};
  c.rel.tail = MatrixXd{{0, 0}, {0, -1}};
  c.rel.cross = MatrixXd{{-1, 0}, {0, -1}};
  c.e1 = MatrixXd::Identity(2, 2);
  c.e2 = MatrixXd{{1, 0}, {0, 0}};
  c.e3 = MatrixXd{{0, 0}, {0, 1}};
  c.e4 = MatrixXd{{1, 1}, {1, 0}};
  c.e4_alt = MatrixXd{{1, 0}, {0, -1}};
  return c;
}

bool counterexample_selftest(const ZCounterexample& c, ScoreRoute route) {
  auto s = [&](const MatrixXd& h, const MatrixXd& t) {
    if (route == ScoreRoute::factored) return tail_factors(h, c.rel).score(t);
    return mquine_score(h, c.rel, t);
  };
  constexpr double tol = 1e-12;
  auto near = [&](double x, double want) { return std::abs(x - want) <= tol; };
  return near(s(c.e1, c.e2), 0.0) && near(s(c.e3, c.e2), 0.0) && near(s(c.e3, c.e4), 0.0) &&
         near(s(c.e1, c.e4), 1.0) && near(s(c.e3, c.e4_alt), 0.0) &&
         near(s(c.e1, c.e4_alt), 0.0);
}

bool counterexample_selftest() {
  const auto c = z_counterexample();
  return counterexample_selftest(c, ScoreRoute::direct) && counterexample_selftest(c, ScoreRoute::factored);
}

}  // namespace mquine
