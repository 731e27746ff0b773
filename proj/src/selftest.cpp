#include "mquine/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "mquine/models.hpp"
#include "mquine/patterns.hpp"

namespace mquine {

namespace {

double rel_err(double a, double f) {
  return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
}

}  // namespace

double quintuple_gradient_error(std::size_t d, std::mt19937_64& rng, double step) {
  std::normal_distribution<double> nd(0.0, 0.5);
  const auto di = static_cast<Eigen::Index>(d);
  auto rand_vec = [&](std::size_t n) {
    VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = nd(rng);
    return v;
  };
  VectorXd ah = rand_vec(lower_size(d));
  VectorXd at = rand_vec(lower_size(d));
  Relation rel{random_matrix(di, rng, 0.5), random_matrix(di, rng, 0.5),
               random_matrix(di, rng, 0.5)};

  auto eval = [&] {
    return mquine_score(symmetric_from_lower(ah, d), rel, symmetric_from_lower(at, d));
  };
  const auto g = mquine_gradient(symmetric_from_lower(ah, d), rel, symmetric_from_lower(at, d));

  double worst = 0.0;
  auto probe = [&](double& x, double analytic) {
    const double x0 = x;
    x = x0 + step;
    const double up = eval();
    x = x0 - step;
    const double down = eval();
    x = x0;
    worst = std::max(worst, rel_err(analytic, (up - down) / (2.0 * step)));
  };

  const VectorXd gh = lower_from_symmetric_grad(g.head_entity);
  const VectorXd gt = lower_from_symmetric_grad(g.tail_entity);
  for (Eigen::Index i = 0; i < ah.size(); ++i) probe(ah(i), gh(i));
  for (Eigen::Index i = 0; i < at.size(); ++i) probe(at(i), gt(i));
  for (Eigen::Index i = 0; i < di; ++i) {
    for (Eigen::Index j = 0; j < di; ++j) {
      probe(rel.head(i, j), g.rel_head(i, j));
      probe(rel.tail(i, j), g.rel_tail(i, j));
      probe(rel.cross(i, j), g.rel_cross(i, j));
    }
  }
  return worst;
}

bool run_selftest(std::ostream& out, std::uint64_t seed) {
  bool ok = true;
  auto line = [&](bool pass, const std::string& what) {
    out << (pass ? "PASS " : "FAIL ") << what << '\n';
    ok = ok && pass;
  };

  const auto c = z_counterexample();
  line(counterexample_selftest(c, ScoreRoute::direct), "counterexample scores (direct)");
  line(counterexample_selftest(c, ScoreRoute::factored), "counterexample scores (factored)");

  std::mt19937_64 rng(seed);
  for (const std::size_t d : {2u, 3u, 5u}) {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) worst = std::max(worst, quintuple_gradient_error(d, rng));
    char buf[64];
    std::snprintf(buf, sizeof buf, "gradient d=%zu max rel err %.2e", d, worst);
    line(worst < 1e-5, buf);
  }
  return ok;
}

}  // namespace mquine
