#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mquine/training.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace mquine;

namespace {

/// 1-d TransE over entities at the given coordinates and relation r = 0, so
/// s(h, r, t) = |x_h - x_t|.
ModelState line_model(std::vector<double> xs, double gamma) {
  Hyperparams hp;
  hp.d = 1;
  hp.gamma = gamma;
  hp.lambda_reg = 0.0;
  auto st = init_model(ModelKind::transe, 1, xs.size(), 1, 0, hp);
  for (std::size_t i = 0; i < xs.size(); ++i) st.entities(static_cast<Eigen::Index>(i), 0) = xs[i];
  st.relations.setZero();
  return st;
}

ModelState random_mquine(std::size_t d, std::size_t ne, std::size_t nr, std::uint64_t seed,
                         Hyperparams hp = {}) {
  hp.d = d;
  auto st = init_model(ModelKind::mquine, d, ne, nr, seed, hp);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.4);
  for (Eigen::Index i = 0; i < st.entities.size(); ++i) st.entities.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < st.relations.size(); ++i) st.relations.data()[i] = n(rng);
  return st;
}

double sup_change(const ModelState& a, const ModelState& b) {
  return std::max((a.entities - b.entities).cwiseAbs().maxCoeff(),
                  (a.relations - b.relations).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("loss examples") {
  const double ln2 = std::log(2.0);
  SUBCASE("positive at gamma alone gives ln 2") {
    const auto st = line_model({0.0, 12.0}, 12.0);
    SampleBatch b;
    b.positive = {0, 0, 1};
    const auto l = loss(b, st);
    CHECK(l.total == doctest::Approx(ln2).epsilon(1e-12));
    CHECK(l.negative_term == 0.0);
    CHECK(l.z_term == 0.0);
  }
  SUBCASE("perfect positive and one negative at gamma") {
    const auto st = line_model({0.0, 0.0, 12.0}, 12.0);
    SampleBatch b;
    b.positive = {0, 0, 1};
    b.negatives = {{0, 0, 2}};
    const auto l = loss(b, st, {false});
    const double expect = std::log1p(std::exp(-12.0)) + ln2;
    CHECK(l.total == doctest::Approx(expect).epsilon(1e-12));
    CHECK(l.total == doctest::Approx(0.693153).epsilon(1e-6));
    CHECK(l.positive_term == doctest::Approx(6.1442e-6).epsilon(1e-4));
  }
  SUBCASE("z-sample at gamma contributes ln 2") {
    const auto st = line_model({0.0, 0.0, 12.0}, 12.0);
    SampleBatch b;
    b.positive = {0, 0, 1};
    b.z_samples = {{0, 0, 2}};
    const auto l = loss(b, st);
    CHECK(l.z_term == doctest::Approx(ln2).epsilon(1e-12));
  }
}

TEST_CASE("sigmoid helpers") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(log_sigmoid(0.0) == doctest::Approx(-std::log(2.0)));
  CHECK(std::isfinite(log_sigmoid(-1e6)));
  CHECK(log_sigmoid(-1e6) == doctest::Approx(-80.0).epsilon(1e-12));
  CHECK(sigmoid(1e6) == 1.0);
}

TEST_CASE("negative weights") {
  const std::vector<double> s{1.0, 2.0, 3.0};
  const auto u = negative_weights(s, 0.5, false);
  for (const double w : u) CHECK(w == doctest::Approx(1.0 / 3.0));
  const auto w = negative_weights(s, 0.5, true);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  // Lower distance, larger weight.
  CHECK(w[0] > w[1]);
  CHECK(w[1] > w[2]);
  CHECK(w[0] / w[1] == doctest::Approx(std::exp(0.5)));
  // Stable for huge scores.
  const std::vector<double> big{1e4, 1e4 + 1};
  const auto wb = negative_weights(big, 1.0, true);
  CHECK(wb[0] + wb[1] == doctest::Approx(1.0));
}

TEST_CASE("loss recomposition is exact") {
  std::mt19937_64 g(1);
  const auto kg = oracle::random_graph(10, 2, 0.25, g);
  Hyperparams hp;
  hp.lambda_neg = 0.7;
  hp.lambda_z = 1.3;
  hp.lambda_reg = 0.05;
  const auto st = random_mquine(3, 10, 2, 4, hp);
  TrainConfig cfg;
  cfg.hyper = hp;
  cfg.hyper.m = 4;
  cfg.hyper.k = 6;
  Rng rng(2);
  for (const auto& b : sample_epoch(kg, cfg, rng)) {
    const auto l = loss(b, st);
    const double total = l.positive_term + hp.lambda_neg * l.negative_term +
                         hp.lambda_z * l.z_term + hp.lambda_reg * l.reg_term;
    CHECK(l.total == total);
  }
}

TEST_CASE("perfect positive alone: loss is -log sigmoid(gamma), decreasing in gamma") {
  double prev = std::numeric_limits<double>::infinity();
  for (double gamma = 0.5; gamma <= 20.0; gamma += 0.5) {
    auto st = line_model({0.0, 0.0, 5.0}, gamma);
    st.hyper.lambda_neg = 0.0;
    st.hyper.lambda_z = 0.0;
    SampleBatch b;
    b.positive = {0, 0, 1};
    b.negatives = {{0, 0, 2}};
    b.z_samples = {{0, 0, 2}};
    const auto l = loss(b, st);
    CHECK(l.total == doctest::Approx(-log_sigmoid(gamma)).epsilon(1e-12));
    CHECK(l.total < prev);
    prev = l.total;
  }
}

TEST_CASE("full loss gradient matches finite differences with weights fixed") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Hyperparams hp;
    hp.gamma = 2.0;
    hp.lambda_neg = 0.8;
    hp.lambda_z = 1.2;
    hp.lambda_reg = 0.1;
    auto st = random_mquine(2, 3, 1, seed, hp);
    SampleBatch b;
    b.positive = {0, 0, 1};
    b.negatives = {{0, 0, 2}, {0, 0, 0}};
    b.z_samples = {{2, 0, 1}, {1, 0, 2}};
    std::vector<double> s;
    for (const auto& n : b.negatives) s.push_back(score(st, n));
    const auto w = negative_weights(s, hp.alpha, true);

    ParamGradient g;
    (void)loss_and_gradient(b, st, {}, g, w);
    auto total = [&]() {
      ParamGradient scratch;
      return loss_and_gradient(b, st, {}, scratch, w).total;
    };
    const double step = 1e-6;
    auto check_table = [&](MatrixXd& table, const std::map<std::uint32_t, RowVectorXd>& rows) {
      for (Eigen::Index i = 0; i < table.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.cols(); ++j) {
          const double p = table(i, j);
          table(i, j) = p + step;
          const double up = total();
          table(i, j) = p - step;
          const double dn = total();
          table(i, j) = p;
          const double fd = (up - dn) / (2 * step);
          const auto it = rows.find(static_cast<std::uint32_t>(i));
          const double an = it == rows.end() ? 0.0 : it->second(j);
          CHECK(std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)}) < 1e-4);
        }
      }
    };
    check_table(st.entities, g.entities);
    check_table(st.relations, g.relations);
  }
}

TEST_CASE("k = 0 or disabled z-sampling gives a zero z term") {
  const auto zb = synthetic::z_blocks(3);
  const auto st = random_mquine(2, zb.kg.num_entities(), 1, 3);
  for (const bool via_k : {true, false}) {
    TrainConfig cfg;
    cfg.hyper.m = 3;
    cfg.hyper.k = via_k ? 0 : 8;
    cfg.z_sampling = via_k;
    Rng rng(1);
    for (const auto& b : sample_epoch(zb.kg, cfg, rng)) {
      CHECK(b.z_samples.empty());
      CHECK(loss(b, st).z_term == 0.0);
    }
  }
  // Enabled z-sampling does produce z-samples on this graph.
  TrainConfig cfg;
  cfg.hyper.m = 3;
  cfg.hyper.k = 8;
  Rng rng(1);
  std::size_t n = 0;
  for (const auto& b : sample_epoch(zb.kg, cfg, rng)) n += b.z_samples.size();
  CHECK(n > 0);
}

TEST_CASE("sample_epoch alternates directions") {
  const auto zb = synthetic::z_blocks(2);
  TrainConfig cfg;
  cfg.hyper.m = 2;
  cfg.hyper.k = 2;
  Rng rng(4);
  const auto batches = sample_epoch(zb.kg, cfg, rng);
  CHECK(batches.size() == zb.kg.train().size());
  for (std::size_t i = 0; i < batches.size(); ++i) {
    CHECK(batches[i].direction == (i % 2 == 0 ? Corrupt::tail : Corrupt::head));
    CHECK(batches[i].negatives.size() == 2);
  }
}

TEST_CASE("train_step") {
  SUBCASE("optimal batch barely moves") {
    auto st = line_model({0.0, 0.0, 100.0, -100.0}, 12.0);
    SampleBatch b;
    b.positive = {0, 0, 1};
    b.negatives = {{0, 0, 2}, {0, 0, 3}};
    const auto before = st;
    Optimizer opt(OptimizerKind::adam, 1e-4);
    const std::vector<SampleBatch> batches{b};
    (void)train_step(batches, st, opt);
    CHECK(sup_change(st, before) < 1e-8);
  }
  SUBCASE("deterministic") {
    std::mt19937_64 g(2);
    const auto kg = oracle::random_graph(8, 1, 0.3, g);
    TrainConfig cfg;
    cfg.hyper.m = 4;
    cfg.hyper.k = 4;
    Rng rng(5);
    const auto batches = sample_epoch(kg, cfg, rng);
    auto a = random_mquine(2, 8, 1, 1), b = a;
    Optimizer oa(OptimizerKind::adam, 0.01), ob(OptimizerKind::adam, 0.01);
    const auto la = train_step(batches, a, oa, {}, 1);
    const auto lb = train_step(batches, b, ob, {}, 1);
    CHECK(a.entities == b.entities);
    CHECK(a.relations == b.relations);
    CHECK(la.total == lb.total);
  }
  SUBCASE("non-finite parameters abort with a dump") {
    auto st = random_mquine(2, 3, 1, 1);
    st.entities(0, 0) = std::numeric_limits<double>::quiet_NaN();
    SampleBatch b;
    b.positive = {0, 0, 1};
    b.negatives = {{0, 0, 2}};
    Optimizer opt(OptimizerKind::adam, 0.01);
    const std::vector<SampleBatch> batches{b};
    try {
      (void)train_step(batches, st, opt);
      FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
      CHECK(std::string(e.what()).find("positive:") != std::string::npos);
    }
  }
  SUBCASE("200 steps on a 5-entity graph: moving average descends") {
    const std::vector<KnowledgeGraph::NamedTriple> tr{
        {"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "d"}, {"d", "r", "e"}, {"a", "s", "c"}};
    const auto kg = KnowledgeGraph::from_named(tr);
    TrainConfig cfg;
    cfg.hyper.d = 3;
    cfg.hyper.gamma = 4.0;
    cfg.hyper.m = 3;
    cfg.hyper.k = 4;
    cfg.hyper.lambda_reg = 0.0;
    auto st = init_model(ModelKind::mquine, 3, kg.num_entities(), kg.num_relations(), 3, cfg.hyper);
    Optimizer opt(OptimizerKind::adam, 0.01);
    Rng rng(7);
    const auto batches = sample_epoch(kg, cfg, rng);
    std::vector<double> losses;
    for (int step = 0; step < 200; ++step) losses.push_back(train_step(batches, st, opt).total);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w + 20 <= losses.size(); w += 20) {
      const double avg = std::accumulate(losses.begin() + w, losses.begin() + w + 20, 0.0) / 20;
      CHECK(avg < prev);
      prev = avg;
    }
  }
}

TEST_CASE("optimizers update only touched rows") {
  for (const auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    auto st = random_mquine(2, 4, 2, 1);
    const auto before = st;
    ParamGradient g;
    accumulate_score_gradient(st, {0, 1, 2}, 1.0, g);
    Optimizer opt(kind, 0.1);
    opt.step(st, g);
    CHECK(opt.steps() == 1);
    CHECK(st.entities.row(1) == before.entities.row(1));
    CHECK(st.entities.row(3) == before.entities.row(3));
    CHECK(st.relations.row(0) == before.relations.row(0));
    CHECK(st.entities.row(0) != before.entities.row(0));
    CHECK(st.relations.row(1) != before.relations.row(1));
  }
  CHECK_THROWS((void)Optimizer(OptimizerKind::adam, 0.0));
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS((void)parse_optimizer("rmsprop"));
}

TEST_CASE("fit") {
  SUBCASE("epochs = 0 rejected") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    const auto zb = synthetic::z_blocks(1);
    CHECK_THROWS((void)fit(zb.kg, cfg));
  }
  SUBCASE("20-triple graph: loss decreases over 50 epochs") {
    std::vector<KnowledgeGraph::NamedTriple> tr;
    for (int e = 0; e < 10; ++e) {
      for (const int step : {1, 3}) {
        tr.push_back({"n" + std::to_string(e), "r", "n" + std::to_string((e + step) % 10)});
      }
    }
    const auto g = KnowledgeGraph::from_named(tr);
    REQUIRE(g.train().size() == 20);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.hyper.d = 3;
    cfg.hyper.gamma = 4.0;
    cfg.hyper.m = 4;
    cfg.hyper.k = 4;
    cfg.hyper.b = 8;
    cfg.hyper.eta = 0.01;
    cfg.threads = 1;
    const auto res = fit(g, cfg);
    REQUIRE(res.log.size() == 50);
    CHECK(res.log.back().loss.total < res.log.front().loss.total);
    for (const auto& rec : res.log) {
      LossBreakdown l = rec.loss;
      recompose(l, cfg.hyper);
      CHECK(l.total == rec.loss.total);
    }
  }
  SUBCASE("evaluation schedule, best state and determinism") {
    const auto zb = synthetic::z_blocks(4);
    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.eval_every = 3;
    cfg.hyper.d = 2;
    cfg.hyper.m = 3;
    cfg.hyper.k = 3;
    cfg.hyper.b = 5;
    cfg.hyper.eta = 0.01;
    cfg.threads = 1;
    std::vector<std::size_t> seen;
    const auto a = fit(zb.kg, cfg, [&](const EpochRecord& r) {
      if (r.valid) seen.push_back(r.epoch);
    });
    CHECK(seen == std::vector<std::size_t>{0, 3, 6, 7});
    double best = -1;
    std::size_t best_epoch = 0;
    for (const auto& r : a.log) {
      if (r.valid && r.valid->mrr > best) {
        best = r.valid->mrr;
        best_epoch = r.epoch;
      }
    }
    CHECK(a.best_epoch == best_epoch);
    cfg.threads = 3;
    const auto b = fit(zb.kg, cfg);
    CHECK(a.last.entities == b.last.entities);
    CHECK(a.best.relations == b.best.relations);
  }
}
