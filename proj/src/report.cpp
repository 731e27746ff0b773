#include "mquine/report.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

namespace mquine {

Json to_json(const Metrics& m) {
  return Json{{"mrr", m.mrr},
              {"mr", m.mr},
              {"hits", {{"1", m.hits1}, {"3", m.hits3}, {"10", m.hits10}}},
              {"count", m.count}};
}

Json to_json(const LossBreakdown& l) {
  return Json{{"positive", l.positive_term},
              {"negative", l.negative_term},
              {"z", l.z_term},
              {"reg", l.reg_term},
              {"total", l.total}};
}

Json to_json(const Hyperparams& hp) {
  return Json{{"d", hp.d},
              {"gamma", hp.gamma},
              {"m", hp.m},
              {"k", hp.k},
              {"alpha", hp.alpha},
              {"eta", hp.eta},
              {"b", hp.b},
              {"lambda_reg", hp.lambda_reg},
              {"lambda_neg", hp.lambda_neg},
              {"lambda_z", hp.lambda_z},
              {"init_variance", hp.init_variance},
              {"reg_exponent", hp.reg_exponent}};
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["model"] = to_string(c.model);
  const Json hyper = to_json(c.hyper);
  for (const auto& [k, v] : hyper.items()) j[k] = v;
  j["epochs"] = c.epochs;
  j["eval_every"] = c.eval_every;
  j["seed"] = c.seed;
  j["optimizer"] = to_string(c.optimizer);
  j["checkpoint"] = c.checkpoint;
  j["z_sampling"] = c.z_sampling;
  j["self_adversarial"] = c.self_adversarial;
  j["z_literal_anchor"] = c.z_literal_anchor;
  j["filter"] = to_string(c.filter);
  j["threads"] = c.threads;
  return j;
}

Json to_json(const EvalReport& r) {
  Json j = to_json(r.overall);
  j["head"] = to_json(r.head);
  j["tail"] = to_json(r.tail);
  return j;
}

Json to_json(const ClassifReport& r, const KnowledgeGraph& kg) {
  Json th = Json::object();
  for (const auto& [rel, t] : r.thresholds) {
    th[rel < kg.num_relations() ? kg.relations().name(rel) : std::to_string(rel)] = t;
  }
  return Json{{"accuracy", r.accuracy},
              {"f1", r.f1},
              {"global_threshold", r.global_threshold},
              {"thresholds", th}};
}

Json to_json(const ZStatsReport& r, const KnowledgeGraph& kg) {
  Json j;
  j["total"] = r.total();
  Json counts, pct;
  for (const auto c : {ZCase::easy, ZCase::neutral, ZCase::hard}) {
    counts[std::string(to_string(c))] = r.counts[static_cast<std::size_t>(c)];
    pct[std::string(to_string(c))] = r.percent(c);
  }
  j["counts"] = counts;
  j["percent"] = pct;
  Json rows = Json::array();
  for (const auto& st : r.per_triple) {
    rows.push_back(Json{{"h", kg.entities().name(st.triple.h)},
                        {"r", kg.relations().name(st.triple.r)},
                        {"t", kg.entities().name(st.triple.t)},
                        {"n_z", st.n_z},
                        {"rank_z", st.rank_z},
                        {"case", to_string(st.zcase)}});
  }
  j["per_triple"] = rows;
  return j;
}

Json to_json(const PatternCheckResult& r) {
  return Json{{"pattern", to_string(r.pattern)},
              {"satisfied_by_construction", r.satisfied},
              {"residual", r.residual},
              {"detail", r.detail}};
}

std::string log_line(const EpochRecord& rec) {
  Json j{{"epoch", rec.epoch}};
  if (rec.epoch > 0) j["loss"] = to_json(rec.loss);
  if (rec.valid) j["valid"] = to_json(*rec.valid);
  return j.dump();
}

namespace {

std::string fixed(double x, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

std::string eval_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(9) << "query" << std::right << std::setw(8) << "count"
     << std::setw(9) << "MRR" << std::setw(11) << "MR" << std::setw(9) << "H@1" << std::setw(9)
     << "H@3" << std::setw(9) << "H@10" << '\n';
  auto row = [&](const char* name, const Metrics& m) {
    os << std::left << std::setw(9) << name << std::right << std::setw(8) << m.count
       << std::setw(9) << fixed(m.mrr, 4) << std::setw(11) << fixed(m.mr, 2) << std::setw(9)
       << fixed(m.hits1, 4) << std::setw(9) << fixed(m.hits3, 4) << std::setw(9)
       << fixed(m.hits10, 4) << '\n';
  };
  row("overall", r.overall);
  row("head", r.head);
  row("tail", r.tail);
  return os.str();
}

std::string zstats_table(const ZStatsReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(9) << "case" << std::right << std::setw(10) << "count"
     << std::setw(10) << "percent" << '\n';
  for (const auto c : {ZCase::easy, ZCase::neutral, ZCase::hard}) {
    os << std::left << std::setw(9) << to_string(c) << std::right << std::setw(10)
       << r.counts[static_cast<std::size_t>(c)] << std::setw(9) << fixed(r.percent(c), 2)
       << "%\n";
  }
  os << std::left << std::setw(9) << "total" << std::right << std::setw(10) << r.total() << '\n';
  return os.str();
}

std::string pattern_table(std::span<const PatternCheckResult> results) {
  std::ostringstream os;
  os << std::left << std::setw(13) << "pattern" << std::setw(12) << "by constr." << std::right
     << std::setw(12) << "residual" << "  detail\n";
  for (const auto& r : results) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r.residual);
    os << std::left << std::setw(13) << to_string(r.pattern) << std::setw(12)
       << (r.satisfied ? "satisfied" : "not satisf.") << std::right << std::setw(12) << buf
       << "  " << r.detail << '\n';
  }
  return os.str();
}

void write_rank_csv(std::ostream& os, const EvalReport& r, const KnowledgeGraph& kg) {
  const auto old = os.precision(17);
  os << "h,r,t,direction,rank\n";
  for (const auto& q : r.ranks) {
    os << csv_field(kg.entities().name(q.triple.h)) << ','
       << csv_field(kg.relations().name(q.triple.r)) << ','
       << csv_field(kg.entities().name(q.triple.t)) << ','
       << (q.direction == Corrupt::tail ? "tail" : "head") << ',' << q.rank << '\n';
  }
  os.precision(old);
}

void write_zstats_csv(std::ostream& os, const ZStatsReport& r, const KnowledgeGraph& kg) {
  os << "h,r,t,n_z,rank_z,case\n";
  for (const auto& st : r.per_triple) {
    os << csv_field(kg.entities().name(st.triple.h)) << ','
       << csv_field(kg.relations().name(st.triple.r)) << ','
       << csv_field(kg.entities().name(st.triple.t)) << ',' << st.n_z << ',' << st.rank_z
       << ',' << to_string(st.zcase) << '\n';
  }
}

}  // namespace mquine
