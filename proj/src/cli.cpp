#include "mquine/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "mquine/checkpoint.hpp"
#include "mquine/kgdata.hpp"
#include "mquine/patterns.hpp"
#include "mquine/report.hpp"
#include "mquine/selftest.hpp"
#include "mquine/zanalysis.hpp"

namespace mquine {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "d",          "gamma",         "m",
      "k",          "alpha",         "eta",
      "b",          "lambda_reg",    "lambda_neg",
      "lambda_z",   "init_variance", "reg_exponent",
      "model",      "epochs",        "eval_every",
      "seed",       "optimizer",     "checkpoint",
      "z_sampling", "self_adversarial", "z_literal_anchor",
      "filter",     "threads"};
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + value + "' for " + key);
}

}  // namespace

std::map<std::string, std::string> parse_config(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

void apply_setting(TrainConfig& c, const std::string& key, const std::string& value) {
  auto& hp = c.hyper;
  try {
    if (key == "d") hp.d = parse_number<std::size_t>(key, value);
    else if (key == "gamma") hp.gamma = parse_number<double>(key, value);
    else if (key == "m") hp.m = parse_number<std::size_t>(key, value);
    else if (key == "k") hp.k = parse_number<std::size_t>(key, value);
    else if (key == "alpha") hp.alpha = parse_number<double>(key, value);
    else if (key == "eta") hp.eta = parse_number<double>(key, value);
    else if (key == "b") hp.b = parse_number<std::size_t>(key, value);
    else if (key == "lambda_reg") hp.lambda_reg = parse_number<double>(key, value);
    else if (key == "lambda_neg") hp.lambda_neg = parse_number<double>(key, value);
    else if (key == "lambda_z") hp.lambda_z = parse_number<double>(key, value);
    else if (key == "init_variance") hp.init_variance = parse_number<double>(key, value);
    else if (key == "reg_exponent") hp.reg_exponent = parse_number<double>(key, value);
    else if (key == "model") c.model = parse_model_kind(value);
    else if (key == "epochs") c.epochs = parse_number<std::size_t>(key, value);
    else if (key == "eval_every") c.eval_every = parse_number<std::size_t>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "optimizer") c.optimizer = parse_optimizer(value);
    else if (key == "checkpoint") c.checkpoint = value;
    else if (key == "z_sampling") c.z_sampling = parse_bool(key, value);
    else if (key == "self_adversarial") c.self_adversarial = parse_bool(key, value);
    else if (key == "z_literal_anchor") c.z_literal_anchor = parse_bool(key, value);
    else if (key == "filter") c.filter = parse_filter_mode(value);
    else if (key == "threads") c.threads = parse_number<std::size_t>(key, value);
    else throw ConfigError("unknown key '" + key + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

struct TrainArgs {
  std::string data;
  std::string config;
  std::string log;
  std::string out;
  bool dry_run = false;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string split = "test";
  std::string filter = "all-splits";
  std::size_t threads = 0;
  std::string out;
  std::string ranks;
  std::string format = "json";
  std::string classify_test;
  std::string classify_valid;
};

struct ZStatsArgs {
  std::string data;
  std::string split = "test";
  std::size_t threads = 0;
  std::string out;
  std::string csv;
  std::string format = "json";
};

struct VerifyArgs {
  std::uint64_t seed = 0;
  std::size_t dim = 4;
  int trials = 50;
  std::string data;
  std::string checkpoint;
  std::string out;
};

std::string key_help(const std::string& key) {
  static const std::map<std::string, std::string> help = {
      {"d", "Embedding dimension (matrix size for mquine/mquade)"},
      {"gamma", "Margin"},
      {"m", "Negatives per positive"},
      {"k", "Z-samples per positive (0 disables)"},
      {"alpha", "Self-adversarial temperature"},
      {"eta", "Learning rate"},
      {"b", "Positives per optimizer step"},
      {"lambda_reg", "Regularization weight"},
      {"lambda_neg", "Negative term weight"},
      {"lambda_z", "Z term weight"},
      {"init_variance", "Variance of the entity initialization (matrix models)"},
      {"reg_exponent", "Exponent p of the ||X||_F^p regularizer"},
      {"model", "Score function"},
      {"epochs", "Training epochs"},
      {"eval_every", "Validate every N epochs (0 = never)"},
      {"seed", "Seed for every random stream"},
      {"optimizer", "adam or sgd"},
      {"checkpoint", "Where to write the best checkpoint"},
      {"z_sampling", "Enable Z-sampling (true/false)"},
      {"self_adversarial", "Self-adversarial negative weights (true/false)"},
      {"z_literal_anchor", "Anchor Z-patterns at the positive's own tail (true/false)"},
      {"filter", "Candidate filter used for validation"},
      {"threads", "Worker threads (0 = all cores)"},
  };
  const auto it = help.find(key);
  return it == help.end() ? std::string{} : it->second;
}

std::vector<std::string> split_names() { return {"train", "valid", "test"}; }
std::vector<std::string> filter_names() { return {"all-splits", "train-only", "none"}; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

TrainConfig resolve_train_config(const TrainArgs& a) {
  TrainConfig c;
  std::map<std::string, std::string> settings;
  if (!a.config.empty()) settings = read_config(a.config);
  for (const auto& [key, opt] : a.options) {
    if (opt->count() > 0) settings[key] = a.values.at(key);
  }
  // Apply in key order so that the result does not depend on map layout.
  for (const auto& key : config_keys()) {
    if (const auto it = settings.find(key); it != settings.end()) apply_setting(c, key, it->second);
  }
  try {
    c.validate();
    c.hyper.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const TrainConfig config = resolve_train_config(a);
  if (a.dry_run) {
    out << to_json(config).dump(2) << '\n';
    return kExitOk;
  }
  const auto kg = load_dataset(a.data, &err);
  const std::string log_path = a.log.empty() ? config.checkpoint + ".log.jsonl" : a.log;
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + log_path);

  const bool has_valid = !kg.valid().empty();
  auto on_epoch = [&](const EpochRecord& rec) {
    const bool due = rec.epoch == config.epochs ||
                     (config.eval_every > 0 && rec.epoch % config.eval_every == 0);
    if (rec.valid || (!has_valid && due)) log << log_line(rec) << '\n' << std::flush;
  };
  const auto result = fit(kg, config, on_epoch);
  save_checkpoint(config.checkpoint, result.best, kg);
  err << "checkpoint written to " << config.checkpoint << " (epoch " << result.best_epoch
      << ")\n";

  if (!has_valid) {
    out << "no validation triples; final evaluation skipped\n";
    return kExitOk;
  }
  const auto report =
      evaluate(result.best, kg, Split::valid, EvalOptions{config.filter, config.threads});
  out << eval_table(report);
  if (!a.out.empty()) write_file(a.out, to_json(report).dump(2) + '\n');
  return kExitOk;
}

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto kg = load_dataset(a.data, &err);
  const auto ckpt = load_checkpoint(a.checkpoint);
  require_matches(ckpt, kg);
  const auto report = evaluate(ckpt.state, kg, parse_split(a.split),
                               EvalOptions{parse_filter_mode(a.filter), a.threads});
  Json j = to_json(report);
  std::optional<ClassifReport> classif;
  if (!a.classify_test.empty()) {
    const auto test = load_labeled(a.classify_test, kg);
    const auto valid = load_labeled(a.classify_valid, kg);
    classif = classify(ckpt.state, test, valid);
    j["classification"] = to_json(*classif, kg);
  }
  if (!a.ranks.empty()) {
    std::ofstream os(a.ranks, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + a.ranks);
    write_rank_csv(os, report, kg);
  }
  if (!a.out.empty()) write_file(a.out, j.dump(2) + '\n');
  if (a.format == "table" || !a.out.empty()) {
    out << eval_table(report);
    if (classif) {
      out << "classification accuracy " << classif->accuracy << "  f1 " << classif->f1 << '\n';
    }
  } else {
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

int run_zstats(const ZStatsArgs& a, std::ostream& out, std::ostream& err) {
  const auto kg = load_dataset(a.data, &err);
  const auto report = case_split(kg, parse_split(a.split), a.threads);
  const Json j = to_json(report, kg);
  if (!a.csv.empty()) {
    std::ofstream os(a.csv, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + a.csv);
    write_zstats_csv(os, report, kg);
  }
  if (!a.out.empty()) write_file(a.out, j.dump(2) + '\n');
  if (a.format == "table" || !a.out.empty()) {
    out << zstats_table(report);
  } else {
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

int run_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  std::mt19937_64 rng(a.seed);
  auto results = construction_suite(static_cast<Eigen::Index>(a.dim), a.trials, rng);
  const bool counterexample_ok = counterexample_selftest();
  Json j;
  j["no_z_paradox_counterexample"] = counterexample_ok;
  j["constructions"] = Json::array();
  for (const auto& r : results) j["constructions"].push_back(to_json(r));

  if (!a.checkpoint.empty()) {
    const auto kg = load_dataset(a.data, &err);
    const auto ckpt = load_checkpoint(a.checkpoint);
    require_matches(ckpt, kg);
    if (ckpt.state.kind != ModelKind::mquine) {
      throw std::runtime_error("relation checks need an mquine checkpoint");
    }
    Json rels = Json::object();
    for (RelationId r = 0; r < kg.num_relations(); ++r) {
      const auto rel = ckpt.state.relation_matrices(r);
      std::vector<PatternCheckResult> rr{check_symmetry(rel), check_asymmetry(rel)};
      for (const auto& c : check_capacity(rel)) rr.push_back(c);
      Json arr = Json::array();
      for (const auto& c : rr) arr.push_back(to_json(c));
      rels[kg.relations().name(r)] = arr;
      out << "relation " << kg.relations().name(r) << '\n' << pattern_table(rr);
    }
    j["relations"] = rels;
  }

  out << "constructions (sufficient conditions; \"not satisf.\" says only that the "
         "construction failed)\n"
      << pattern_table(results) << "counterexample with three zero links and s(e1,r,e4) = 1: "
      << (counterexample_ok ? "reproduced" : "FAILED") << '\n';
  if (!a.out.empty()) write_file(a.out, j.dump(2) + '\n');

  bool all = counterexample_ok;
  for (const auto& r : results) all = all && r.satisfied;
  return all ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MQuinE knowledge graph embedding: training, evaluation and Z-pattern analysis",
               "mquine"};
  app.require_subcommand(1, 1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--data", ta.data, "Dataset directory (train.txt, valid.txt, test.txt)");
  train->add_option("--config", ta.config, "key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  train->add_option("--log", ta.log, "JSON-lines training log (default <checkpoint>.log.jsonl)");
  train->add_option("--out", ta.out, "Write the final validation report as JSON");
  train->add_flag("--dry-run", ta.dry_run, "Print the resolved configuration and exit");
  for (const auto& key : config_keys()) {
    const std::string flags = key == "d" ? "--d,--dim" : "--" + key;
    auto* opt = train->add_option(flags, ta.values[key], key_help(key));
    if (key == "model") opt->check(CLI::IsMember(model_kind_names()));
    if (key == "filter") opt->check(CLI::IsMember(filter_names()));
    if (key == "optimizer") opt->check(CLI::IsMember({"adam", "sgd"}));
    ta.options[key] = opt;
  }

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Filtered link prediction on a split");
  eval->add_option("--data", ea.data, "Dataset directory")->required();
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", ea.split)->check(CLI::IsMember(split_names()));
  eval->add_option("--filter", ea.filter)->check(CLI::IsMember(filter_names()));
  eval->add_option("--threads", ea.threads, "Worker threads (0 = all cores)");
  eval->add_option("--out", ea.out, "Write the JSON report here (stdout gets the table)");
  eval->add_option("--ranks", ea.ranks, "Per-query rank CSV");
  eval->add_option("--format", ea.format, "stdout format")
      ->check(CLI::IsMember({"json", "table"}));
  auto* ct = eval->add_option("--classify-test", ea.classify_test,
                              "Labeled triples (h r t label) to classify");
  auto* cv = eval->add_option("--classify-valid", ea.classify_valid,
                              "Labeled triples used to pick thresholds");
  ct->needs(cv);
  cv->needs(ct);

  ZStatsArgs za;
  auto* zstats = app.add_subcommand("zstats", "Z-values, rank_Z and the easy/neutral/hard split");
  zstats->add_option("--data", za.data, "Dataset directory")->required();
  zstats->add_option("--split", za.split)->check(CLI::IsMember(split_names()));
  zstats->add_option("--threads", za.threads, "Worker threads (0 = all cores)");
  zstats->add_option("--out", za.out, "Write the JSON report here (stdout gets the table)");
  zstats->add_option("--csv", za.csv, "Per-triple CSV");
  zstats->add_option("--format", za.format, "stdout format")
      ->check(CLI::IsMember({"json", "table"}));

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Check the relation pattern constructions");
  verify->add_option("--seed", va.seed);
  verify->add_option("--dim", va.dim)->check(CLI::Range(2, 64));
  verify->add_option("--trials", va.trials)->check(CLI::Range(1, 100000));
  auto* vd = verify->add_option("--data", va.data, "Dataset of the checkpoint");
  auto* vc = verify->add_option("--checkpoint", va.checkpoint,
                                "Also check the relations of a trained mquine checkpoint");
  vc->needs(vd);
  verify->add_option("--out", va.out, "Write the JSON report here");

  std::uint64_t st_seed = 0;
  auto* selftest = app.add_subcommand("selftest", "Counterexample and gradient checks");
  selftest->add_option("--seed", st_seed);

  try {
    app.parse(argc, argv);
    if (train->parsed() && ta.data.empty() && !ta.dry_run) {
      throw CLI::RequiredError("--data");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return run_train(ta, out, err);
    if (eval->parsed()) return run_eval(ea, out, err);
    if (zstats->parsed()) return run_zstats(za, out, err);
    if (verify->parsed()) return run_verify(va, out, err);
    if (selftest->parsed()) return run_selftest(out, st_seed) ? kExitOk : kExitRuntime;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mquine
