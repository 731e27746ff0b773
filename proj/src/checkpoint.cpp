#include "mquine/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace mquine {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("truncated checkpoint");
  return v;
}

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

std::filesystem::path sidecar(const std::filesystem::path& p) {
  auto s = p;
  s += ".json";
  return s;
}

nlohmann::ordered_json hyper_to_json(const Hyperparams& h) {
  nlohmann::ordered_json j;
  j["d"] = h.d;
  j["gamma"] = h.gamma;
  j["m"] = h.m;
  j["k"] = h.k;
  j["alpha"] = h.alpha;
  j["eta"] = h.eta;
  j["b"] = h.b;
  j["lambda_reg"] = h.lambda_reg;
  j["lambda_neg"] = h.lambda_neg;
  j["lambda_z"] = h.lambda_z;
  j["init_variance"] = h.init_variance;
  j["reg_exponent"] = h.reg_exponent;
  return j;
}

Hyperparams hyper_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.d = j.value("d", h.d);
  h.gamma = j.value("gamma", h.gamma);
  h.m = j.value("m", h.m);
  h.k = j.value("k", h.k);
  h.alpha = j.value("alpha", h.alpha);
  h.eta = j.value("eta", h.eta);
  h.b = j.value("b", h.b);
  h.lambda_reg = j.value("lambda_reg", h.lambda_reg);
  h.lambda_neg = j.value("lambda_neg", h.lambda_neg);
  h.lambda_z = j.value("lambda_z", h.lambda_z);
  h.init_variance = j.value("init_variance", h.init_variance);
  h.reg_exponent = j.value("reg_exponent", h.reg_exponent);
  return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState& state,
                     const KnowledgeGraph& kg) {
  state.validate_layout();
  if (state.num_entities() != kg.num_entities() || state.num_relations() != kg.num_relations()) {
    throw CheckpointError("model tables do not match the dataset vocabularies");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write("MQ5E", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(state.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(state.dim));
  put<std::uint64_t>(out, state.num_entities());
  put<std::uint64_t>(out, state.num_relations());
  // Row-major tables are contiguous in declared order.
  out.write(reinterpret_cast<const char*>(state.entities.data()),
            static_cast<std::streamsize>(state.entities.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(state.relations.data()),
            static_cast<std::streamsize>(state.relations.size() * sizeof(double)));
  if (!out) throw CheckpointError("failed writing " + path.string());

  nlohmann::ordered_json meta;
  meta["format"] = "MQ5E";
  meta["version"] = kCheckpointVersion;
  meta["model"] = std::string(to_string(state.kind));
  meta["dim"] = state.dim;
  meta["num_entities"] = state.num_entities();
  meta["num_relations"] = state.num_relations();
  meta["entity_vocab_hash"] = hex(kg.entities().hash());
  meta["relation_vocab_hash"] = hex(kg.relations().hash());
  meta["hyperparams"] = hyper_to_json(state.hyper);
  std::ofstream js(sidecar(path), std::ios::trunc);
  js << meta.dump(2) << '\n';
  if (!js) throw CheckpointError("cannot write " + sidecar(path).string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::memcmp(magic.data(), "MQ5E", 4) != 0) {
    throw CheckpointError(path.string() + " is not an MQ5E checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind = get<std::uint32_t>(in);
  if (kind >= model_kind_names().size()) throw CheckpointError("unknown model tag");
  Checkpoint ck;
  ck.state.kind = static_cast<ModelKind>(kind);
  ck.state.dim = get<std::uint32_t>(in);
  const auto ne = get<std::uint64_t>(in);
  const auto nr = get<std::uint64_t>(in);
  ck.state.entities.resize(static_cast<Eigen::Index>(ne),
                           static_cast<Eigen::Index>(
                               ModelState::entity_width(ck.state.kind, ck.state.dim)));
  ck.state.relations.resize(static_cast<Eigen::Index>(nr),
                            static_cast<Eigen::Index>(
                                ModelState::relation_width(ck.state.kind, ck.state.dim)));
  in.read(reinterpret_cast<char*>(ck.state.entities.data()),
          static_cast<std::streamsize>(ck.state.entities.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(ck.state.relations.data()),
          static_cast<std::streamsize>(ck.state.relations.size() * sizeof(double)));
  if (!in) throw CheckpointError("truncated checkpoint " + path.string());

  std::ifstream js(sidecar(path));
  if (!js) throw CheckpointError("missing checkpoint sidecar " + sidecar(path).string());
  nlohmann::json meta;
  try {
    js >> meta;
    ck.state.hyper = hyper_from_json(meta.at("hyperparams"));
    ck.entity_hash = std::stoull(meta.at("entity_vocab_hash").get<std::string>(), nullptr, 16);
    ck.relation_hash =
        std::stoull(meta.at("relation_vocab_hash").get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    throw CheckpointError("bad checkpoint sidecar: " + std::string(e.what()));
  }
  ck.state.hyper.d = ck.state.dim;
  return ck;
}

void require_matches(const Checkpoint& ckpt, const KnowledgeGraph& kg) {
  if (ckpt.entity_hash != kg.entities().hash() || ckpt.relation_hash != kg.relations().hash() ||
      ckpt.state.num_entities() != kg.num_entities() ||
      ckpt.state.num_relations() != kg.num_relations()) {
    throw CheckpointError("checkpoint does not match dataset");
  }
}

}  // namespace mquine
