#include "mquine/kgdata.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mquine {

Vocab::Vocab(std::vector<std::string> names) {
  for (auto& n : names) {
    if (find(n)) throw LoadError("duplicate vocabulary name '" + n + "'");
    intern(n);
  }
}

std::uint32_t Vocab::intern(std::string_view name) {
  std::string key(name);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<std::uint32_t> Vocab::find(std::string_view name) const {
  if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
  return std::nullopt;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ull;
  };
  for (const auto& n : names_) {
    for (unsigned char c : n) mix(c);
    mix('\n');
  }
  return h;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

namespace {

std::size_t dedup_in_place(std::vector<Triple>& xs) {
  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(xs.size());
  std::vector<Triple> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    if (seen.insert(x).second) out.push_back(x);
  }
  const std::size_t dropped = xs.size() - out.size();
  xs = std::move(out);
  return dropped;
}

}  // namespace

KnowledgeGraph::KnowledgeGraph(Vocab entities, Vocab relations, std::vector<Triple> train,
                               std::vector<Triple> valid, std::vector<Triple> test)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      train_(std::move(train)),
      valid_(std::move(valid)),
      test_(std::move(test)) {
  for (const auto* split : {&train_, &valid_, &test_}) {
    for (const auto& x : *split) check_ids(x);
  }
  stats_.duplicates_train = dedup_in_place(train_);
  stats_.duplicates_valid = dedup_in_place(valid_);
  stats_.duplicates_test = dedup_in_place(test_);

  observed_.reserve(train_.size());
  for (const auto& x : train_) {
    observed_.insert(x);
    by_hr_[key(x.h, x.r)].push_back(x.t);
    by_rt_[key(x.r, x.t)].push_back(x.h);
  }
  for (auto& [_, v] : by_hr_) std::sort(v.begin(), v.end());
  for (auto& [_, v] : by_rt_) std::sort(v.begin(), v.end());
}

KnowledgeGraph KnowledgeGraph::from_named(std::span<const NamedTriple> train,
                                          std::span<const NamedTriple> valid,
                                          std::span<const NamedTriple> test) {
  Vocab ents, rels;
  auto convert = [&](std::span<const NamedTriple> xs) {
    std::vector<Triple> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
      const auto h = ents.intern(x[0]);
      const auto r = rels.intern(x[1]);
      const auto t = ents.intern(x[2]);
      out.push_back({h, r, t});
    }
    return out;
  };
  auto tr = convert(train);
  auto va = convert(valid);
  auto te = convert(test);
  return KnowledgeGraph(std::move(ents), std::move(rels), std::move(tr), std::move(va),
                        std::move(te));
}

const std::vector<Triple>& KnowledgeGraph::split(Split s) const {
  switch (s) {
    case Split::train: return train_;
    case Split::valid: return valid_;
    case Split::test: return test_;
  }
  return train_;
}

std::span<const EntityId> KnowledgeGraph::neighbors_out(EntityId e, RelationId r) const {
  if (auto it = by_hr_.find(key(e, r)); it != by_hr_.end()) return it->second;
  return {};
}

std::span<const EntityId> KnowledgeGraph::neighbors_in(EntityId e, RelationId r) const {
  if (auto it = by_rt_.find(key(r, e)); it != by_rt_.end()) return it->second;
  return {};
}

void KnowledgeGraph::check_ids(const Triple& x) const {
  if (x.h >= entities_.size() || x.t >= entities_.size() || x.r >= relations_.size()) {
    throw std::out_of_range("triple (" + std::to_string(x.h) + ", " + std::to_string(x.r) +
                            ", " + std::to_string(x.t) + ") has an id outside the vocabulary");
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw LoadError("cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::optional<Vocab> read_dict(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) return std::nullopt;
  const auto lines = read_lines(file);
  std::vector<std::pair<long long, std::string>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_tabs(lines[i]);
    long long id = -1;
    if (f.size() == 2) {
      std::istringstream ss(f[0]);
      ss >> id;
      if (!ss || !ss.eof()) id = -1;
    }
    if (id < 0) {
      throw LoadError(file.string() + ":" + std::to_string(i + 1) +
                      ": expected 'id<TAB>name'");
    }
    rows.emplace_back(id, f[1]);
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<long long>(i)) {
      throw LoadError(file.string() + ": ids must be contiguous from 0");
    }
    names.push_back(rows[i].second);
  }
  return Vocab(std::move(names));
}

}  // namespace

KnowledgeGraph load_dataset(const std::filesystem::path& dir, std::ostream* log) {
  auto ent_dict = read_dict(dir / "entities.dict");
  auto rel_dict = read_dict(dir / "relations.dict");
  const bool fixed_ents = ent_dict.has_value();
  const bool fixed_rels = rel_dict.has_value();
  Vocab ents = fixed_ents ? std::move(*ent_dict) : Vocab{};
  Vocab rels = fixed_rels ? std::move(*rel_dict) : Vocab{};

  auto resolve = [](Vocab& v, bool fixed, const std::string& name, const std::string& where,
                    const char* dict) {
    if (!fixed) return v.intern(name);
    if (auto id = v.find(name)) return *id;
    throw LoadError(where + ": '" + name + "' is not listed in " + dict);
  };

  std::array<std::vector<Triple>, 3> splits;
  const std::array<const char*, 3> files = {"train.txt", "valid.txt", "test.txt"};
  for (std::size_t s = 0; s < 3; ++s) {
    const auto path = dir / files[s];
    if (!std::filesystem::exists(path)) throw LoadError("missing dataset file " + path.string());
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto where = path.string() + ":" + std::to_string(i + 1);
      const auto f = split_tabs(lines[i]);
      if (f.size() != 3) {
        throw LoadError(where + ": expected 3 tab-separated fields, got " +
                        std::to_string(f.size()));
      }
      const auto h = resolve(ents, fixed_ents, f[0], where, "entities.dict");
      const auto r = resolve(rels, fixed_rels, f[1], where, "relations.dict");
      const auto t = resolve(ents, fixed_ents, f[2], where, "entities.dict");
      splits[s].push_back({h, r, t});
    }
  }

  KnowledgeGraph kg(std::move(ents), std::move(rels), std::move(splits[0]),
                    std::move(splits[1]), std::move(splits[2]));
  if (log != nullptr && kg.stats().total_duplicates() > 0) {
    const auto& st = kg.stats();
    *log << "warning: dropped duplicate triples (train " << st.duplicates_train << ", valid "
         << st.duplicates_valid << ", test " << st.duplicates_test << ")\n";
  }
  return kg;
}

void save_dataset(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_dict = [&](const Vocab& v, const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    for (std::size_t i = 0; i < v.size(); ++i) out << i << '\t' << v.name(i) << '\n';
    if (!out) throw LoadError("cannot write " + (dir / name).string());
  };
  write_dict(kg.entities(), "entities.dict");
  write_dict(kg.relations(), "relations.dict");
  for (auto s : {Split::train, Split::valid, Split::test}) {
    const auto path = dir / (std::string(to_string(s)) + ".txt");
    std::ofstream out(path, std::ios::binary);
    for (const auto& x : kg.split(s)) {
      out << kg.entities().name(x.h) << '\t' << kg.relations().name(x.r) << '\t'
          << kg.entities().name(x.t) << '\n';
    }
    if (!out) throw LoadError("cannot write " + path.string());
  }
}

std::vector<EntityId> unobserved_tails(const KnowledgeGraph& kg, EntityId h, RelationId r) {
  kg.check_ids({h, r, h});
  const auto seen = kg.neighbors_out(h, r);
  std::vector<EntityId> out;
  out.reserve(kg.num_entities() - seen.size());
  std::size_t j = 0;
  for (EntityId e = 0; e < kg.num_entities(); ++e) {
    if (j < seen.size() && seen[j] == e) {
      ++j;
      continue;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace mquine
