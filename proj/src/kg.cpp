#include "kghait/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "kghait/error.hpp"

namespace kghait {

std::uint32_t Vocabulary::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

KnowledgeGraph::KnowledgeGraph(Vocabularies vocab, std::vector<Triple> triples)
    : vocab_(std::move(vocab)), triples_(std::move(triples)) {
  build_indices();
}

void KnowledgeGraph::build_indices() {
  const std::size_t n = num_entities();
  in_offsets_.assign(n + 1, 0);
  out_offsets_.assign(n + 1, 0);
  for (const auto& t : triples_) {
    if (t.head >= n || t.tail >= n || t.relation >= num_relations()) {
      throw DataError("triple id out of vocabulary range");
    }
    ++out_offsets_[t.head + 1];
    ++in_offsets_[t.tail + 1];
  }
  std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());
  std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());

  in_list_.assign(triples_.size(), 0);
  out_list_.assign(triples_.size(), 0);
  std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
  std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const auto& t = triples_[i];
    out_list_[out_fill[t.head]++] = static_cast<TripleIndex>(i);
    in_list_[in_fill[t.tail]++] = static_cast<TripleIndex>(i);
  }
}

std::string LoadReport::to_text() const {
  std::ostringstream os;
  os << "entities\t" << num_entities << '\n'
     << "relations\t" << num_relations << '\n'
     << "train\t" << num_train << '\n'
     << "valid\t" << num_valid << '\n'
     << "test\t" << num_test << '\n'
     << "orphan_entities\t" << orphan_entities.size() << '\n';
  for (const auto& e : orphan_entities) os << "  entity\t" << e << '\n';
  os << "orphan_relations\t" << orphan_relations.size() << '\n';
  for (const auto& r : orphan_relations) os << "  relation\t" << r << '\n';
  return os.str();
}

Triple parse_triple_line(std::string_view line, Vocabularies& vocab,
                         std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string_view fields[3];
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    const auto field = line.substr(start, tab == std::string_view::npos ? tab : tab - start);
    if (count < 3) fields[count] = field;
    ++count;
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (count != 3) {
    throw ParseError(line_number, "expected 3 tab-separated fields, found " +
                                      std::to_string(count));
  }
  for (const auto& f : fields) {
    if (f.empty()) throw ParseError(line_number, "empty field");
  }
  Triple t;
  t.head = vocab.entities.intern(fields[0]);
  t.relation = vocab.relations.intern(fields[1]);
  t.tail = vocab.entities.intern(fields[2]);
  return t;
}

std::vector<Triple> read_triples(const std::filesystem::path& path, Vocabularies& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file: " + path.string());
  std::vector<Triple> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    try {
      out.push_back(parse_triple_line(line, vocab, line_number));
    } catch (const ParseError& e) {
      throw ParseError(line_number, path.string() + ": " + e.detail());
    }
  }
  return out;
}

void write_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                   const Vocabularies& vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write triple file: " + path.string());
  for (const auto& t : triples) {
    out << vocab.entities.name(t.head) << '\t' << vocab.relations.name(t.relation) << '\t'
        << vocab.entities.name(t.tail) << '\n';
  }
}

Dataset make_dataset(Vocabularies vocab, std::vector<Triple> train,
                     std::vector<Triple> valid, std::vector<Triple> test) {
  Dataset ds;
  LoadReport& rep = ds.report;
  rep.num_entities = vocab.entities.size();
  rep.num_relations = vocab.relations.size();
  rep.num_train = train.size();
  rep.num_valid = valid.size();
  rep.num_test = test.size();

  std::vector<bool> seen_entity(vocab.entities.size(), false);
  std::vector<bool> seen_relation(vocab.relations.size(), false);
  for (const auto& t : train) {
    seen_entity[t.head] = seen_entity[t.tail] = true;
    seen_relation[t.relation] = true;
  }
  for (std::size_t e = 0; e < seen_entity.size(); ++e) {
    if (!seen_entity[e]) rep.orphan_entities.push_back(vocab.entities.name(static_cast<EntityId>(e)));
  }
  for (std::size_t r = 0; r < seen_relation.size(); ++r) {
    if (!seen_relation[r]) {
      rep.orphan_relations.push_back(vocab.relations.name(static_cast<RelationId>(r)));
    }
  }

  ds.graph = KnowledgeGraph(std::move(vocab), train);
  ds.train = std::move(train);
  ds.valid = std::move(valid);
  ds.test = std::move(test);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& train_path,
                     const std::filesystem::path& valid_path,
                     const std::filesystem::path& test_path) {
  Vocabularies vocab;
  auto train = read_triples(train_path, vocab);
  std::vector<Triple> valid;
  std::vector<Triple> test;
  if (!valid_path.empty()) valid = read_triples(valid_path, vocab);
  if (!test_path.empty()) test = read_triples(test_path, vocab);
  return make_dataset(std::move(vocab), std::move(train), std::move(valid), std::move(test));
}

Dataset split_dataset(std::span<const Triple> triples, const Vocabularies& vocab,
                      double train_frac, std::optional<double> valid_frac,
                      std::uint64_t seed) {
  auto in_open_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_open_unit(train_frac)) {
    throw ConfigError("train fraction must lie in (0, 1), got " + std::to_string(train_frac));
  }
  if (valid_frac && (!in_open_unit(*valid_frac) || train_frac + *valid_frac > 1.0)) {
    throw ConfigError("valid fraction must lie in (0, 1) with train + valid <= 1");
  }

  std::vector<Triple> shuffled(triples.begin(), triples.end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  const std::size_t n = shuffled.size();
  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(train_frac * n)));
  const std::size_t rest = n - n_train;
  const std::size_t n_valid =
      valid_frac ? std::min(rest, static_cast<std::size_t>(std::llround(*valid_frac * n))) : rest / 2;

  auto first = shuffled.begin();
  std::vector<Triple> train(first, first + n_train);
  std::vector<Triple> valid(first + n_train, first + n_train + n_valid);
  std::vector<Triple> test(first + n_train + n_valid, shuffled.end());
  return make_dataset(vocab, std::move(train), std::move(valid), std::move(test));
}

}  // namespace kghait
