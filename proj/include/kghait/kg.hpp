#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kghait {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TripleIndex = std::uint32_t;

/// Ordered (head, relation, tail) identifier tuple.
struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

/// Bijection between names and dense ids, assigned in first-seen order.
class Vocabulary {
 public:
  /// Returns the id of `name`, assigning the next dense id if unseen.
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct Vocabularies {
  Vocabulary entities;
  Vocabulary relations;
};

/// Entity/relation vocabularies, a triple multiset, and the per-entity
/// in-coming / out-going triple indices (CSR layout, triple positions).
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(Vocabularies vocab, std::vector<Triple> triples);

  std::size_t num_entities() const noexcept { return vocab_.entities.size(); }
  std::size_t num_relations() const noexcept { return vocab_.relations.size(); }
  const Vocabularies& vocab() const noexcept { return vocab_; }
  const std::vector<Triple>& triples() const noexcept { return triples_; }

  /// Positions in triples() of the triples whose tail is `u`.
  std::span<const TripleIndex> in_triples(EntityId u) const {
    return {in_list_.data() + in_offsets_[u], in_offsets_[u + 1] - in_offsets_[u]};
  }
  /// Positions in triples() of the triples whose head is `u`.
  std::span<const TripleIndex> out_triples(EntityId u) const {
    return {out_list_.data() + out_offsets_[u], out_offsets_[u + 1] - out_offsets_[u]};
  }

  /// (Re)builds the in/out indices from the triple list.
  void build_indices();

 private:
  Vocabularies vocab_;
  std::vector<Triple> triples_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<std::size_t> out_offsets_{0};
  std::vector<TripleIndex> in_list_;
  std::vector<TripleIndex> out_list_;
};

/// Summary of a dataset load: split sizes and ids that never occur in the
/// training split (they have zero adjacency).
struct LoadReport {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::size_t num_train = 0;
  std::size_t num_valid = 0;
  std::size_t num_test = 0;
  std::vector<std::string> orphan_entities;
  std::vector<std::string> orphan_relations;

  std::string to_text() const;
};

/// Train/valid/test triples over one shared vocabulary. The graph and its
/// indices cover the training split only.
struct Dataset {
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
  KnowledgeGraph graph;
  LoadReport report;

  const Vocabularies& vocab() const noexcept { return graph.vocab(); }
  std::size_t num_entities() const noexcept { return graph.num_entities(); }
  std::size_t num_relations() const noexcept { return graph.num_relations(); }
};

/// Hashable set of id triples (deduplicated).
class TripleSet {
 public:
  TripleSet(std::size_t num_entities, std::size_t num_relations)
      : num_entities_(num_entities), num_relations_(num_relations) {}

  void insert(const Triple& t) { keys_.insert(key(t)); }
  void insert(std::span<const Triple> ts) {
    for (const auto& t : ts) insert(t);
  }
  void erase(const Triple& t) { keys_.erase(key(t)); }
  bool contains(const Triple& t) const { return keys_.contains(key(t)); }
  std::size_t size() const noexcept { return keys_.size(); }

 private:
  std::uint64_t key(const Triple& t) const {
    return (std::uint64_t{t.head} * num_relations_ + t.relation) * num_entities_ + t.tail;
  }

  std::size_t num_entities_;
  std::size_t num_relations_;
  std::unordered_set<std::uint64_t> keys_;
};

/// Parses "head\trelation\ttail"; unseen names get the next dense id.
/// Throws ParseError on anything but exactly three non-empty tab-separated
/// fields.
Triple parse_triple_line(std::string_view line, Vocabularies& vocab,
                         std::size_t line_number = 1);

/// Reads a whole triple file. Blank lines are skipped.
std::vector<Triple> read_triples(const std::filesystem::path& path, Vocabularies& vocab);

void write_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                   const Vocabularies& vocab);

/// Loads the three splits with a shared vocabulary (train first, then valid,
/// then test). Empty paths yield empty splits.
Dataset load_dataset(const std::filesystem::path& train_path,
                     const std::filesystem::path& valid_path,
                     const std::filesystem::path& test_path);

/// Assembles a Dataset from already-parsed splits and computes its report.
Dataset make_dataset(Vocabularies vocab, std::vector<Triple> train,
                     std::vector<Triple> valid, std::vector<Triple> test);

/// Seeded shuffle followed by contiguous slicing. When `valid_frac` is unset
/// the remainder after the training share is halved between valid and test
/// (valid gets the floor).
Dataset split_dataset(std::span<const Triple> triples, const Vocabularies& vocab,
                      double train_frac, std::optional<double> valid_frac,
                      std::uint64_t seed);

}  // namespace kghait
