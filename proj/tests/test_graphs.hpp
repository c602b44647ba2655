#pragma once

// Small graph builders shared by the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kghait/kg.hpp"

namespace kghait::testing {

inline Vocabularies numbered_vocab(std::size_t num_entities, std::size_t num_relations) {
  Vocabularies v;
  for (std::size_t i = 0; i < num_entities; ++i) v.entities.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < num_relations; ++i) v.relations.intern("r" + std::to_string(i));
  return v;
}

inline KnowledgeGraph make_graph(std::size_t num_entities, std::size_t num_relations,
                                 std::vector<Triple> triples) {
  return KnowledgeGraph(numbered_vocab(num_entities, num_relations), std::move(triples));
}

/// Seeded random multigraph: 2..max_entities entities, 1..max_relations
/// relations, 0..max_triples triples (self-loops and duplicates allowed).
inline KnowledgeGraph random_graph(std::uint64_t seed, std::size_t max_entities = 12,
                                   std::size_t max_relations = 3,
                                   std::size_t max_triples = 25) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const std::size_t ne = pick(2, max_entities);
  const std::size_t nr = pick(1, max_relations);
  const std::size_t nt = pick(0, max_triples);
  std::vector<Triple> ts;
  for (std::size_t i = 0; i < nt; ++i) {
    ts.push_back({static_cast<EntityId>(pick(0, ne - 1)), static_cast<RelationId>(pick(0, nr - 1)),
                  static_cast<EntityId>(pick(0, ne - 1))});
  }
  return make_graph(ne, nr, std::move(ts));
}

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("kghait_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace kghait::testing
