#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "kghait/kg.hpp"
#include "kghait/matrix.hpp"

namespace kghait {

struct EntityGroup {
  std::string name;
  std::vector<std::string> members;
};

struct GroupFile {
  std::vector<EntityGroup> groups;
  std::vector<std::string> warnings;
};

/// Two-column TSV (group, entity name). Groups keep first-seen order;
/// repeated members are dropped with a warning. Empty file: ConfigError.
GroupFile read_groups(const std::filesystem::path& path);

/// Alternate display names: TSV of (vocabulary name, display name), e.g. an
/// entity2text file mapping Freebase ids to labels.
using AliasMap = std::unordered_map<std::string, std::string>;
AliasMap read_aliases(const std::filesystem::path& path);

struct SimilarityReport {
  std::vector<std::string> names;
  std::vector<std::size_t> group_of;
  std::vector<std::string> group_names;
  Matrix matrix;
  std::vector<double> within_group_means;
  double cross_group_mean = 0.0;
};

/// Pairwise cosines between the listed entities' rows of `vectors`.
/// Names are matched against the vocabulary, then against alias display
/// names. Unresolved names raise DataError listing all of them; a zero row
/// raises NumericError. Within-group means average the distinct pairs of a
/// group (1.0 for a single member); the cross mean averages pairs from
/// different groups.
SimilarityReport similarity_report(const Matrix& vectors, const std::vector<EntityGroup>& groups,
                                   const Vocabulary& vocab, const AliasMap& aliases = {});

void write_similarity_csv(const std::filesystem::path& path, const SimilarityReport& report);
std::string similarity_summary(const SimilarityReport& report);

}  // namespace kghait
