#include "kghait/similarity.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "kghait/error.hpp"

namespace kghait {
namespace {

std::vector<std::string> split_tabs(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

GroupFile read_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open groups file: " + path.string());
  GroupFile out;
  std::vector<std::unordered_set<std::string>> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(line_number, path.string() + ": expected 'group<TAB>entity'");
    }
    auto it = std::find_if(out.groups.begin(), out.groups.end(),
                           [&](const EntityGroup& g) { return g.name == fields[0]; });
    if (it == out.groups.end()) {
      out.groups.push_back({fields[0], {}});
      seen.emplace_back();
      it = out.groups.end() - 1;
    }
    auto& members = seen[static_cast<std::size_t>(it - out.groups.begin())];
    if (!members.insert(fields[1]).second) {
      out.warnings.push_back(fmt::format("line {}: duplicate entity '{}' in group '{}' ignored",
                                         line_number, fields[1], fields[0]));
      continue;
    }
    it->members.push_back(fields[1]);
  }
  if (out.groups.empty()) throw ConfigError("groups file is empty: " + path.string());
  return out;
}

AliasMap read_aliases(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alias file: " + path.string());
  AliasMap out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2) throw ParseError(line_number, path.string() + ": expected 'name<TAB>alias'");
    out.emplace(fields[0], fields[1]);
  }
  return out;
}

SimilarityReport similarity_report(const Matrix& vectors, const std::vector<EntityGroup>& groups,
                                   const Vocabulary& vocab, const AliasMap& aliases) {
  if (groups.empty()) throw ConfigError("similarity needs at least one group");
  // Display name -> lowest vocabulary id carrying it.
  std::unordered_map<std::string, EntityId> by_alias;
  for (const auto& [name, alias] : aliases) {
    if (const auto id = vocab.find(name)) {
      auto [it, inserted] = by_alias.emplace(alias, *id);
      if (!inserted) it->second = std::min(it->second, *id);
    }
  }

  SimilarityReport rep;
  std::vector<EntityId> ids;
  std::vector<std::string> missing;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    rep.group_names.push_back(groups[g].name);
    for (const auto& name : groups[g].members) {
      std::optional<EntityId> id = vocab.find(name);
      if (!id) {
        if (auto it = by_alias.find(name); it != by_alias.end()) id = it->second;
      }
      if (!id) {
        missing.push_back(name);
        continue;
      }
      ids.push_back(*id);
      rep.names.push_back(name);
      rep.group_of.push_back(g);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("unresolved entity names: " + list);
  }
  std::string zero;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vectors.rows()) throw DataError("entity '" + rep.names[i] + "' has no vector");
    if (l2_norm(vectors.row(ids[i])) == 0.0) zero += (zero.empty() ? "" : ", ") + rep.names[i];
  }
  if (!zero.empty()) throw NumericError("zero vectors, cosine undefined: " + zero);

  const std::size_t n = ids.size();
  rep.matrix = Matrix(n, n);
  std::vector<double> within_sum(groups.size(), 0.0);
  std::vector<std::size_t> within_count(groups.size(), 0);
  double cross_sum = 0.0;
  std::size_t cross_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rep.matrix(i, i) = cosine(vectors.row(ids[i]), vectors.row(ids[i]));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = cosine(vectors.row(ids[i]), vectors.row(ids[j]));
      rep.matrix(i, j) = c;
      rep.matrix(j, i) = c;
      if (rep.group_of[i] == rep.group_of[j]) {
        within_sum[rep.group_of[i]] += c;
        ++within_count[rep.group_of[i]];
      } else {
        cross_sum += c;
        ++cross_count;
      }
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    rep.within_group_means.push_back(
        within_count[g] ? within_sum[g] / static_cast<double>(within_count[g]) : 1.0);
  }
  rep.cross_group_mean = cross_count ? cross_sum / static_cast<double>(cross_count) : 0.0;
  return rep;
}

void write_similarity_csv(const std::filesystem::path& path, const SimilarityReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV: " + path.string());
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  out << "entity";
  for (const auto& name : report.names) out << ',' << quote(name);
  out << '\n';
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    out << quote(report.names[i]);
    for (std::size_t j = 0; j < report.names.size(); ++j) {
      out << fmt::format(",{:.6f}", report.matrix(i, j));
    }
    out << '\n';
  }
}

std::string similarity_summary(const SimilarityReport& report) {
  std::string out;
  for (std::size_t g = 0; g < report.group_names.size(); ++g) {
    out += fmt::format("within[{}] = {:.4f}\n", report.group_names[g], report.within_group_means[g]);
  }
  out += fmt::format("cross = {:.4f}\n", report.cross_group_mean);
  return out;
}

}  // namespace kghait
