#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kghait/kg.hpp"
#include "kghait/model.hpp"

namespace kghait {

enum class Side { kHead, kTail };

/// Rank of the true entity among all |E| replacements on `side`.
/// Candidates that form a triple in `filter` (other than the test triple)
/// are skipped; ties with the true score count against it.
std::size_t filtered_rank(const EmbeddingSet& emb, const Triple& triple, Side side,
                          const TripleSet& filter);

struct RankedTriple {
  Triple triple;
  std::size_t head_rank = 0;
  std::size_t tail_rank = 0;
};

inline constexpr std::size_t kHitsAt[] = {1, 3, 10};

struct RankingReport {
  double mr = 0.0;
  double mrr = 0.0;
  std::map<std::size_t, double> hits;
  std::size_t num_ranks = 0;
  std::vector<RankedTriple> per_triple;
};

/// Metrics over an explicit list of ranks.
RankingReport report_from_ranks(std::span<const std::size_t> ranks);

/// Head- and tail-side filtered ranks for every test triple, averaged over
/// the 2 * |test| samples. Results do not depend on the worker count.
RankingReport evaluate(const EmbeddingSet& emb, std::span<const Triple> test,
                       const TripleSet& filter, std::size_t jobs = 0);

/// train + valid + test of the dataset as one deduplicated set.
TripleSet make_filter(const Dataset& dataset);

/// Aligned text table, one row per labelled report; hits as 3-decimal fractions.
std::string format_report_table(const std::vector<std::pair<std::string, RankingReport>>& rows);
void write_report_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, RankingReport>>& rows);
void write_ranks_csv(const std::filesystem::path& path, const RankingReport& report,
                     const Vocabularies& vocab);

}  // namespace kghait
