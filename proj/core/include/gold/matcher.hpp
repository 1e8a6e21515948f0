#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gold/corpus.hpp"
#include "gold/embedding.hpp"
#include "json.hpp"

namespace gold {

// 1 - cos(v, w), clamped to [0, 2]. A zero vector on either side is defined
// as the maximum distance 2.0 so degenerate utterances never rank as matches.
double cosine_distance(std::span<const double> v, std::span<const double> w);
double cosine_distance(const EmbeddingVector& v, const EmbeddingVector& w);

struct IndexItem {
  std::string id;  // dialogue id, or "<dialogue id>#<turn index>" for multi-user-turn records
  std::string text;
};

// Immutable embedding index over every user utterance of a source pool.
class SourceIndex {
 public:
  static SourceIndex build(std::span<const Dialogue> source, const Embedder& backend,
                           unsigned threads = 1);
  static SourceIndex build(const DatasetSplit& source, const Embedder& backend, unsigned threads = 1);
  // Index over raw vectors, for callers that already hold embeddings.
  static SourceIndex from_vectors(std::vector<IndexItem> items, std::vector<EmbeddingVector> vectors);

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const IndexItem& item(std::size_t i) const { return items_.at(i); }
  std::span<const double> vector(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  double norm(std::size_t i) const { return norms_.at(i); }
  const IndexItem* find(std::string_view id) const;

 private:
  std::vector<IndexItem> items_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::size_t dim_ = 0;
};

struct Match {
  std::string source_id;
  double distance = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchResult {
  std::string seed_id;
  std::vector<Match> matches;  // ascending distance, ties by ascending id
  std::size_t requested = 0;
};

// Exact k nearest neighbors of `query` over the full index.
MatchResult nearest(std::string seed_id, const EmbeddingVector& query, const SourceIndex& index,
                    std::size_t k);
// Embeds the seed's final user turn with `backend` and searches.
MatchResult nearest(const Dialogue& seed, const SourceIndex& index, std::size_t k, const Embedder& backend);

nlohmann::json to_json(const MatchResult& r);
MatchResult match_result_from_json(const nlohmann::json& j);
void write_match_cache(const std::filesystem::path& path, std::span<const MatchResult> results);
std::vector<MatchResult> read_match_cache(const std::filesystem::path& path);

}  // namespace gold
