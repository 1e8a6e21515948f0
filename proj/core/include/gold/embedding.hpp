#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gold/corpus.hpp"
#include "json.hpp"

namespace gold {

enum class BackendKind { Tfidf, WordvecAvg, External, Random };

std::string_view to_string(BackendKind kind) noexcept;
// Accepts the canonical names plus the extraction-technique aliases
// "glove" (wordvec_avg) and "transformer"/"paraphrase" (external).
BackendKind backend_from_string(std::string_view name);

struct EmbeddingVector {
  std::vector<double> values;
  BackendKind backend = BackendKind::Tfidf;
  bool degenerate = false;  // no token of the input was known to the backend

  std::size_t dim() const noexcept { return values.size(); }
};

// Fitted TF-IDF vocabulary. Indices follow (document frequency desc, token asc).
class Vocabulary {
 public:
  static Vocabulary fit(std::span<const std::string> corpus, std::size_t max_features);
  static Vocabulary from_parts(std::vector<std::string> tokens, std::vector<std::size_t> df,
                               std::size_t n_docs);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }
  std::optional<std::size_t> index(std::string_view token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t df(std::size_t i) const { return df_.at(i); }
  double idf(std::size_t i) const { return idf_.at(i); }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_docs_ = 0;
};

Vocabulary fit_tfidf(std::span<const std::string> corpus, std::size_t max_features = 7000);
EmbeddingVector embed_tfidf(std::string_view text, const Vocabulary& vocab);

class WordVectorTable {
 public:
  // Whitespace-separated text: `token v1 ... v_dim` per line.
  static WordVectorTable load(const std::filesystem::path& path);
  static WordVectorTable from_entries(std::vector<std::pair<std::string, std::vector<double>>> entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }
  std::optional<std::span<const double>> find(std::string_view token) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> rows_;
  std::vector<double> data_;
};

EmbeddingVector embed_wordvec(std::string_view text, const WordVectorTable& table);
void write_word_vectors(const std::filesystem::path& path,
                        std::span<const std::pair<std::string, std::vector<double>>> entries);

// Precomputed vectors keyed by id. JSON lines: a `{"dim": N}` header followed
// by `{"id": ..., "vector": [...]}` records.
class ExternalStore {
 public:
  static ExternalStore load(const std::filesystem::path& path);
  static ExternalStore from_entries(std::size_t dim,
                                    std::vector<std::pair<std::string, std::vector<double>>> entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  const std::vector<double>* find(std::string_view id) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

EmbeddingVector embed_external(std::string_view id, const ExternalStore& store);

constexpr std::size_t kDefaultRandomDim = 64;
EmbeddingVector embed_random(std::string_view text, std::uint64_t rng_seed,
                             std::size_t dim = kDefaultRandomDim);

// One configured backend. Cheap to copy; fitted state is shared and immutable.
class Embedder {
 public:
  static Embedder tfidf(std::shared_ptr<const Vocabulary> vocab);
  static Embedder wordvec(std::shared_ptr<const WordVectorTable> table, std::string source_path = {});
  // External vectors are looked up by the utterance's normalized text.
  static Embedder external(std::shared_ptr<const ExternalStore> store, std::string source_path = {});
  static Embedder random(std::uint64_t rng_seed, std::size_t dim = kDefaultRandomDim);

  BackendKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept;
  bool l2_normalized() const noexcept { return l2_normalize_; }
  Embedder with_l2_normalization(bool on) const;

  EmbeddingVector embed(std::string_view text) const;

  // Vocabulary and random parameters are stored inline; word-vector and
  // external stores are referenced by path and reloaded.
  nlohmann::json to_json() const;
  static Embedder from_json(const nlohmann::json& j);

 private:
  BackendKind kind_ = BackendKind::Tfidf;
  std::shared_ptr<const Vocabulary> vocab_;
  std::shared_ptr<const WordVectorTable> table_;
  std::shared_ptr<const ExternalStore> store_;
  std::string source_path_;
  std::uint64_t random_seed_ = 0;
  std::size_t random_dim_ = kDefaultRandomDim;
  bool l2_normalize_ = false;
};

enum class DialogueMode { FinalUser, ContextMeanPlusFinal };

std::string_view to_string(DialogueMode mode) noexcept;
DialogueMode dialogue_mode_from_string(std::string_view name);

EmbeddingVector embed_dialogue(const Dialogue& d, const Embedder& backend, DialogueMode mode);

// Backend + dialogue mode: the feature map consumed by the classifiers.
struct Featurizer {
  Embedder embedder;
  DialogueMode mode = DialogueMode::ContextMeanPlusFinal;

  std::size_t dim() const noexcept;
  Eigen::VectorXd operator()(const Dialogue& d) const;
  // Row i holds the features of dialogues[i].
  Eigen::MatrixXd matrix(std::span<const Dialogue> dialogues, unsigned threads = 1) const;

  nlohmann::json descriptor() const;
};

}  // namespace gold
