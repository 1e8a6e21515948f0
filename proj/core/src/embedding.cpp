#include "gold/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_set>

#include "gold/error.hpp"
#include "gold/parallel.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::Tfidf: return "tfidf";
    case BackendKind::WordvecAvg: return "wordvec_avg";
    case BackendKind::External: return "external";
    case BackendKind::Random: return "random";
  }
  return "unknown";
}

BackendKind backend_from_string(std::string_view name) {
  if (name == "tfidf") return BackendKind::Tfidf;
  if (name == "wordvec_avg" || name == "glove" || name == "wordvec") return BackendKind::WordvecAvg;
  if (name == "external" || name == "transformer" || name == "paraphrase") return BackendKind::External;
  if (name == "random") return BackendKind::Random;
  throw Error(ErrorCode::InvalidConfig, "unknown embedding backend '" + std::string(name) + "'");
}

std::string_view to_string(DialogueMode mode) noexcept {
  return mode == DialogueMode::FinalUser ? "final_user" : "context_mean_plus_final";
}

DialogueMode dialogue_mode_from_string(std::string_view name) {
  if (name == "final_user") return DialogueMode::FinalUser;
  if (name == "context_mean_plus_final") return DialogueMode::ContextMeanPlusFinal;
  throw Error(ErrorCode::InvalidConfig, "unknown dialogue mode '" + std::string(name) + "'");
}

// --- TF-IDF ----------------------------------------------------------------

namespace {

double smoothed_idf(std::size_t n_docs, std::size_t df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

}  // namespace

Vocabulary Vocabulary::fit(std::span<const std::string> corpus, std::size_t max_features) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot fit TF-IDF on an empty corpus");
  if (max_features == 0) throw Error(ErrorCode::InvalidConfig, "max_features must be positive");
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_features) ranked.resize(max_features);

  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  for (auto& [t, c] : ranked) {
    tokens.push_back(std::move(t));
    counts.push_back(c);
  }
  return from_parts(std::move(tokens), std::move(counts), corpus.size());
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> tokens, std::vector<std::size_t> df,
                                  std::size_t n_docs) {
  if (tokens.size() != df.size()) throw Error(ErrorCode::InvalidConfig, "token/df length mismatch");
  Vocabulary v;
  v.n_docs_ = n_docs;
  v.tokens_ = std::move(tokens);
  v.df_ = std::move(df);
  v.idf_.reserve(v.df_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (v.df_[i] < 1 || v.df_[i] > n_docs) {
      throw Error(ErrorCode::InvalidConfig, "document frequency out of range for '" + v.tokens_[i] + "'");
    }
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw Error(ErrorCode::DuplicateId, "vocabulary token '" + v.tokens_[i] + "'");
    }
    v.idf_.push_back(smoothed_idf(n_docs, v.df_[i]));
  }
  return v;
}

std::optional<std::size_t> Vocabulary::index(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

json Vocabulary::to_json() const {
  return {{"n_docs", n_docs_}, {"tokens", tokens_}, {"df", df_}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  return from_parts(j.at("tokens").get<std::vector<std::string>>(),
                    j.at("df").get<std::vector<std::size_t>>(), j.at("n_docs").get<std::size_t>());
}

Vocabulary fit_tfidf(std::span<const std::string> corpus, std::size_t max_features) {
  return Vocabulary::fit(corpus, max_features);
}

EmbeddingVector embed_tfidf(std::string_view text, const Vocabulary& vocab) {
  EmbeddingVector out;
  out.backend = BackendKind::Tfidf;
  out.values.assign(vocab.size(), 0.0);
  bool any = false;
  for (const auto& t : tokenize(text)) {
    if (const auto i = vocab.index(t)) {
      out.values[*i] += vocab.idf(*i);
      any = true;
    }
  }
  out.degenerate = !any;
  return out;
}

// --- word vectors ----------------------------------------------------------

WordVectorTable WordVectorTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open word-vector file " + path.string());
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> v;
    std::string field;
    while (ss >> field) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedRecord,
                    path.string() + " line " + std::to_string(line_no) + ": bad number '" + field + "'");
      }
    }
    if (!entries.empty() && v.size() != entries.front().second.size()) {
      throw Error(ErrorCode::DimMismatch, path.string() + " line " + std::to_string(line_no));
    }
    entries.emplace_back(std::move(token), std::move(v));
  }
  return from_entries(std::move(entries));
}

WordVectorTable WordVectorTable::from_entries(std::vector<std::pair<std::string, std::vector<double>>> entries) {
  WordVectorTable t;
  if (entries.empty()) throw Error(ErrorCode::EmptyCorpus, "word-vector table is empty");
  t.dim_ = entries.front().second.size();
  if (t.dim_ == 0) throw Error(ErrorCode::DimMismatch, "word vectors have zero dimensions");
  t.data_.reserve(entries.size() * t.dim_);
  for (auto& [token, v] : entries) {
    if (v.size() != t.dim_) throw Error(ErrorCode::DimMismatch, "word vector for '" + token + "'");
    for (const double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::MalformedRecord, "non-finite entry for '" + token + "'");
    }
    // First occurrence wins, as in the usual pretrained-table readers.
    if (t.rows_.emplace(token, t.rows_.size()).second) t.data_.insert(t.data_.end(), v.begin(), v.end());
  }
  return t;
}

std::optional<std::span<const double>> WordVectorTable::find(std::string_view token) const {
  const auto it = rows_.find(std::string(token));
  if (it == rows_.end()) return std::nullopt;
  return std::span<const double>(data_.data() + it->second * dim_, dim_);
}

EmbeddingVector embed_wordvec(std::string_view text, const WordVectorTable& table) {
  EmbeddingVector out;
  out.backend = BackendKind::WordvecAvg;
  out.values.assign(table.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokenize(text)) {
    if (const auto v = table.find(t)) {
      for (std::size_t i = 0; i < v->size(); ++i) out.values[i] += (*v)[i];
      ++hits;
    }
  }
  if (hits == 0) {
    out.degenerate = true;
  } else {
    for (auto& x : out.values) x /= static_cast<double>(hits);
  }
  return out;
}

void write_word_vectors(const std::filesystem::path& path,
                        std::span<const std::pair<std::string, std::vector<double>>> entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.precision(17);
  for (const auto& [token, v] : entries) {
    out << token;
    for (const double x : v) out << ' ' << x;
    out << '\n';
  }
}

// --- external store --------------------------------------------------------

ExternalStore ExternalStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open vector store " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> dim;
  std::vector<std::pair<std::string, std::vector<double>>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize(line).empty()) continue;
    const auto where = path.string() + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": " + e.what());
    }
    if (!dim) {
      if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) {
        throw Error(ErrorCode::MalformedRecord, where + ": expected {\"dim\": N} header");
      }
      dim = j["dim"].get<std::size_t>();
      continue;
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("vector") ||
        !j["vector"].is_array()) {
      throw Error(ErrorCode::MalformedRecord, where + ": expected {\"id\", \"vector\"}");
    }
    std::vector<double> v;
    for (const auto& x : j["vector"]) {
      if (!x.is_number()) throw Error(ErrorCode::MalformedRecord, where + ": non-numeric vector entry");
      v.push_back(x.get<double>());
    }
    if (v.size() != *dim) {
      throw Error(ErrorCode::DimMismatch, where + ": declared dim " + std::to_string(*dim) + ", got " +
                                              std::to_string(v.size()));
    }
    entries.emplace_back(j["id"].get<std::string>(), std::move(v));
  }
  if (!dim) throw Error(ErrorCode::MalformedRecord, path.string() + ": missing dim header");
  return from_entries(*dim, std::move(entries));
}

ExternalStore ExternalStore::from_entries(std::size_t dim,
                                          std::vector<std::pair<std::string, std::vector<double>>> entries) {
  ExternalStore s;
  s.dim_ = dim;
  for (auto& [id, v] : entries) {
    if (v.size() != dim) throw Error(ErrorCode::DimMismatch, "vector for '" + id + "'");
    for (const double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::MalformedRecord, "non-finite entry for '" + id + "'");
    }
    if (!s.vectors_.emplace(id, std::move(v)).second) throw Error(ErrorCode::DuplicateId, id);
  }
  return s;
}

const std::vector<double>* ExternalStore::find(std::string_view id) const {
  const auto it = vectors_.find(std::string(id));
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingVector embed_external(std::string_view id, const ExternalStore& store) {
  const auto* v = store.find(id);
  if (v == nullptr) throw Error(ErrorCode::MissingId, std::string(id));
  EmbeddingVector out;
  out.backend = BackendKind::External;
  out.values = *v;
  out.degenerate = std::all_of(v->begin(), v->end(), [](double x) { return x == 0.0; });
  return out;
}

// --- random ----------------------------------------------------------------

EmbeddingVector embed_random(std::string_view text, std::uint64_t rng_seed, std::size_t dim) {
  std::mt19937_64 rng(fnv1a64(normalize(text), fnv1a64(rng_seed, 0xcbf29ce484222325ULL)));
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingVector out;
  out.backend = BackendKind::Random;
  out.values.resize(dim);
  for (auto& x : out.values) x = normal(rng);
  return out;
}

// --- Embedder --------------------------------------------------------------

Embedder Embedder::tfidf(std::shared_ptr<const Vocabulary> vocab) {
  Embedder e;
  e.kind_ = BackendKind::Tfidf;
  e.vocab_ = std::move(vocab);
  return e;
}

Embedder Embedder::wordvec(std::shared_ptr<const WordVectorTable> table, std::string source_path) {
  Embedder e;
  e.kind_ = BackendKind::WordvecAvg;
  e.table_ = std::move(table);
  e.source_path_ = std::move(source_path);
  return e;
}

Embedder Embedder::external(std::shared_ptr<const ExternalStore> store, std::string source_path) {
  Embedder e;
  e.kind_ = BackendKind::External;
  e.store_ = std::move(store);
  e.source_path_ = std::move(source_path);
  return e;
}

Embedder Embedder::random(std::uint64_t rng_seed, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidConfig, "random embedding dim must be positive");
  Embedder e;
  e.kind_ = BackendKind::Random;
  e.random_seed_ = rng_seed;
  e.random_dim_ = dim;
  return e;
}

std::size_t Embedder::dim() const noexcept {
  switch (kind_) {
    case BackendKind::Tfidf: return vocab_ ? vocab_->size() : 0;
    case BackendKind::WordvecAvg: return table_ ? table_->dim() : 0;
    case BackendKind::External: return store_ ? store_->dim() : 0;
    case BackendKind::Random: return random_dim_;
  }
  return 0;
}

Embedder Embedder::with_l2_normalization(bool on) const {
  Embedder e = *this;
  e.l2_normalize_ = on;
  return e;
}

EmbeddingVector Embedder::embed(std::string_view text) const {
  EmbeddingVector v;
  switch (kind_) {
    case BackendKind::Tfidf: v = embed_tfidf(text, *vocab_); break;
    case BackendKind::WordvecAvg: v = embed_wordvec(text, *table_); break;
    case BackendKind::External: v = embed_external(normalize(text), *store_); break;
    case BackendKind::Random: v = embed_random(text, random_seed_, random_dim_); break;
  }
  if (l2_normalize_) {
    double sq = 0.0;
    for (const double x : v.values) sq += x * x;
    if (sq > 0.0) {
      const double n = std::sqrt(sq);
      for (auto& x : v.values) x /= n;
    }
  }
  return v;
}

json Embedder::to_json() const {
  json j = {{"backend", to_string(kind_)}, {"l2_normalize", l2_normalize_}};
  switch (kind_) {
    case BackendKind::Tfidf: j["vocabulary"] = vocab_->to_json(); break;
    case BackendKind::WordvecAvg:
    case BackendKind::External: j["path"] = source_path_; break;
    case BackendKind::Random:
      j["rng_seed"] = random_seed_;
      j["dim"] = random_dim_;
      break;
  }
  return j;
}

Embedder Embedder::from_json(const json& j) {
  Embedder e;
  switch (backend_from_string(j.at("backend").get<std::string>())) {
    case BackendKind::Tfidf:
      e = tfidf(std::make_shared<const Vocabulary>(Vocabulary::from_json(j.at("vocabulary"))));
      break;
    case BackendKind::WordvecAvg: {
      const auto path = j.at("path").get<std::string>();
      e = wordvec(std::make_shared<const WordVectorTable>(WordVectorTable::load(path)), path);
      break;
    }
    case BackendKind::External: {
      const auto path = j.at("path").get<std::string>();
      e = external(std::make_shared<const ExternalStore>(ExternalStore::load(path)), path);
      break;
    }
    case BackendKind::Random:
      e = random(j.at("rng_seed").get<std::uint64_t>(), j.at("dim").get<std::size_t>());
      break;
  }
  return e.with_l2_normalization(j.value("l2_normalize", false));
}

EmbeddingVector embed_dialogue(const Dialogue& d, const Embedder& backend, DialogueMode mode) {
  const int last = d.last_user_turn();
  if (last < 0) throw Error(ErrorCode::NoUserTurn, d.id);
  EmbeddingVector final_vec = backend.embed(d.turns[static_cast<std::size_t>(last)].text);
  if (mode == DialogueMode::FinalUser) return final_vec;

  const std::size_t dim = final_vec.dim();
  EmbeddingVector out;
  out.backend = final_vec.backend;
  out.degenerate = final_vec.degenerate;
  out.values.assign(2 * dim, 0.0);
  for (const auto& turn : d.turns) {
    const auto v = backend.embed(turn.text);
    for (std::size_t i = 0; i < dim; ++i) out.values[i] += v.values[i];
  }
  const auto n = static_cast<double>(d.turns.size());
  for (std::size_t i = 0; i < dim; ++i) out.values[i] /= n;
  std::copy(final_vec.values.begin(), final_vec.values.end(), out.values.begin() + static_cast<long>(dim));
  return out;
}

std::size_t Featurizer::dim() const noexcept {
  return mode == DialogueMode::FinalUser ? embedder.dim() : 2 * embedder.dim();
}

Eigen::VectorXd Featurizer::operator()(const Dialogue& d) const {
  const auto v = embed_dialogue(d, embedder, mode);
  return Eigen::Map<const Eigen::VectorXd>(v.values.data(), static_cast<Eigen::Index>(v.values.size()));
}

Eigen::MatrixXd Featurizer::matrix(std::span<const Dialogue> dialogues, unsigned threads) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dialogues.size()), static_cast<Eigen::Index>(dim()));
  parallel_for(dialogues.size(), threads, [&](std::size_t i) {
    m.row(static_cast<Eigen::Index>(i)) = (*this)(dialogues[i]).transpose();
  });
  return m;
}

json Featurizer::descriptor() const {
  return {{"backend", to_string(embedder.kind())},
          {"mode", to_string(mode)},
          {"dim", dim()},
          {"l2_normalize", embedder.l2_normalized()}};
}

}  // namespace gold
