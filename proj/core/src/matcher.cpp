#include "gold/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gold/artifact.hpp"
#include "gold/error.hpp"
#include "gold/parallel.hpp"

namespace gold {

using nlohmann::json;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Shared by the pairwise function and the index scan so both produce
// bit-identical distances.
double distance_from_parts(double dot_vw, double norm_v, double norm_w) {
  if (norm_v == 0.0 || norm_w == 0.0) return 2.0;
  const double d = 1.0 - dot_vw / (norm_v * norm_w);
  return std::clamp(d, 0.0, 2.0);
}

}  // namespace

double cosine_distance(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size()) {
    throw Error(ErrorCode::DimMismatch, std::to_string(v.size()) + " vs " + std::to_string(w.size()));
  }
  return distance_from_parts(dot(v, w), l2(v), l2(w));
}

double cosine_distance(const EmbeddingVector& v, const EmbeddingVector& w) {
  return cosine_distance(std::span<const double>(v.values), std::span<const double>(w.values));
}

SourceIndex SourceIndex::from_vectors(std::vector<IndexItem> items, std::vector<EmbeddingVector> vectors) {
  if (items.empty()) throw Error(ErrorCode::EmptySource, "source index has no items");
  if (items.size() != vectors.size()) throw Error(ErrorCode::InvalidConfig, "items/vectors length mismatch");
  SourceIndex idx;
  idx.dim_ = vectors.front().dim();
  idx.data_.reserve(items.size() * idx.dim_);
  for (const auto& v : vectors) {
    if (v.dim() != idx.dim_) throw Error(ErrorCode::DimMismatch, "source vectors differ in dimension");
    idx.data_.insert(idx.data_.end(), v.values.begin(), v.values.end());
  }
  idx.items_ = std::move(items);
  for (std::size_t i = 0; i < idx.items_.size(); ++i) {
    if (!idx.by_id_.emplace(idx.items_[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, "source utterance " + idx.items_[i].id);
    }
  }
  idx.norms_.resize(idx.items_.size());
  for (std::size_t i = 0; i < idx.items_.size(); ++i) idx.norms_[i] = l2(idx.vector(i));
  return idx;
}

const IndexItem* SourceIndex::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

SourceIndex SourceIndex::build(std::span<const Dialogue> source, const Embedder& backend, unsigned threads) {
  std::vector<IndexItem> items;
  for (const auto& d : source) {
    const auto users = d.user_turn_indices();
    for (const auto t : users) {
      std::string id = users.size() == 1 ? d.id : d.id + "#" + std::to_string(t);
      items.push_back({std::move(id), d.turns[t].text});
    }
  }
  if (items.empty()) throw Error(ErrorCode::EmptySource, "source pool has no user utterances");
  std::vector<EmbeddingVector> vectors(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) { vectors[i] = backend.embed(items[i].text); });
  return from_vectors(std::move(items), std::move(vectors));
}

SourceIndex SourceIndex::build(const DatasetSplit& source, const Embedder& backend, unsigned threads) {
  std::vector<Dialogue> all;
  all.reserve(source.size());
  for (const auto* part : {&source.train, &source.dev, &source.test}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  return build(std::span<const Dialogue>(all), backend, threads);
}

MatchResult nearest(std::string seed_id, const EmbeddingVector& query, const SourceIndex& index,
                    std::size_t k) {
  if (query.dim() != index.dim()) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.dim()) + " vs index dim " +
                                            std::to_string(index.dim()));
  }
  const std::span<const double> q(query.values);
  const double qn = l2(q);
  std::vector<std::pair<double, std::size_t>> scored(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    scored[i] = {distance_from_parts(dot(q, index.vector(i)), qn, index.norm(i)), i};
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(take), scored.end(),
                    [&](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first < b.first;
                      return index.item(a.second).id < index.item(b.second).id;
                    });
  MatchResult result{std::move(seed_id), {}, k};
  result.matches.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    result.matches.push_back({index.item(scored[r].second).id, scored[r].first});
  }
  return result;
}

MatchResult nearest(const Dialogue& seed, const SourceIndex& index, std::size_t k, const Embedder& backend) {
  return nearest(seed.id, embed_dialogue(seed, backend, DialogueMode::FinalUser), index, k);
}

json to_json(const MatchResult& r) {
  json matches = json::array();
  for (const auto& m : r.matches) matches.push_back(json::array({m.source_id, m.distance}));
  return {{"seed_id", r.seed_id}, {"matches", std::move(matches)}};
}

MatchResult match_result_from_json(const json& j) {
  MatchResult r;
  r.seed_id = j.at("seed_id").get<std::string>();
  for (const auto& m : j.at("matches")) {
    r.matches.push_back({m.at(0).get<std::string>(), m.at(1).get<double>()});
  }
  r.requested = r.matches.size();
  return r;
}

void write_match_cache(const std::filesystem::path& path, std::span<const MatchResult> results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& r : results) out << to_json(r).dump() << '\n';
}

std::vector<MatchResult> read_match_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<MatchResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = json::parse(line);
    if (is_meta_header(record)) continue;
    out.push_back(match_result_from_json(record));
  }
  return out;
}

}  // namespace gold
