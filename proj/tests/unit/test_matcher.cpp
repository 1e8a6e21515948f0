#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gold/error.hpp"
#include "gold/matcher.hpp"
#include "oracles.hpp"

using namespace gold;

namespace {

std::shared_ptr<const Vocabulary> vocab_of(const std::vector<std::string>& corpus) {
  return std::make_shared<const Vocabulary>(fit_tfidf(corpus, 100));
}

}  // namespace

TEST_SUITE("matcher") {
  TEST_CASE("cosine distance") {
    const std::vector<double> v = {1.0, 0.0}, w = {1.0, 1.0}, o = {0.0, 1.0}, z = {0.0, 0.0};
    CHECK(cosine_distance(std::span<const double>(w), std::span<const double>(w)) == doctest::Approx(0.0));
    CHECK(cosine_distance(std::span<const double>(v), std::span<const double>(o)) == 1.0);
    CHECK(cosine_distance(std::span<const double>(v), std::span<const double>(w)) ==
          doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(cosine_distance(std::span<const double>(v), std::span<const double>(w)) ==
          doctest::Approx(0.29289).epsilon(1e-5));
    CHECK(cosine_distance(std::span<const double>(v), std::span<const double>(z)) == 2.0);
    const std::vector<double> neg = {-1.0, 0.0};
    CHECK(cosine_distance(std::span<const double>(v), std::span<const double>(neg)) == 2.0);
  }

  TEST_CASE("index build") {
    const std::vector<Dialogue> src = {fixture::user("s1", "rain today"), fixture::user("s2", "sunny skies"),
                                       fixture::user("s3", "cold wind")};
    const auto e = Embedder::tfidf(vocab_of({"rain today", "sunny skies", "cold wind"}));
    const SourceIndex idx = SourceIndex::build(std::span<const Dialogue>(src), e);
    CHECK(idx.size() == 3);

    const std::vector<Dialogue> two = {
        Dialogue{"m", {{Speaker::User, "rain"}, {Speaker::System, "ok"}, {Speaker::User, "wind"}}, {}}};
    const SourceIndex idx2 = SourceIndex::build(std::span<const Dialogue>(two), e);
    CHECK(idx2.size() == 2);
    CHECK(idx2.find("m#0") != nullptr);
    CHECK(idx2.find("m#2") != nullptr);

    const SourceIndex again = SourceIndex::build(std::span<const Dialogue>(src), e);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      CHECK(again.item(i).id == idx.item(i).id);
      CHECK(std::equal(again.vector(i).begin(), again.vector(i).end(), idx.vector(i).begin()));
    }
  }

  TEST_CASE("empty source") {
    const auto e = Embedder::random(0, 4);
    try {
      SourceIndex::build(std::span<const Dialogue>(), e);
      FAIL("no error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::EmptySource);
    }
  }

  TEST_CASE("nearest returns everything sorted when k = size") {
    const std::vector<std::string> texts = {"a b", "a c", "b c", "d"};
    std::vector<Dialogue> src;
    for (std::size_t i = 0; i < texts.size(); ++i) src.push_back(fixture::user("s" + std::to_string(i), texts[i]));
    const auto e = Embedder::tfidf(vocab_of(texts));
    const SourceIndex idx = SourceIndex::build(std::span<const Dialogue>(src), e);
    const MatchResult r = nearest(fixture::user("q", "a b"), idx, 4, e);
    REQUIRE(r.matches.size() == 4);
    CHECK(r.matches[0].source_id == "s0");
    CHECK(r.matches[0].distance == doctest::Approx(0.0));
    for (std::size_t i = 1; i < r.matches.size(); ++i) CHECK(r.matches[i - 1].distance <= r.matches[i].distance);
    CHECK(nearest(fixture::user("q", "a b"), idx, 10, e).matches.size() == 4);
  }

  TEST_CASE("nearest equals the exhaustive oracle on a random index") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<IndexItem> items;
    std::vector<EmbeddingVector> vecs;
    for (int i = 0; i < 50; ++i) {
      items.push_back({"item" + std::to_string(i), ""});
      EmbeddingVector v;
      for (int j = 0; j < 6; ++j) v.values.push_back(n(rng));
      vecs.push_back(v);
    }
    vecs[7] = vecs[3];
    const SourceIndex idx = SourceIndex::from_vectors(items, vecs);
    for (int t = 0; t < 20; ++t) {
      EmbeddingVector q;
      for (int j = 0; j < 6; ++j) q.values.push_back(n(rng));
      if (t == 0) q = vecs[3];
      const MatchResult r = nearest("q", q, idx, 5);
      CHECK(r.matches == oracle::knn(idx, q.values, 5));
    }
  }

  TEST_CASE("ties break by id") {
    std::vector<IndexItem> items = {{"b", ""}, {"a", ""}, {"c", ""}};
    EmbeddingVector v;
    v.values = {1.0, 1.0};
    const SourceIndex idx = SourceIndex::from_vectors(items, {v, v, v});
    const MatchResult r = nearest("q", v, idx, 2);
    REQUIRE(r.matches.size() == 2);
    CHECK(r.matches[0].source_id == "a");
    CHECK(r.matches[1].source_id == "b");
  }

  TEST_CASE("duplicate ids and dimension mismatch") {
    EmbeddingVector v;
    v.values = {1.0, 0.0};
    EmbeddingVector w;
    w.values = {1.0};
    CHECK_THROWS_AS(SourceIndex::from_vectors({{"a", ""}, {"a", ""}}, {v, v}), Error);
    CHECK_THROWS_AS(SourceIndex::from_vectors({{"a", ""}, {"b", ""}}, {v, w}), Error);
    const SourceIndex idx = SourceIndex::from_vectors({{"a", ""}}, {v});
    CHECK_THROWS_AS(nearest("q", w, idx, 1), Error);
  }

  TEST_CASE("match cache round trip") {
    const auto dir = fixture::temp_dir("matcher_cache");
    MatchResult r{"seed", {{"a", 0.25}, {"b", 0.5}}, 2};
    write_match_cache(dir / "m.jsonl", std::vector<MatchResult>{r});
    const auto back = read_match_cache(dir / "m.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].seed_id == "seed");
    CHECK(back[0].matches == r.matches);
  }
}
