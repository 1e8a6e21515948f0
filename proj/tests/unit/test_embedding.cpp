#include <cmath>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "gold/embedding.hpp"
#include "gold/error.hpp"

using namespace gold;

namespace {

std::shared_ptr<const Vocabulary> three_doc_vocab() {
  const std::vector<std::string> corpus = {"a b", "a c", "a"};
  return std::make_shared<const Vocabulary>(fit_tfidf(corpus, 10));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected gold::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("vocabulary counts document frequency") {
    const std::vector<std::string> corpus = {"a b", "a c"};
    const Vocabulary v = fit_tfidf(corpus, 10);
    REQUIRE(v.size() == 3);
    CHECK(v.token(0) == "a");
    CHECK(v.df(*v.index("a")) == 2);
    CHECK(v.df(*v.index("b")) == 1);
    CHECK(v.df(*v.index("c")) == 1);
    CHECK_FALSE(v.index("d").has_value());
  }

  TEST_CASE("idf formula") {
    const std::vector<std::string> corpus = {"a b", "a c"};
    const Vocabulary v = fit_tfidf(corpus, 10);
    CHECK(v.idf(*v.index("a")) == doctest::Approx(1.0).epsilon(1e-15));
    const auto v3 = three_doc_vocab();
    CHECK(v3->idf(*v3->index("b")) == doctest::Approx(std::log(2.0) + 1.0).epsilon(1e-12));
    CHECK(v3->idf(*v3->index("b")) == doctest::Approx(1.6931).epsilon(1e-4));
  }

  TEST_CASE("max_features keeps the most frequent tokens, ties lexicographic") {
    const std::vector<std::string> corpus = {"z y x", "z y", "z w"};
    const Vocabulary v = fit_tfidf(corpus, 2);
    REQUIRE(v.size() == 2);
    CHECK(v.token(0) == "z");
    CHECK(v.token(1) == "y");
    const Vocabulary w = fit_tfidf(corpus, 3);
    CHECK(w.token(2) == "w");
  }

  TEST_CASE("tfidf embedding") {
    const auto vocab = three_doc_vocab();
    const EmbeddingVector empty = embed_tfidf("q r", *vocab);
    CHECK(empty.dim() == vocab->size());
    for (double x : empty.values) CHECK(x == 0.0);

    const std::vector<std::string> corpus = {"a b", "a c"};
    const Vocabulary v = fit_tfidf(corpus, 10);
    const EmbeddingVector aa = embed_tfidf("a a", v);
    CHECK(aa.values[*v.index("a")] == 2.0);
    CHECK(aa.values[*v.index("b")] == 0.0);

    const EmbeddingVector ab = embed_tfidf("a b", *vocab);
    CHECK(ab.values[*vocab->index("a")] == doctest::Approx(vocab->idf(*vocab->index("a"))));
    CHECK(ab.values[*vocab->index("b")] == doctest::Approx(vocab->idf(*vocab->index("b"))));
    CHECK(ab.values[*vocab->index("c")] == 0.0);
  }

  TEST_CASE("vocabulary json round trip") {
    const auto vocab = three_doc_vocab();
    const Vocabulary back = Vocabulary::from_json(vocab->to_json());
    CHECK(back.size() == vocab->size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back.token(i) == vocab->token(i));
      CHECK(back.idf(i) == vocab->idf(i));
    }
  }

  TEST_CASE("word-vector averaging") {
    const WordVectorTable t = WordVectorTable::from_entries({{"x", {1.0, 0.0}}, {"y", {0.0, 1.0}}});
    CHECK(embed_wordvec("x", t).values == std::vector<double>{1.0, 0.0});
    CHECK(embed_wordvec("x y", t).values == std::vector<double>{0.5, 0.5});
    const EmbeddingVector oov = embed_wordvec("q r", t);
    CHECK(oov.degenerate);
    CHECK(oov.values == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("word-vector file loading") {
    const auto dir = fixture::temp_dir("embedding_wordvec");
    {
      std::ofstream out(dir / "ok.txt");
      out << "x 1 0\ny 0 1\n";
      std::ofstream bad(dir / "bad.txt");
      bad << "x 1 0\ny 0 1 2\n";
    }
    const WordVectorTable t = WordVectorTable::load(dir / "ok.txt");
    CHECK(t.dim() == 2);
    CHECK(t.size() == 2);
    CHECK(code_of([&] { WordVectorTable::load(dir / "bad.txt"); }) == ErrorCode::DimMismatch);
  }

  TEST_CASE("external store") {
    const auto dir = fixture::temp_dir("embedding_external");
    {
      std::ofstream out(dir / "ok.jsonl");
      out << R"({"dim": 2})" << '\n' << R"({"id": "u1", "vector": [1.0, 2.0]})" << '\n';
      std::ofstream bad(dir / "bad.jsonl");
      bad << R"({"dim": 4})" << '\n' << R"({"id": "u1", "vector": [1.0, 2.0, 3.0]})" << '\n';
    }
    const ExternalStore s = ExternalStore::load(dir / "ok.jsonl");
    CHECK(embed_external("u1", s).values == std::vector<double>{1.0, 2.0});
    CHECK(code_of([&] { embed_external("nope", s); }) == ErrorCode::MissingId);
    CHECK(code_of([&] { ExternalStore::load(dir / "bad.jsonl"); }) == ErrorCode::DimMismatch);
  }

  TEST_CASE("random backend") {
    const auto a = embed_random("hello there", 1);
    const auto b = embed_random("hello there", 1);
    const auto c = embed_random("hello there", 2);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.dim() == kDefaultRandomDim);
    for (double x : a.values) CHECK(std::isfinite(x));
  }

  TEST_CASE("dialogue modes") {
    const Embedder e = Embedder::tfidf(three_doc_vocab());
    const Dialogue one = fixture::user("d", "a b");
    const auto turn = e.embed("a b").values;
    CHECK(embed_dialogue(one, e, DialogueMode::FinalUser).values == turn);

    std::vector<double> doubled = turn;
    doubled.insert(doubled.end(), turn.begin(), turn.end());
    CHECK(embed_dialogue(one, e, DialogueMode::ContextMeanPlusFinal).values == doubled);

    Dialogue multi{"m", {{Speaker::System, "c c"}, {Speaker::User, "a b"}}, {}};
    const auto before = embed_dialogue(multi, e, DialogueMode::FinalUser).values;
    multi.turns[0].text = "a a a";
    CHECK(embed_dialogue(multi, e, DialogueMode::FinalUser).values == before);
    CHECK(before == turn);
  }

  TEST_CASE("context mode averages every turn") {
    const Embedder e = Embedder::tfidf(three_doc_vocab());
    const Dialogue d{"m", {{Speaker::System, "a"}, {Speaker::User, "c"}, {Speaker::User, "b"}}, {}};
    const auto v = embed_dialogue(d, e, DialogueMode::ContextMeanPlusFinal).values;
    const auto a = e.embed("a").values, c = e.embed("c").values, b = e.embed("b").values;
    const std::size_t n = a.size();
    REQUIRE(v.size() == 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(v[i] == doctest::Approx((a[i] + c[i] + b[i]) / 3.0));
      CHECK(v[n + i] == b[i]);
    }
  }

  TEST_CASE("embedder json round trip and l2 option") {
    const Embedder e = Embedder::tfidf(three_doc_vocab()).with_l2_normalization(true);
    const Embedder back = Embedder::from_json(e.to_json());
    CHECK(back.embed("a b c").values == e.embed("a b c").values);
    double norm = 0.0;
    for (double x : e.embed("a b").values) norm += x * x;
    CHECK(norm == doctest::Approx(1.0));

    const Embedder r = Embedder::random(9, 16);
    CHECK(Embedder::from_json(r.to_json()).embed("q").values == r.embed("q").values);
    CHECK(backend_from_string("glove") == BackendKind::WordvecAvg);
  }
}
