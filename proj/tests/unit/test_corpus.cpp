#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gold/artifact.hpp"
#include "gold/corpus.hpp"
#include "gold/error.hpp"
#include "gold/text.hpp"

using namespace gold;
using nlohmann::json;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
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

const char* kRecordA = R"({"id":"a","turns":[{"speaker":"user","text":"book a table"}],"label":{"kind":"ins","intent":"book"}})";
const char* kRecordB = R"({"id":"b","turns":[{"speaker":"system","text":"hi"},{"speaker":"user","text":"what is love"}],"label":{"kind":"oos"}})";
const char* kRecordC = R"({"id":"c","turns":[{"speaker":"user","text":"cancel it"}],"label":{"kind":"ins","intent":"cancel"}})";

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("ingest of three valid records") {
    const auto dir = fixture::temp_dir("corpus_ingest");
    write_lines(dir / "three.jsonl", {kRecordA, kRecordB, "", kRecordC});
    const DatasetSplit split = ingest(dir / "three.jsonl", DatasetRole::Target);
    CHECK(split.train.size() == 3);
    CHECK(split.train[1].turns.size() == 2);
    CHECK(split.train[1].label.is_oos());
    CHECK(split.train[0].label.intent == "book");
  }

  TEST_CASE("ingest reads prefix splits") {
    const auto dir = fixture::temp_dir("corpus_prefix");
    write_lines(dir / "ds.train.jsonl", {kRecordA});
    write_lines(dir / "ds.dev.jsonl", {kRecordB});
    write_lines(dir / "ds.test.jsonl", {kRecordC});
    const DatasetSplit split = ingest(dir / "ds", DatasetRole::Target);
    CHECK(split.train.size() == 1);
    CHECK(split.dev.size() == 1);
    CHECK(split.test.size() == 1);
  }

  TEST_CASE("empty turns list is malformed") {
    const auto dir = fixture::temp_dir("corpus_empty_turns");
    write_lines(dir / "bad.jsonl", {kRecordA, R"({"id":"x","turns":[],"label":{"kind":"oos"}})"});
    try {
      ingest(dir / "bad.jsonl", DatasetRole::Target);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedRecord);
      CHECK(e.detail().find("line 2") != std::string::npos);
    }
  }

  TEST_CASE("record validation") {
    CHECK(code_of([] { dialogue_from_json(json::parse(R"({"id":"x","turns":[{"speaker":"system","text":"hi"}],"label":{"kind":"oos"}})"), DatasetRole::Target); }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] { dialogue_from_json(json::parse(R"({"id":"x","turns":[{"speaker":"user","text":"   "}],"label":{"kind":"oos"}})"), DatasetRole::Target); }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] { dialogue_from_json(json::parse(R"({"id":"x","turns":[{"speaker":"user","text":"a"}],"label":{"kind":"ins","intent":""}})"), DatasetRole::Target); }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] { dialogue_from_json(json::parse(R"({"id":"x","turns":[{"speaker":"bot","text":"a"}],"label":null})"), DatasetRole::Target); }) == ErrorCode::MalformedRecord);
    const Dialogue src = dialogue_from_json(json::parse(kRecordA), DatasetRole::Source);
    CHECK(src.label.kind == LabelKind::None);
  }

  TEST_CASE("duplicate ids") {
    const auto dir = fixture::temp_dir("corpus_dup");
    const std::string d1 = R"({"id":"d1","turns":[{"speaker":"user","text":"x"}],"label":{"kind":"oos"}})";
    write_lines(dir / "dup.jsonl", {d1, d1});
    try {
      ingest(dir / "dup.jsonl", DatasetRole::Target);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DuplicateId);
      CHECK(e.detail() == "d1");
    }
  }

  TEST_CASE("ids are unique across splits") {
    const auto dir = fixture::temp_dir("corpus_dup_split");
    write_lines(dir / "ds.train.jsonl", {kRecordA});
    write_lines(dir / "ds.test.jsonl", {kRecordA});
    CHECK(code_of([&] { ingest(dir / "ds", DatasetRole::Target); }) == ErrorCode::DuplicateId);
  }

  TEST_CASE("empty file is an empty split") {
    const auto dir = fixture::temp_dir("corpus_empty");
    write_lines(dir / "e.jsonl", {});
    CHECK(code_of([&] { ingest(dir / "e.jsonl", DatasetRole::Target); }) == ErrorCode::EmptySplit);
  }

  TEST_CASE("serialize then ingest is the identity") {
    const auto dir = fixture::temp_dir("corpus_roundtrip");
    const SynthCorpus c = synth_corpus(fixture::small_spec(3));
    write_split(dir / "t", c.target);
    CHECK(ingest(dir / "t", DatasetRole::Target) == c.target);
  }

  TEST_CASE("meta header lines are skipped") {
    const auto dir = fixture::temp_dir("corpus_meta");
    const std::vector<json> rows = {json::parse(kRecordA), json::parse(kRecordC)};
    write_jsonl_artifact(dir / "m.jsonl", rows, {7, "abc"});
    CHECK(read_dialogues(dir / "m.jsonl", DatasetRole::Target).size() == 2);
  }

  TEST_CASE("seed budget") {
    CHECK(seed_budget(1000, 0.01) == 10);
    CHECK(seed_budget(22051, 0.01) == 221);
    CHECK(seed_budget(1, 0.01) == 1);
    CHECK(seed_budget(200, 0.005) == 1);
  }

  TEST_CASE("sample_seed contract") {
    std::vector<Dialogue> pool;
    for (int i = 0; i < 5; ++i) pool.push_back(fixture::oos("o" + std::to_string(i), "x y"));
    CHECK(code_of([&] { sample_seed(pool, 1000, 0.01, 0); }) == ErrorCode::InsufficientPool);

    for (int i = 5; i < 40; ++i) pool.push_back(fixture::oos("o" + std::to_string(i), "t" + std::to_string(i)));
    const SeedSet s = sample_seed(pool, 1000, 0.01, 42);
    CHECK(s.budget == 10);
    CHECK(s.examples.size() == 10);
    std::set<std::string> ids;
    for (const auto& d : s.examples) {
      CHECK(d.label.is_oos());
      ids.insert(d.id);
    }
    CHECK(ids.size() == 10);

    std::vector<Dialogue> reversed(pool.rbegin(), pool.rend());
    const SeedSet r = sample_seed(reversed, 1000, 0.01, 42);
    CHECK(r.examples == s.examples);

    pool.push_back(fixture::ins("i0", "hello", "greet"));
    CHECK(code_of([&] { sample_seed(pool, 1000, 0.01, 0); }) == ErrorCode::InvalidSpec);
  }

  TEST_CASE("synth_corpus partitions intents evenly") {
    SynthSpec spec;
    spec.n_ins = 100;
    spec.n_intents = 4;
    spec.n_oos = 10;
    spec.n_source = 10;
    const SynthCorpus c = synth_corpus(spec);
    std::map<std::string, int> per_intent;
    for (const auto& d : c.target.train) {
      if (d.label.is_ins()) ++per_intent[d.label.intent];
    }
    CHECK(per_intent.size() == 4);
    for (const auto& [_, n] : per_intent) CHECK(n == 25);
    for (const auto& d : c.source.train) CHECK(d.label.kind == LabelKind::None);
  }

  TEST_CASE("vocab_overlap = 0 keeps OOS user tokens out of INS vocabularies") {
    SynthSpec spec = fixture::small_spec(5);
    spec.vocab_overlap = 0.0;
    const SynthCorpus c = synth_corpus(spec);
    std::set<std::string> ins_tokens;
    for (const auto* split : {&c.target.train, &c.target.dev, &c.target.test}) {
      for (const auto& d : *split) {
        if (!d.label.is_ins()) continue;
        for (const auto& t : d.turns) {
          if (t.speaker == Speaker::User) {
            for (const auto& tok : tokenize(t.text)) ins_tokens.insert(tok);
          }
        }
      }
    }
    for (const auto* split : {&c.target.train, &c.target.dev, &c.target.test}) {
      for (const auto& d : *split) {
        if (!d.label.is_oos()) continue;
        for (const auto& t : d.turns) {
          if (t.speaker != Speaker::User) continue;
          for (const auto& tok : tokenize(t.text)) CHECK(ins_tokens.count(tok) == 0);
        }
      }
    }
  }

  TEST_CASE("synth_corpus is deterministic and validates its spec") {
    const auto dir = fixture::temp_dir("corpus_synth_det");
    const SynthSpec spec = fixture::small_spec(11);
    write_split(dir / "a", synth_corpus(spec).target);
    write_split(dir / "b", synth_corpus(spec).target);
    auto slurp = [](const std::filesystem::path& p) {
      std::ifstream in(p);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(dir / "a.train.jsonl") == slurp(dir / "b.train.jsonl"));
    CHECK(slurp(dir / "a.test.jsonl") == slurp(dir / "b.test.jsonl"));

    SynthSpec bad = spec;
    bad.n_intents = 1;
    CHECK(code_of([&] { synth_corpus(bad); }) == ErrorCode::InvalidSpec);
    bad = spec;
    bad.n_ins = 1;
    CHECK(code_of([&] { synth_corpus(bad); }) == ErrorCode::InvalidSpec);
    bad = spec;
    bad.vocab_overlap = 1.5;
    CHECK(code_of([&] { synth_corpus(bad); }) == ErrorCode::InvalidSpec);
  }

  TEST_CASE("dialogue helpers") {
    const Dialogue d{"x", {{Speaker::System, "a"}, {Speaker::User, "b"}, {Speaker::System, "c"}, {Speaker::User, "d"}}, {}};
    CHECK(d.last_user_turn() == 3);
    CHECK(d.user_turn_indices() == std::vector<std::size_t>{1, 3});
    CHECK(normalize("  Hello   WORLD ") == "hello world");
  }
}
