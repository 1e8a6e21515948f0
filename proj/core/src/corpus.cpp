#include "gold/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include "gold/artifact.hpp"
#include "gold/error.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;

int Dialogue::last_user_turn() const noexcept {
  for (int i = static_cast<int>(turns.size()) - 1; i >= 0; --i) {
    if (turns[static_cast<std::size_t>(i)].speaker == Speaker::User) return i;
  }
  return -1;
}

std::vector<std::size_t> Dialogue::user_turn_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].speaker == Speaker::User) out.push_back(i);
  }
  return out;
}

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedRecord, why);
}

Label label_from_json(const json& j) {
  if (j.is_null()) return Label::none();
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    malformed("label must be null or an object with a string 'kind'");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "ins") {
    if (!j.contains("intent") || !j["intent"].is_string() ||
        j["intent"].get<std::string>().empty()) {
      malformed("ins label requires a non-empty 'intent'");
    }
    return Label::ins(j["intent"].get<std::string>());
  }
  if (kind == "oos") {
    bool pseudo = false;
    if (j.contains("pseudo")) {
      if (!j["pseudo"].is_boolean()) malformed("'pseudo' must be boolean");
      pseudo = j["pseudo"].get<bool>();
    }
    return Label::oos(pseudo);
  }
  malformed("unknown label kind '" + kind + "'");
}

}  // namespace

Dialogue dialogue_from_json(const json& record, DatasetRole role) {
  if (!record.is_object()) malformed("record is not a JSON object");
  if (!record.contains("id") || !record["id"].is_string() ||
      record["id"].get<std::string>().empty()) {
    malformed("missing or empty 'id'");
  }
  Dialogue d;
  d.id = record["id"].get<std::string>();
  if (!record.contains("turns") || !record["turns"].is_array() || record["turns"].empty()) {
    malformed("'turns' must be a non-empty array");
  }
  for (const auto& t : record["turns"]) {
    if (!t.is_object() || !t.contains("speaker") || !t["speaker"].is_string() ||
        !t.contains("text") || !t["text"].is_string()) {
      malformed("turn needs string 'speaker' and 'text'");
    }
    Utterance u;
    const auto speaker = t["speaker"].get<std::string>();
    if (speaker == "user") {
      u.speaker = Speaker::User;
    } else if (speaker == "system") {
      u.speaker = Speaker::System;
    } else {
      malformed("speaker must be 'system' or 'user'");
    }
    u.text = t["text"].get<std::string>();
    if (normalize(u.text).empty()) malformed("turn text is blank");
    d.turns.push_back(std::move(u));
  }
  if (d.last_user_turn() < 0) malformed("dialogue has no user turn");
  d.label = label_from_json(record.contains("label") ? record["label"] : json());
  if (role == DatasetRole::Source) d.label = Label::none();
  return d;
}

json to_json(const Dialogue& d) {
  json turns = json::array();
  for (const auto& u : d.turns) {
    turns.push_back({{"speaker", u.speaker == Speaker::User ? "user" : "system"},
                     {"text", u.text}});
  }
  json label;
  switch (d.label.kind) {
    case LabelKind::None: break;
    case LabelKind::Ins: label = {{"kind", "ins"}, {"intent", d.label.intent}}; break;
    case LabelKind::Oos:
      label = {{"kind", "oos"}};
      if (d.label.pseudo) label["pseudo"] = true;
      break;
  }
  return {{"id", d.id}, {"turns", std::move(turns)}, {"label", std::move(label)}};
}

std::string to_jsonl_line(const Dialogue& d) { return to_json(d).dump(); }

std::vector<Dialogue> read_dialogues(const std::filesystem::path& path, DatasetRole role) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<Dialogue> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize(line).empty()) continue;
    Dialogue d;
    try {
      const json record = json::parse(line);
      if (is_meta_header(record)) continue;
      d = dialogue_from_json(record, role);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord,
                  path.string() + " line " + std::to_string(line_no) + ": " + e.detail());
    }
    if (!seen.insert(d.id).second) throw Error(ErrorCode::DuplicateId, d.id);
    out.push_back(std::move(d));
  }
  return out;
}

void write_dialogues(const std::filesystem::path& path, std::span<const Dialogue> dialogues) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& d : dialogues) out << to_jsonl_line(d) << '\n';
}

void validate_split(const DatasetSplit& split) {
  std::unordered_set<std::string> seen;
  for (const auto* part : {&split.train, &split.dev, &split.test}) {
    for (const auto& d : *part) {
      if (!seen.insert(d.id).second) throw Error(ErrorCode::DuplicateId, d.id);
    }
  }
}

DatasetSplit ingest(const std::filesystem::path& location, DatasetRole role) {
  namespace fs = std::filesystem;
  DatasetSplit split;
  split.role = role;

  auto load = [&](const fs::path& p) {
    auto records = read_dialogues(p, role);
    if (records.empty()) throw Error(ErrorCode::EmptySplit, p.string());
    return records;
  };

  if (fs::is_regular_file(location)) {
    split.train = load(location);
  } else {
    const std::string prefix = location.string();
    const fs::path train = prefix + ".train.jsonl";
    if (!fs::is_regular_file(train)) {
      throw Error(ErrorCode::Io, "no dataset at " + prefix + " (expected " + train.string() + ")");
    }
    split.train = load(train);
    if (const fs::path dev = prefix + ".dev.jsonl"; fs::is_regular_file(dev)) split.dev = load(dev);
    if (const fs::path test = prefix + ".test.jsonl"; fs::is_regular_file(test)) split.test = load(test);
  }
  validate_split(split);
  return split;
}

void write_split(const std::filesystem::path& prefix, const DatasetSplit& split) {
  const std::string p = prefix.string();
  write_dialogues(p + ".train.jsonl", split.train);
  if (!split.dev.empty()) write_dialogues(p + ".dev.jsonl", split.dev);
  if (!split.test.empty()) write_dialogues(p + ".test.jsonl", split.test);
}

std::size_t seed_budget(std::size_t ins_train_count, double seed_fraction) {
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "seed_fraction must be in (0, 1]");
  }
  // Shave a relative epsilon so products like 0.01 * 1000 that land a hair
  // above an integer do not round up.
  const double raw = seed_fraction * static_cast<double>(ins_train_count);
  return static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
}

SeedSet sample_seed(std::span<const Dialogue> pool, std::size_t ins_train_count,
                    double seed_fraction, std::uint64_t rng_seed) {
  if (ins_train_count == 0) throw Error(ErrorCode::InvalidSpec, "ins_train_count must be positive");
  const std::size_t budget = seed_budget(ins_train_count, seed_fraction);
  for (const auto& d : pool) {
    if (!d.label.is_oos()) throw Error(ErrorCode::InvalidSpec, "seed pool contains non-OOS " + d.id);
  }
  if (pool.size() < budget) {
    throw Error(ErrorCode::InsufficientPool, "pool of " + std::to_string(pool.size()) +
                                                 " is smaller than budget " + std::to_string(budget));
  }
  std::vector<const Dialogue*> sorted;
  sorted.reserve(pool.size());
  for (const auto& d : pool) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(),
            [](const Dialogue* a, const Dialogue* b) { return a->id < b->id; });

  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(sorted.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = 0; i < budget; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(budget);
  std::sort(idx.begin(), idx.end());

  SeedSet seeds;
  seeds.budget = budget;
  seeds.examples.reserve(budget);
  for (const auto i : idx) seeds.examples.push_back(*sorted[i]);
  return seeds;
}

}  // namespace gold
