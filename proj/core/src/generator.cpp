#include "gold/generator.hpp"

#include <fstream>
#include <random>
#include <unordered_set>

#include "gold/artifact.hpp"
#include "gold/error.hpp"
#include "gold/text.hpp"

namespace gold {

using nlohmann::json;

std::string_view to_string(SwapStrategy s) noexcept {
  return s == SwapStrategy::RandomUserTurn ? "random_user_turn" : "last_user_turn";
}

SwapStrategy swap_strategy_from_string(std::string_view name) {
  if (name == "random_user_turn" || name == "random") return SwapStrategy::RandomUserTurn;
  if (name == "last_user_turn" || name == "last") return SwapStrategy::LastUserTurn;
  throw Error(ErrorCode::InvalidConfig, "unknown swap strategy '" + std::string(name) + "'");
}

Candidate generate(const Dialogue& seed, std::string_view source_utterance_id, std::string_view match_text,
                   SwapStrategy strategy, std::uint64_t rng_seed) {
  const auto users = seed.user_turn_indices();
  if (users.empty()) throw Error(ErrorCode::NoUserTurn, seed.id);
  if (normalize(match_text).empty()) throw Error(ErrorCode::EmptyMatch, std::string(source_utterance_id));

  std::size_t turn = users.back();
  if (strategy == SwapStrategy::RandomUserTurn && users.size() > 1) {
    std::uint64_t h = fnv1a64(rng_seed, 0xcbf29ce484222325ULL);
    h = fnv1a64(seed.id, h);
    h = fnv1a64(std::string_view("\x1f"), h);
    h = fnv1a64(source_utterance_id, h);
    std::mt19937_64 rng(h);
    turn = users[std::uniform_int_distribution<std::size_t>(0, users.size() - 1)(rng)];
  }

  Candidate c;
  c.dialogue.id = seed.id + "~" + std::string(source_utterance_id);
  c.dialogue.turns = seed.turns;
  c.dialogue.turns[turn].text = std::string(match_text);
  c.dialogue.label = Label::oos(true);
  c.provenance = {seed.id, std::string(source_utterance_id), turn, strategy, seed.turns.size() == 1};
  return c;
}

std::string turn_signature(const Dialogue& d) {
  std::string key;
  for (const auto& t : d.turns) {
    key += t.speaker == Speaker::User ? 'u' : 's';
    key += t.text;
    key += '\x1e';
  }
  return key;
}

std::vector<Candidate> dedupe(std::vector<Candidate> candidates, std::span<const Dialogue> seeds) {
  std::unordered_set<std::string> seen;
  for (const auto& s : seeds) seen.insert(turn_signature(s));
  std::vector<Candidate> out;
  out.reserve(candidates.size());
  for (auto& c : candidates) {
    if (seen.insert(turn_signature(c.dialogue)).second) out.push_back(std::move(c));
  }
  return out;
}

json to_json(const Candidate& c) {
  json j = to_json(c.dialogue);
  j["provenance"] = {{"seed_id", c.provenance.seed_id},
                     {"source_utterance_id", c.provenance.source_utterance_id},
                     {"swapped_turn_index", c.provenance.swapped_turn_index},
                     {"strategy", to_string(c.provenance.strategy)},
                     {"single_turn_seed", c.provenance.single_turn_seed}};
  if (c.elected) j["elected"] = *c.elected;
  return j;
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.dialogue = dialogue_from_json(j, DatasetRole::Target);
  const auto& p = j.at("provenance");
  c.provenance.seed_id = p.at("seed_id").get<std::string>();
  c.provenance.source_utterance_id = p.at("source_utterance_id").get<std::string>();
  c.provenance.swapped_turn_index = p.at("swapped_turn_index").get<std::size_t>();
  c.provenance.strategy = swap_strategy_from_string(p.at("strategy").get<std::string>());
  c.provenance.single_turn_seed = p.value("single_turn_seed", false);
  if (j.contains("elected")) c.elected = j["elected"].get<bool>();
  return c;
}

void write_candidates(const std::filesystem::path& path, std::span<const Candidate> candidates) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& c : candidates) out << to_json(c).dump() << '\n';
}

std::vector<Candidate> read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<Candidate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = json::parse(line);
    if (is_meta_header(record)) continue;
    out.push_back(candidate_from_json(record));
  }
  return out;
}

}  // namespace gold
