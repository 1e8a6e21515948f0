#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gold/corpus.hpp"
#include "json.hpp"

namespace gold {

enum class SwapStrategy { RandomUserTurn, LastUserTurn };

std::string_view to_string(SwapStrategy s) noexcept;
// Accepts "random_user_turn"/"random" and "last_user_turn"/"last".
SwapStrategy swap_strategy_from_string(std::string_view name);

struct Provenance {
  std::string seed_id;
  std::string source_utterance_id;
  std::size_t swapped_turn_index = 0;
  SwapStrategy strategy = SwapStrategy::RandomUserTurn;
  bool single_turn_seed = false;  // candidate degenerates to the bare source utterance

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Candidate {
  Dialogue dialogue;  // labeled pseudo-OOS
  Provenance provenance;
  std::optional<bool> elected;
};

// Replaces exactly one user turn of `seed` with `match_text`; system turns are
// copied verbatim. The random strategy is a pure function of
// (rng_seed, seed id, source utterance id).
Candidate generate(const Dialogue& seed, std::string_view source_utterance_id, std::string_view match_text,
                   SwapStrategy strategy, std::uint64_t rng_seed);

// Drops candidates whose turn sequence equals an earlier candidate's or any
// seed's. Order of survivors is preserved.
std::vector<Candidate> dedupe(std::vector<Candidate> candidates, std::span<const Dialogue> seeds = {});

// Key used for duplicate detection: speakers and texts of every turn.
std::string turn_signature(const Dialogue& d);

nlohmann::json to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);
void write_candidates(const std::filesystem::path& path, std::span<const Candidate> candidates);
std::vector<Candidate> read_candidates(const std::filesystem::path& path);

}  // namespace gold
