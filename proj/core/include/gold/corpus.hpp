#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace gold {

enum class Speaker { System, User };

struct Utterance {
  Speaker speaker = Speaker::User;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

enum class LabelKind { None, Ins, Oos };

struct Label {
  LabelKind kind = LabelKind::None;
  std::string intent;  // non-empty iff kind == Ins
  bool pseudo = false;  // elected augmentation rather than a genuine OOS annotation

  static Label ins(std::string intent) { return {LabelKind::Ins, std::move(intent), false}; }
  static Label oos(bool pseudo = false) { return {LabelKind::Oos, {}, pseudo}; }
  static Label none() { return {}; }

  bool is_ins() const noexcept { return kind == LabelKind::Ins; }
  bool is_oos() const noexcept { return kind == LabelKind::Oos; }

  friend bool operator==(const Label&, const Label&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> turns;
  Label label;

  // Index of the last user turn, or -1 when there is none.
  int last_user_turn() const noexcept;
  std::vector<std::size_t> user_turn_indices() const;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

enum class DatasetRole { Target, Source };

struct DatasetSplit {
  DatasetRole role = DatasetRole::Target;
  std::vector<Dialogue> train;
  std::vector<Dialogue> dev;
  std::vector<Dialogue> test;

  std::size_t size() const noexcept { return train.size() + dev.size() + test.size(); }
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct SeedSet {
  std::vector<Dialogue> examples;
  std::size_t budget = 0;
};

// --- record format -------------------------------------------------------

// Validates one record against the dialogue invariants. Source-role records
// have their labels dropped; target-role records must be labeled.
Dialogue dialogue_from_json(const nlohmann::json& record, DatasetRole role);
nlohmann::json to_json(const Dialogue& d);

std::string to_jsonl_line(const Dialogue& d);

// Reads one split file. Any malformed record rejects the whole file with the
// 1-based line number in the error detail.
std::vector<Dialogue> read_dialogues(const std::filesystem::path& path, DatasetRole role);
void write_dialogues(const std::filesystem::path& path, std::span<const Dialogue> dialogues);

// `location` is either a single .jsonl file (loaded as the train split) or a
// dataset prefix such that `<prefix>.train.jsonl` exists, with optional
// `.dev.jsonl` and `.test.jsonl` siblings.
DatasetSplit ingest(const std::filesystem::path& location, DatasetRole role);
void write_split(const std::filesystem::path& prefix, const DatasetSplit& split);

// Checks id uniqueness within and across splits.
void validate_split(const DatasetSplit& split);

// --- seed sampling -------------------------------------------------------

std::size_t seed_budget(std::size_t ins_train_count, double seed_fraction);

// Uniform sample without replacement from `pool` (all OOS), taken by index
// over the pool sorted by id.
SeedSet sample_seed(std::span<const Dialogue> pool, std::size_t ins_train_count,
                    double seed_fraction, std::uint64_t rng_seed);

// --- synthetic corpora ---------------------------------------------------

struct SynthSpec {
  std::size_t n_ins = 2000;        // INS train dialogues, split evenly over intents
  std::size_t n_intents = 4;
  std::size_t n_oos = 100;         // OOS dialogues in each of train and test
  double vocab_overlap = 0.3;      // share of OOS user tokens drawn from INS vocabularies
  std::uint64_t rng_seed = 0;

  std::size_t n_source = 5000;
  double source_ins_fraction = 0.0;  // INS-like contamination of the source pool
  std::size_t n_topics = 4;
  double eval_fraction = 0.2;        // INS dev and test size relative to n_ins

  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthCorpus {
  DatasetSplit target;
  DatasetSplit source;  // unlabeled utterances in `train`
};

SynthCorpus synth_corpus(const SynthSpec& spec);

// Word vectors for every token synth_corpus can emit; tokens of one intent or
// topic cluster together so averaged embeddings behave like pretrained ones.
std::vector<std::pair<std::string, std::vector<double>>> synth_word_vectors(
    const SynthSpec& spec, std::size_t dim);

}  // namespace gold
