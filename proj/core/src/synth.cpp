#include <cstdio>
#include <random>
#include <string>

#include "gold/corpus.hpp"
#include "gold/error.hpp"

namespace gold {

namespace {

constexpr std::size_t kIntentVocab = 24;
constexpr std::size_t kFillerVocab = 12;
constexpr std::size_t kSystemVocab = 16;
constexpr std::size_t kTopicVocab = 40;
constexpr std::size_t kGenericVocab = 60;
constexpr double kFillerShare = 0.2;

std::string token(const char* prefix, std::size_t group, std::size_t k) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%zuw%zu", prefix, group, k);
  return buf;
}

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, i);
  return buf;
}

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.rng_seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::size_t length(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

  std::string ins_token(std::size_t intent) {
    if (uniform() < kFillerShare) return token("f", 0, below(kFillerVocab));
    return token("i", intent, below(kIntentVocab));
  }
  std::string topic_token(std::size_t topic) { return token("t", topic, below(kTopicVocab)); }
  std::string generic_token() { return token("g", 0, below(kGenericVocab)); }

  std::string ins_text(std::size_t intent) {
    std::string s;
    const std::size_t n = length(1, 6);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + ins_token(intent);
    return s;
  }

  std::string oos_text(std::size_t topic, std::size_t mixed_intent) {
    std::string s;
    const std::size_t n = length(4, 7);
    for (std::size_t i = 0; i < n; ++i) {
      const bool from_ins = uniform() < spec_.vocab_overlap;
      s += (i ? " " : "") + (from_ins ? ins_token(mixed_intent) : topic_token(topic));
    }
    return s;
  }

  std::string system_text() {
    std::string s;
    const std::size_t n = length(3, 6);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + token("s", 0, below(kSystemVocab));
    return s;
  }

  // Shapes: [user] 25%, [system, user] 35%, [system, user, system, user] 40%.
  template <typename UserText>
  std::vector<Utterance> turns(UserText&& user_text) {
    const double r = uniform();
    std::vector<Utterance> out;
    const int pairs = r < 0.6 ? 1 : 2;
    const bool opening_system = r >= 0.25;
    for (int p = 0; p < pairs; ++p) {
      if (opening_system || p > 0) out.push_back({Speaker::System, system_text()});
      out.push_back({Speaker::User, user_text()});
    }
    return out;
  }

  Dialogue ins_dialogue(const std::string& id, std::size_t intent) {
    Dialogue d;
    d.id = id;
    d.turns = turns([&] { return ins_text(intent); });
    d.label = Label::ins("intent_" + std::to_string(intent));
    return d;
  }

  Dialogue oos_dialogue(const std::string& id) {
    const std::size_t topic = below(spec_.n_topics);
    const std::size_t mixed_intent = below(spec_.n_intents);
    Dialogue d;
    d.id = id;
    d.turns = turns([&] { return oos_text(topic, mixed_intent); });
    d.label = Label::oos();
    return d;
  }

  Dialogue source_utterance(const std::string& id) {
    std::string text;
    const double r = uniform();
    const std::size_t n = length(4, 7);
    if (r < spec_.source_ins_fraction) {
      // In-scope request that mentions an out-of-scope topic word now and then.
      const std::size_t intent = below(spec_.n_intents);
      const std::size_t topic = below(spec_.n_topics);
      for (std::size_t i = 0; i < n; ++i) {
        text += (i ? " " : "") + (uniform() < 0.3 ? topic_token(topic) : ins_token(intent));
      }
    } else if (uniform() < 0.5) {
      const std::size_t topic = below(spec_.n_topics);
      for (std::size_t i = 0; i < n; ++i) {
        text += (i ? " " : "") + (uniform() < 0.7 ? topic_token(topic) : generic_token());
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        text += (i ? " " : "") + (uniform() < 0.1 ? topic_token(below(spec_.n_topics)) : generic_token());
      }
    }
    Dialogue d;
    d.id = id;
    d.turns = {{Speaker::User, std::move(text)}};
    return d;
  }

 private:
  const SynthSpec& spec_;
  std::mt19937_64 rng_;
};

}  // namespace

nlohmann::json SynthSpec::to_json() const {
  return {{"n_ins", n_ins},
          {"n_intents", n_intents},
          {"n_oos", n_oos},
          {"vocab_overlap", vocab_overlap},
          {"rng_seed", rng_seed},
          {"n_source", n_source},
          {"source_ins_fraction", source_ins_fraction},
          {"n_topics", n_topics},
          {"eval_fraction", eval_fraction}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.n_ins = j.value("n_ins", s.n_ins);
  s.n_intents = j.value("n_intents", s.n_intents);
  s.n_oos = j.value("n_oos", s.n_oos);
  s.vocab_overlap = j.value("vocab_overlap", s.vocab_overlap);
  s.rng_seed = j.value("rng_seed", s.rng_seed);
  s.n_source = j.value("n_source", s.n_source);
  s.source_ins_fraction = j.value("source_ins_fraction", s.source_ins_fraction);
  s.n_topics = j.value("n_topics", s.n_topics);
  s.eval_fraction = j.value("eval_fraction", s.eval_fraction);
  return s;
}

SynthCorpus synth_corpus(const SynthSpec& spec) {
  if (spec.n_intents < 2) throw Error(ErrorCode::InvalidSpec, "n_intents must be >= 2");
  if (spec.n_ins < spec.n_intents) throw Error(ErrorCode::InvalidSpec, "n_ins must be >= n_intents");
  if (!(spec.vocab_overlap >= 0.0 && spec.vocab_overlap <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "vocab_overlap must be in [0, 1]");
  }
  if (!(spec.source_ins_fraction >= 0.0 && spec.source_ins_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "source_ins_fraction must be in [0, 1]");
  }
  if (spec.n_topics == 0) throw Error(ErrorCode::InvalidSpec, "n_topics must be positive");
  if (spec.eval_fraction < 0.0) throw Error(ErrorCode::InvalidSpec, "eval_fraction must be >= 0");

  Generator gen(spec);
  SynthCorpus out;
  out.target.role = DatasetRole::Target;
  out.source.role = DatasetRole::Source;

  const auto n_eval = static_cast<std::size_t>(static_cast<double>(spec.n_ins) * spec.eval_fraction);
  auto fill = [&](std::vector<Dialogue>& split, const char* name, std::size_t n_ins, std::size_t n_oos) {
    const std::string ins_prefix = std::string("ins-") + name;
    const std::string oos_prefix = std::string("oos-") + name;
    for (std::size_t i = 0; i < n_ins; ++i) {
      split.push_back(gen.ins_dialogue(padded_id(ins_prefix.c_str(), i), i % spec.n_intents));
    }
    for (std::size_t i = 0; i < n_oos; ++i) {
      split.push_back(gen.oos_dialogue(padded_id(oos_prefix.c_str(), i)));
    }
  };
  fill(out.target.train, "train", spec.n_ins, spec.n_oos);
  fill(out.target.dev, "dev", n_eval, spec.n_oos / 2);
  fill(out.target.test, "test", n_eval, spec.n_oos);

  for (std::size_t i = 0; i < spec.n_source; ++i) {
    out.source.train.push_back(gen.source_utterance(padded_id("src", i)));
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<double>>> synth_word_vectors(const SynthSpec& spec,
                                                                            std::size_t dim) {
  std::mt19937_64 rng(spec.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::pair<std::string, std::vector<double>>> table;

  auto group = [&](auto&& name_of, std::size_t size) {
    std::vector<double> center(dim);
    for (auto& c : center) c = normal(rng);
    for (std::size_t k = 0; k < size; ++k) {
      std::vector<double> v(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = center[i] + 0.5 * normal(rng);
      table.emplace_back(name_of(k), std::move(v));
    }
  };
  for (std::size_t c = 0; c < spec.n_intents; ++c) {
    group([&](std::size_t k) { return token("i", c, k); }, kIntentVocab);
  }
  group([](std::size_t k) { return token("f", 0, k); }, kFillerVocab);
  group([](std::size_t k) { return token("s", 0, k); }, kSystemVocab);
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    group([&](std::size_t k) { return token("t", t, k); }, kTopicVocab);
  }
  group([](std::size_t k) { return token("g", 0, k); }, kGenericVocab);
  return table;
}

}  // namespace gold
