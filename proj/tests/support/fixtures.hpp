#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gold/corpus.hpp"

namespace fixture {

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* root = std::getenv("GOLD_TEST_TMP");
  std::filesystem::path dir = std::filesystem::path(root != nullptr ? root : "gold-test-tmp") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline gold::Dialogue user(const std::string& id, const std::string& text, gold::Label label = {}) {
  return {id, {{gold::Speaker::User, text}}, std::move(label)};
}

inline gold::Dialogue ins(const std::string& id, const std::string& text, const std::string& intent) {
  return user(id, text, gold::Label::ins(intent));
}

inline gold::Dialogue oos(const std::string& id, const std::string& text) {
  return user(id, text, gold::Label::oos());
}

inline gold::SynthSpec small_spec(std::uint64_t seed = 0) {
  gold::SynthSpec s;
  s.n_ins = 200;
  s.n_oos = 40;
  s.n_source = 600;
  s.rng_seed = seed;
  return s;
}

}  // namespace fixture
