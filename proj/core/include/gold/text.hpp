#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gold {

// Lowercases ASCII letters and collapses runs of whitespace to one space,
// trimming both ends.
std::string normalize(std::string_view text);

// Whitespace split of the normalized text.
std::vector<std::string> tokenize(std::string_view text);

// 64-bit FNV-1a. `basis` lets callers chain several fields into one hash.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

// Mixes integers into a running FNV hash (little-endian byte order).
std::uint64_t fnv1a64(std::uint64_t value, std::uint64_t basis) noexcept;

std::string hex64(std::uint64_t value);

}  // namespace gold
