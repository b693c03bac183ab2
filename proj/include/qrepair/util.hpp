#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qrepair {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Runs of whitespace become one space; leading/trailing whitespace dropped.
std::string collapse_ws(std::string_view s);

// Lowercased, whitespace-normalized copy. Punctuation retained.
std::string lower_collapse(std::string_view s);

// Loose comparison form: lowercase, ASCII punctuation replaced by spaces,
// whitespace collapsed. Used for answer/draft equality and grounding tokens.
std::string normalize_loose(std::string_view s);

bool is_blank(std::string_view s);

std::vector<std::string> split_ws(std::string_view s);

// Word-boundary-aware checks on an already lowercased, ws-normalized string.
bool starts_with_word(std::string_view text, std::string_view word);
bool contains_phrase(std::string_view text, std::string_view phrase);

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// Throws IoError on failure.
std::string read_file(const std::string& path);

// Write to <path>.tmp.<pid> then rename over <path>. Throws IoError.
void atomic_write_file(const std::string& path, std::string_view data);

bool file_exists(const std::string& path);

}  // namespace qrepair
