#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pathtest::util {

namespace fs = std::filesystem;

// --- text ---

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view s, std::string_view needle);

// Collapses every run of whitespace to a single space and trims the ends.
// Used wherever two spellings of the same source slice must compare equal.
std::string collapse_ws(std::string_view s);

// --- hashing ---

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Stable fingerprint of a text: whitespace-collapsed, then FNV-1a hashed.
std::string fingerprint(std::string_view text);

// --- filesystem ---

std::string read_file(const fs::path& path);
std::optional<std::string> read_file_if_exists(const fs::path& path);

// Writes via a temp name in the same directory, then renames into place.
void atomic_write(const fs::path& path, std::string_view content);

void ensure_dir(const fs::path& dir);

// All regular files below `root` whose extension matches, sorted by path.
std::vector<fs::path> collect_files(const fs::path& root,
                                    const std::vector<std::string>& extensions);

// Fresh empty directory under the system temp root; caller owns cleanup.
fs::path make_temp_dir(const std::string& prefix);

// --- misc ---

std::string env_or(const std::string& var, const std::string& fallback);

// Replaces ${VAR} occurrences with the environment value (empty if unset).
std::string interpolate_env(const std::string& text);

std::string format_pct(double pct);  // two decimals, e.g. "94.33"

}  // namespace pathtest::util
