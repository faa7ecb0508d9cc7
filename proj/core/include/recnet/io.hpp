#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace recnet {

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double value);

// Deterministic 64-bit mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace recnet
