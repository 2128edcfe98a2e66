#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mixrl::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on any run of ASCII whitespace; never yields empty pieces.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::size_t word_count(std::string_view s);

// Number of start indices at which `needle` occurs in `haystack` (overlaps count).
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

bool contains(std::string_view haystack, std::string_view needle);

// Shortest decimal text that round-trips the double (no exponent notation).
std::string format_double(double value);

// 64-bit FNV-1a; chain calls by passing the previous hash as `h`.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mixrl::text
