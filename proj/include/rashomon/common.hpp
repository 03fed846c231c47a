#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rashomon {

// Error hierarchy. Every failure surfaced by the library derives from Error so
// the CLI can catch one type and report the stage that raised it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file missing or unreadable.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Caller passed an argument outside the operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input was readable but its contents violate a data invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Seed derivation.
//
// All randomness is keyed off a master seed through splitmix64 mixing, so a
// sub-seed depends only on (parent, tag...) and never on scheduling order.
// ---------------------------------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent) noexcept { return splitmix64(parent); }

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t first, Rest... rest) noexcept {
  return derive_seed(splitmix64(parent ^ splitmix64(first + 0x632BE59BD9B4E019ULL)),
                     static_cast<std::uint64_t>(rest)...);
}

// FNV-1a, used to turn string tags into seed components and for fingerprints.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rashomon
