#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stp {

/// Time is integer microseconds since trace start throughout the library.
using Micros = std::int64_t;

inline constexpr Micros kMicrosPerSecond = 1'000'000;

enum class Direction : std::uint8_t { Up, Down };

/// Selects which directions an aggregate (rate series, byte totals) counts.
enum class DirectionFilter : std::uint8_t { Up, Down, Both };

inline bool matches(DirectionFilter filter, Direction d) {
  return filter == DirectionFilter::Both ||
         (filter == DirectionFilter::Up && d == Direction::Up) ||
         (filter == DirectionFilter::Down && d == Direction::Down);
}

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses "1h", "2m", "10s", "250ms", "40us"; a bare number is microseconds.
Micros parse_duration(std::string_view text);

/// Ceiling division for non-negative integers.
constexpr std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  return num == 0 ? 0 : (num + den - 1) / den;
}

}  // namespace stp
