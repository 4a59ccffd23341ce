#include "stp/common.hpp"
#include "stp/rng.hpp"

#include <cctype>
#include <charconv>
#include <limits>

namespace stp {

std::string_view to_string(Direction d) { return d == Direction::Up ? "up" : "down"; }

Direction parse_direction(std::string_view text) {
  if (text == "up") return Direction::Up;
  if (text == "down") return Direction::Down;
  throw InvalidArgument("unknown direction '" + std::string(text) + "'");
}

Micros parse_duration(std::string_view text) {
  std::size_t split = 0;
  while (split < text.size() && (std::isdigit(static_cast<unsigned char>(text[split])) || text[split] == '.'))
    ++split;
  const std::string_view number = text.substr(0, split);
  const std::string_view unit = text.substr(split);
  if (number.empty()) throw InvalidArgument("bad duration '" + std::string(text) + "'");

  double scale = 0;
  if (unit.empty() || unit == "us")
    scale = 1;
  else if (unit == "ms")
    scale = 1e3;
  else if (unit == "s")
    scale = 1e6;
  else if (unit == "m")
    scale = 60e6;
  else if (unit == "h")
    scale = 3600e6;
  else
    throw InvalidArgument("bad duration unit in '" + std::string(text) + "'");

  double value = 0;
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
  if (ec != std::errc{} || ptr != number.data() + number.size())
    throw InvalidArgument("bad duration '" + std::string(text) + "'");
  const double us = value * scale;
  if (us > static_cast<double>(std::numeric_limits<Micros>::max() / 2))
    throw InvalidArgument("duration out of range '" + std::string(text) + "'");
  return static_cast<Micros>(us + 0.5);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a * 0xd1b54a32d192ed03ULL);
  h = splitmix64(s);
  s = h ^ (b * 0x8cb92ba72f3d8dd7ULL);
  return splitmix64(s);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  engine_.seed(splitmix64(s));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  // rejection on the top of the range keeps the draw unbiased
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

}  // namespace stp
