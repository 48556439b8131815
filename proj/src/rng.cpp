#include "pcotdr/rng.hpp"

namespace pcotdr {
namespace {

constexpr std::uint64_t k_golden = 0x9e3779b97f4a7c15ull;

std::uint64_t mix64(std::uint64_t z) {
  z += k_golden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t lane0, std::uint64_t lane1,
                     std::uint64_t lane2) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(lane0 + 0x8c2f1d6a3b5e9740ull));
  s = mix64(s ^ mix64(lane1 + 0x4cf5ad432745937full));
  s = mix64(s ^ mix64(lane2 + 0x2545f4914f6cdd1dull));
  state_ = s;
}

RngStream RngStream::named(std::uint64_t seed, std::string_view path) {
  return RngStream(seed, fnv1a(path));
}

std::uint64_t RngStream::next_u64() {
  state_ += k_golden;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace pcotdr
