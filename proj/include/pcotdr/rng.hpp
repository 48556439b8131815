#pragma once
#include <cstdint>
#include <string_view>

namespace pcotdr {

/// Keyed substream random generator.
///
/// Every (seed, lane0, lane1, lane2) tuple opens an independent, reproducible
/// stream; the simulation derives one stream per sampled gate from
/// (seed, timeline, pulse, gate) so results are bit-identical regardless of
/// how positions are distributed over worker threads. Streams can also be
/// opened by path name ("atten/verify") for one-off draws.
///
/// The generator is splitmix64 with the key material absorbed through the
/// same avalanche mix; states never correlate across lanes in practice and
/// each stream is consumed for at most a handful of draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t lane0 = 0, std::uint64_t lane1 = 0,
                     std::uint64_t lane2 = 0);

  static RngStream named(std::uint64_t seed, std::string_view path);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double next_unit();

 private:
  std::uint64_t state_;
};

}  // namespace pcotdr
