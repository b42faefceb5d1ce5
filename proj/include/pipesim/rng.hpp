#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pipesim {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the stream `name` under a run seed. Streams with different names
/// are independent, so adding a sampler never shifts another one's draws.
inline constexpr std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view name) {
  return splitmix64(splitmix64(run_seed) ^ fnv1a(name));
}

inline Rng make_stream(std::uint64_t run_seed, std::string_view name) {
  return Rng{stream_seed(run_seed, name)};
}

/// Seed of replication `index`. Replication 0 runs with the base seed.
inline constexpr std::uint64_t replication_seed(std::uint64_t base, std::uint64_t index) {
  return index == 0 ? base : splitmix64(base ^ splitmix64(index));
}

/// The named per-run streams.
struct RngStreams {
  explicit RngStreams(std::uint64_t seed)
      : assets{make_stream(seed, "assets")},
        arrivals{make_stream(seed, "arrivals")},
        durations{make_stream(seed, "durations")},
        noise{make_stream(seed, "noise")},
        pipelines{make_stream(seed, "pipelines")},
        models{make_stream(seed, "models")} {}

  Rng assets;
  Rng arrivals;
  Rng durations;
  Rng noise;
  Rng pipelines;
  Rng models;
};

/// Uniform draw on [0, 1).
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>{0.0, 1.0}(rng); }

} // namespace pipesim
