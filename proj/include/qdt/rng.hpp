#pragma once

#include <cstdint>
#include <random>

namespace qdt {

using Rng = std::mt19937_64;

// SplitMix64 finalizer, used to derive decorrelated seed streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream `stream` of a parent seed. Every random process in a run hangs off
// one of these streams, so concurrent evaluations never share RNG state:
//   run seed
//     +- stream 0: driver (init genomes, selection, variation)
//     +- stream 1: evaluation base; eval seed i = mix_seed(base, i)
//          +- stream 0: agent (Q init, epsilon draws)
//          +- stream 1+e: environment reset for episode e
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
}

}  // namespace qdt
