#pragma once

#include <cstdint>
#include <random>

namespace tthf {

// splitmix64 finalizer; used to derive independent substreams from a master
// seed so that devices and steps can be evaluated in any order.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    return mix64(mix64(mix64(master ^ a) ^ b) ^ c);
}

using Rng = std::mt19937_64;

// Stream tags keeping mini-batch sampling, device sampling, and data
// generation independent of one another.
namespace stream {
inline constexpr std::uint64_t minibatch = 0x6d696e6962617463ULL;
inline constexpr std::uint64_t sampling = 0x73616d706c696e67ULL;
inline constexpr std::uint64_t datagen = 0x6461746167656e00ULL;
inline constexpr std::uint64_t topology = 0x746f706f6c6f6779ULL;
}  // namespace stream

}  // namespace tthf
