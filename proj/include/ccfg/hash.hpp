#pragma once

#include <bit>
#include <cstdint>
#include <span>

namespace ccfg {

// 64-bit FNV-1a over little-endian encodings.
class Fnv1a {
public:
    void add_bytes(std::span<const std::uint8_t> bytes)
    {
        for (auto b : bytes) {
            state_ ^= b;
            state_ *= 0x100000001b3ULL;
        }
    }

    void add(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<std::uint8_t>(v >> (8 * i));
            state_ *= 0x100000001b3ULL;
        }
    }

    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// splitmix64 finalizer, used to derive independent RNG streams.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index)
{
    return mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

}  // namespace ccfg
