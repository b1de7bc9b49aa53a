#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace scgcomp {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
namespace philox {

inline constexpr std::uint32_t kMulA = 0xD2511F53u;
inline constexpr std::uint32_t kMulB = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

constexpr Counter round(const Counter& c, const Key& k)
{
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

constexpr Counter block(Counter c, Key k)
{
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kWeylA;
            k[1] += kWeylB;
        }
        c = round(c, k);
    }
    return c;
}

}  // namespace philox

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Mixes a seed with any number of tags into a new independent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
{
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t t : tags)
        h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ull));
    return h;
}

/// Stateless generator: every draw is a pure function of
/// (seed, entity, stage, draw index).
class CounterRng
{
  public:
    explicit CounterRng(std::uint64_t seed = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    {
    }

    std::uint64_t bits(std::uint64_t entity, std::uint32_t stage, std::uint32_t draw) const
    {
        const philox::Counter c{draw, stage, static_cast<std::uint32_t>(entity),
                                static_cast<std::uint32_t>(entity >> 32)};
        const auto out = philox::block(c, key_);
        return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    }

    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t entity, std::uint32_t stage, std::uint32_t draw = 0) const
    {
        return (static_cast<double>(bits(entity, stage, draw) >> 11) + 0.5) * 0x1.0p-53;
    }

    bool bernoulli(double p, std::uint64_t entity, std::uint32_t stage, std::uint32_t draw = 0) const
    {
        return uniform(entity, stage, draw) < p;
    }

    /// Integer in [0, n).
    std::uint64_t index(std::uint64_t n, std::uint64_t entity, std::uint32_t stage, std::uint32_t draw = 0) const
    {
        const auto v = static_cast<std::uint64_t>(uniform(entity, stage, draw) * static_cast<double>(n));
        return v < n ? v : n - 1;
    }

    /// Category drawn from probabilities (p0, p1, 1 - p0 - p1), returned as 0..2.
    int categorical3(double p0, double p1, std::uint64_t entity, std::uint32_t stage, std::uint32_t draw = 0) const
    {
        const double u = uniform(entity, stage, draw);
        if (u < p0)
            return 0;
        if (u < p0 + p1)
            return 1;
        return 2;
    }

  private:
    philox::Key key_;
};

}  // namespace scgcomp
