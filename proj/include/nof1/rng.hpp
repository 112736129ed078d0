#ifndef NOF1_RNG_HPP
#define NOF1_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace nof1 {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// FNV-1a, used to turn stream names into stream tags.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based SplitMix64 stream: the n-th draw (0-based) is
/// mix(key + (n + 1) * gamma), which for key = seed reproduces the
/// sequential SplitMix64 reference output. Draws can be taken in any
/// order, so each (purpose, name, day) gets its own independent stream.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t at(std::uint64_t counter) const noexcept
    {
        return splitmix64_mix(key_ + (counter + 1) * kGoldenGamma);
    }

    /// Uniform on [0, 1) with 53 bits.
    double uniform(std::uint64_t counter) const noexcept
    {
        return static_cast<double>(at(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1), safe for log().
    double uniform_open(std::uint64_t counter) const noexcept
    {
        return (static_cast<double>(at(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on draws (counter, counter + 1).
    double normal(std::uint64_t counter) const noexcept
    {
        const double u1 = uniform_open(counter);
        const double u2 = uniform(counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(std::uint64_t counter, double p) const noexcept { return uniform(counter) < p; }

    std::uint64_t key() const noexcept { return key_; }

    /// Derive a child stream keyed by an additional tag.
    constexpr CounterRng child(std::uint64_t tag) const noexcept
    {
        return CounterRng(splitmix64_mix(key_ ^ splitmix64_mix(tag + kGoldenGamma)));
    }
    CounterRng child(std::string_view name) const noexcept { return child(fnv1a64(name)); }

private:
    std::uint64_t key_;
};

/// Seed for the i-th member of a family derived from one master seed.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return splitmix64_mix(master + (index + 1) * kGoldenGamma);
}

} // namespace nof1

#endif
