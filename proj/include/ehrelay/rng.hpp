#ifndef EHRELAY_RNG_HPP_INCLUDED
#define EHRELAY_RNG_HPP_INCLUDED

#include <bit>
#include <cstdint>
#include <initializer_list>

namespace ehrelay
{
    /// SplitMix64 output mixer.
    constexpr std::uint64_t mix64(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

    /// Folds a list of 64-bit words into a single key. Order matters.
    constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> words) noexcept
    {
        std::uint64_t h = mix64(seed + golden_gamma);
        for (auto w : words)
            h = mix64(h ^ mix64(w + golden_gamma));
        return h;
    }

    inline std::uint64_t bits_of(double x) noexcept
    {
        return std::bit_cast<std::uint64_t>(x);
    }

    /// Counter-based uniform stream.
    ///
    /// The n-th output is SplitMix64 evaluated at position n of the sequence
    /// started from `key`, so any draw can be addressed directly without
    /// advancing shared state. Two streams with different keys are
    /// independent for simulation purposes.
    class CounterStream
    {
    public:
        constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

        constexpr std::uint64_t key() const noexcept { return key_; }
        constexpr std::uint64_t position() const noexcept { return counter_; }

        constexpr std::uint64_t bits_at(std::uint64_t index) const noexcept
        {
            return mix64(key_ + (index + 1) * golden_gamma);
        }

        /// Uniform on (0, 1], 53-bit resolution.
        constexpr double uniform_at(std::uint64_t index) const noexcept
        {
            return static_cast<double>((bits_at(index) >> 11) + 1) * 0x1.0p-53;
        }

        constexpr double next_uniform() noexcept { return uniform_at(counter_++); }

    private:
        std::uint64_t key_;
        std::uint64_t counter_ = 0;
    };
} // namespace ehrelay

#endif // EHRELAY_RNG_HPP_INCLUDED
