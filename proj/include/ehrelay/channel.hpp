#ifndef EHRELAY_CHANNEL_HPP_INCLUDED
#define EHRELAY_CHANNEL_HPP_INCLUDED

#include <cmath>
#include <limits>

#include "rng.hpp"

namespace ehrelay
{
    /// Squared channel magnitude |h|^2 of one link for one slot.
    struct FadingSample
    {
        double gain_sq = 0.0;

        friend constexpr bool operator==(FadingSample, FadingSample) = default;
    };

    /// Transmit power, receiver noise and distance of one link. Path loss
    /// follows the free-space d^2 law.
    struct LinkBudget
    {
        double tx_power  = 0.0; // W
        double noise_var = 1.0; // W
        double distance  = 1.0; // m

        bool valid() const noexcept { return tx_power >= 0.0 && noise_var > 0.0 && distance > 0.0; }
    };

    /// Inverse CDF of the unit-mean exponential, u in (0, 1].
    inline FadingSample gain_from_uniform(double u) noexcept
    {
        return {-std::log(u)};
    }

    inline FadingSample draw_gain(CounterStream& stream) noexcept
    {
        return gain_from_uniform(stream.next_uniform());
    }

    inline FadingSample gain_at(const CounterStream& stream, std::uint64_t index) noexcept
    {
        return gain_from_uniform(stream.uniform_at(index));
    }

    inline double snr(FadingSample gain, const LinkBudget& budget) noexcept
    {
        return gain.gain_sq * budget.tx_power / (budget.noise_var * budget.distance * budget.distance);
    }

    /// Achievable rate in bit/s/Hz over one of the two orthogonal slots.
    inline double link_rate(FadingSample gain, const LinkBudget& budget) noexcept
    {
        return 0.5 * std::log2(1.0 + snr(gain, budget));
    }

    /// Transmit power at which link_rate equals `target_rate` exactly.
    /// Returns +infinity when the channel is zero and the rate is positive.
    inline double inversion_power(double target_rate, FadingSample gain, double noise_var,
                                  double distance) noexcept
    {
        const double snr_needed = std::exp2(2.0 * target_rate) - 1.0;
        if (snr_needed <= 0.0)
            return 0.0;
        if (gain.gain_sq <= 0.0)
            return std::numeric_limits<double>::infinity();
        return snr_needed * noise_var * distance * distance / gain.gain_sq;
    }

    /// Smallest |h|^2 for which link_rate >= target_rate at the given power.
    inline double gain_threshold(double target_rate, double tx_power, double noise_var,
                                 double distance) noexcept
    {
        return (std::exp2(2.0 * target_rate) - 1.0) * noise_var * distance * distance / tx_power;
    }

    inline double dbw_to_watts(double dbw) noexcept
    {
        return std::pow(10.0, dbw / 10.0);
    }
} // namespace ehrelay

#endif // EHRELAY_CHANNEL_HPP_INCLUDED
