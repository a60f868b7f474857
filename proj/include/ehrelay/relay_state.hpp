#ifndef EHRELAY_RELAY_STATE_HPP_INCLUDED
#define EHRELAY_RELAY_STATE_HPP_INCLUDED

#include <cstddef>
#include <optional>
#include <string_view>

#include "channel.hpp"
#include "errors.hpp"

namespace ehrelay
{
    enum class RelayStatus
    {
        Idle,
        Listening,
        Transmitting,
    };

    constexpr std::string_view to_string(RelayStatus status) noexcept
    {
        switch (status)
        {
        case RelayStatus::Idle:
            return "idle";
        case RelayStatus::Listening:
            return "listening";
        case RelayStatus::Transmitting:
            return "transmitting";
        }
        return "?";
    }

    /// Battery ledger of one relay. The battery is unbounded above and never
    /// negative.
    struct RelayState
    {
        std::size_t id      = 0;
        double      battery = 0.0; // J
        RelayStatus status  = RelayStatus::Idle;

        friend bool operator==(const RelayState&, const RelayState&) = default;
    };

    struct HarvestParams
    {
        double eta             = 0.5;  // conversion efficiency
        double slot_duration   = 1.0;  // s
        double source_power    = 10.0; // W
        double distance        = 1.0;  // m
        double sense_threshold = 0.0;  // J; signals below it cannot be harvested

        bool valid() const noexcept
        {
            return eta >= 0.0 && eta <= 1.0 && slot_duration > 0.0 && source_power >= 0.0 && distance > 0.0
                   && sense_threshold >= 0.0;
        }
    };

    inline double harvest_amount(FadingSample gain, const HarvestParams& params) noexcept
    {
        const double energy
            = params.eta * params.source_power * gain.gain_sq * params.slot_duration / (params.distance * params.distance);
        return energy >= params.sense_threshold ? energy : 0.0;
    }

    /// Adds harvested energy. A transmitting relay cannot harvest.
    inline RelayState credit(RelayState relay, double amount)
    {
        expects(amount >= 0.0, "credit: negative amount");
        expects(relay.status != RelayStatus::Transmitting, "credit: relay is transmitting");
        relay.battery += amount;
        return relay;
    }

    /// Spends `cost` joules if the battery covers it; std::nullopt otherwise,
    /// in which case the caller's state is untouched.
    inline std::optional<RelayState> debit_for_tx(RelayState relay, double cost)
    {
        expects(cost >= 0.0, "debit_for_tx: negative cost");
        if (!(relay.battery >= cost))
            return std::nullopt;
        relay.battery -= cost;
        return relay;
    }
} // namespace ehrelay

#endif // EHRELAY_RELAY_STATE_HPP_INCLUDED
