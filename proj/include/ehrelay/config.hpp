#ifndef EHRELAY_CONFIG_HPP_INCLUDED
#define EHRELAY_CONFIG_HPP_INCLUDED

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "channel.hpp"
#include "errors.hpp"
#include "relay_state.hpp"

namespace ehrelay
{
    enum class Scheme
    {
        Srs,
        Mrs,
    };

    struct PolicyKind
    {
        Scheme      scheme = Scheme::Srs;
        std::size_t m      = 0; // pre-selection size, MRS only

        static constexpr PolicyKind srs() noexcept { return {Scheme::Srs, 0}; }
        static constexpr PolicyKind mrs(std::size_t m) noexcept { return {Scheme::Mrs, m}; }

        constexpr bool is_mrs() const noexcept { return scheme == Scheme::Mrs; }

        friend constexpr bool operator==(PolicyKind, PolicyKind) = default;
    };

    /// Pipelined: the source transmits every slot while last slot's relay
    /// forwards. Framed: broadcast on even slots, forward on odd slots.
    enum class Schedule
    {
        Pipelined,
        Framed,
    };

    constexpr std::string_view to_string(Scheme s) noexcept
    {
        return s == Scheme::Srs ? "srs" : "mrs";
    }

    constexpr std::string_view to_string(Schedule s) noexcept
    {
        return s == Schedule::Pipelined ? "pipelined" : "framed";
    }

    inline Scheme parse_scheme(std::string_view text)
    {
        if (text == "srs")
            return Scheme::Srs;
        if (text == "mrs")
            return Scheme::Mrs;
        throw ConfigError("policy", "policy must be srs or mrs, got '" + std::string(text) + "'");
    }

    inline Schedule parse_schedule(std::string_view text)
    {
        if (text == "pipelined")
            return Schedule::Pipelined;
        if (text == "framed")
            return Schedule::Framed;
        throw ConfigError("schedule", "schedule must be pipelined or framed, got '" + std::string(text) + "'");
    }

    /// Scenario parameters of one simulation point. Defaults reproduce the
    /// reference setup: 10 dBW at source and relay, unit distance, unit noise,
    /// 20000 messages.
    struct SimConfig
    {
        std::size_t  n_relays         = 5;
        PolicyKind   policy           = PolicyKind::srs();
        double       target_rate      = 1.0;  // bit/s/Hz
        double       eta              = 0.5;
        double       source_power_dbw = 10.0;
        double       relay_power_dbw  = 10.0; // fixed SRS power
        double       noise_var        = 1.0;  // W
        double       distance         = 1.0;  // m
        double       slot_duration    = 1.0;  // s
        double       sense_threshold  = 0.0;  // J
        /// Unset means ten fixed-power transmissions' worth.
        std::optional<double> initial_energy;
        std::uint64_t n_messages      = 20000;
        std::uint64_t warmup_messages = 0;
        std::uint64_t n_trials        = 1;
        std::uint64_t seed            = 1;
        Schedule      schedule        = Schedule::Pipelined;
        /// Assert per-slot invariants (energy ledger, single transmitter).
        bool check_invariants = false;

        double source_power() const noexcept { return dbw_to_watts(source_power_dbw); }
        double relay_power() const noexcept { return dbw_to_watts(relay_power_dbw); }
        double fixed_tx_cost() const noexcept { return relay_power() * slot_duration; }

        double initial_energy_joules() const noexcept
        {
            return initial_energy ? *initial_energy : 10.0 * fixed_tx_cost();
        }

        HarvestParams harvest_params() const noexcept
        {
            return {eta, slot_duration, source_power(), distance, sense_threshold};
        }

        std::uint64_t slots_per_trial() const noexcept
        {
            return schedule == Schedule::Framed ? 2 * n_messages : n_messages + 1;
        }

        friend bool operator==(const SimConfig&, const SimConfig&) = default;
    };

    namespace detail
    {
        inline void require(bool ok, const char* key, const std::string& message)
        {
            if (!ok)
                throw ConfigError(key, message);
        }

        inline bool finite(double x) noexcept
        {
            return std::isfinite(x);
        }
    } // namespace detail

    /// Throws ConfigError naming the first offending key.
    inline void validate(const SimConfig& c)
    {
        using detail::finite;
        using detail::require;
        require(c.n_relays >= 1, "n", "n must be at least 1");
        if (c.policy.is_mrs())
        {
            require(c.policy.m >= 1, "m", "m required for mrs");
            require(c.policy.m <= c.n_relays, "m", "m must not exceed n");
        }
        else
        {
            require(c.policy.m == 0, "m", "m is only valid for mrs");
        }
        require(finite(c.target_rate) && c.target_rate >= 0.0, "rate", "rate must be a finite value >= 0");
        require(finite(c.eta) && c.eta >= 0.0 && c.eta <= 1.0, "eta", "eta must lie in [0, 1]");
        require(finite(c.source_power_dbw), "ps-dbw", "ps-dbw must be finite");
        require(finite(c.relay_power_dbw), "pr-dbw", "pr-dbw must be finite");
        require(finite(c.noise_var) && c.noise_var > 0.0, "sigma2", "sigma2 must be > 0");
        require(finite(c.distance) && c.distance > 0.0, "distance", "distance must be > 0");
        require(finite(c.slot_duration) && c.slot_duration > 0.0, "slot", "slot must be > 0");
        require(finite(c.sense_threshold) && c.sense_threshold >= 0.0, "sense-threshold",
                "sense-threshold must be >= 0");
        if (c.initial_energy)
            require(*c.initial_energy >= 0.0 && !std::isnan(*c.initial_energy), "initial-energy",
                    "initial-energy must be >= 0");
        require(c.n_messages >= 1, "messages", "messages must be at least 1");
        require(c.warmup_messages < c.n_messages, "warmup", "warmup must be smaller than messages");
        require(c.n_trials >= 1, "trials", "trials must be at least 1");
    }
} // namespace ehrelay

#endif // EHRELAY_CONFIG_HPP_INCLUDED
