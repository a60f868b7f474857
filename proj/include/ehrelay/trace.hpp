#ifndef EHRELAY_TRACE_HPP_INCLUDED
#define EHRELAY_TRACE_HPP_INCLUDED

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "engine.hpp"

// Line-delimited slot traces: one JSON header line carrying the resolved
// configuration, then one JSON object per slot.

namespace ehrelay
{
    inline constexpr int trace_format_version = 1;

    namespace detail
    {
        constexpr char status_char(RelayStatus s) noexcept
        {
            switch (s)
            {
            case RelayStatus::Idle:
                return 'I';
            case RelayStatus::Listening:
                return 'L';
            case RelayStatus::Transmitting:
                return 'T';
            }
            return '?';
        }
    } // namespace detail

    inline nlohmann::json trace_header(const SimConfig& config, std::uint64_t trial)
    {
        nlohmann::json j;
        j["type"]    = "header";
        j["format"]  = "ehrelay-trace";
        j["version"] = trace_format_version;
        j["trial"]   = trial;
        j["config"]  = nlohmann::json(config_to_json(config));
        return j;
    }

    inline nlohmann::json record_to_json(const SlotRecord& r)
    {
        nlohmann::json j;
        j["type"]   = "slot";
        j["slot"]   = r.slot;
        j["before"] = r.battery_before;
        j["after"]  = r.battery_after;
        std::string status;
        for (auto s : r.status)
            status.push_back(detail::status_char(s));
        j["status"] = status;
        if (r.forwarder)
            j["forwarder"] = *r.forwarder;
        else
            j["forwarder"] = nullptr;
        j["tx_power"]  = r.tx_power;
        j["listeners"] = r.listeners;
        j["decoded"]   = r.decoded;
        auto gains     = nlohmann::json::array();
        for (const auto& g : r.gains)
            gains.push_back({g.relay, static_cast<int>(g.link), g.gain.gain_sq});
        j["gains"]    = std::move(gains);
        auto resolved = nlohmann::json::array();
        for (const auto& o : r.resolved)
            resolved.push_back({o.message, std::string(to_string(o.result))});
        j["resolved"]  = std::move(resolved);
        j["harvested"] = r.harvested;
        j["debited"]   = r.debited;
        return j;
    }

    /// Runs one trial, writing its trace to `out`. Returns the post-warmup
    /// outcomes exactly as run_trial does.
    inline std::vector<SlotOutcome> write_trace(const SimConfig& config, std::ostream& out, std::uint64_t trial = 0)
    {
        out << trace_header(config, trial).dump() << '\n';
        return run_trial(config, trial, [&out](const SlotRecord& r) { out << record_to_json(r).dump() << '\n'; });
    }

    struct ReplayResult
    {
        bool                         ok = true;
        std::optional<std::uint64_t> first_divergent_slot;
        std::string                  detail;

        explicit operator bool() const noexcept { return ok; }
    };

    namespace detail
    {
        struct MissingGain
        {
        };

        /// Serves the gains recorded for the slot being replayed.
        class RecordedGains
        {
        public:
            explicit RecordedGains(const std::vector<GainDraw>* draws) : draws_(draws) {}

            FadingSample operator()(std::uint64_t, std::size_t relay, Link link) const
            {
                for (const auto& d : *draws_)
                    if (d.relay == relay && d.link == link)
                        return d.gain;
                throw MissingGain{};
            }

        private:
            const std::vector<GainDraw>* draws_;
        };

        inline ReplayResult diverged(std::uint64_t slot, std::string detail)
        {
            return {false, slot, std::move(detail)};
        }
    } // namespace detail

    /// Re-executes the update rules from the recorded gains and checks that
    /// every battery, selection and outcome matches the trace bit for bit.
    inline ReplayResult replay_check(std::istream& in)
    {
        std::string line;
        if (!std::getline(in, line))
            return {false, std::nullopt, "empty trace"};

        SimConfig config;
        try
        {
            const auto header = nlohmann::json::parse(line);
            if (header.value("type", "") != "header" || header.value("format", "") != "ehrelay-trace")
                return {false, std::nullopt, "missing trace header"};

            config = config_from_json(header.at("config"));
            validate(config);
        }
        catch (const std::exception& e)
        {
            return {false, std::nullopt, std::string("bad trace header: ") + e.what()};
        }

        std::vector<GainDraw> draws;
        SlotEngine            engine(config, detail::RecordedGains(&draws));
        SlotRecord            computed;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto slot = engine.slot();
            if (engine.done())
                return detail::diverged(slot, "trace has more slots than the configuration");

            nlohmann::json recorded;
            try
            {
                recorded = nlohmann::json::parse(line);
                draws.clear();
                for (const auto& g : recorded.at("gains"))
                    draws.push_back({g.at(0).get<std::size_t>(), static_cast<Link>(g.at(1).get<int>()),
                                     FadingSample{g.at(2).get<double>()}});
            }
            catch (const std::exception& e)
            {
                return detail::diverged(slot, std::string("unreadable slot record: ") + e.what());
            }

            try
            {
                engine.step(&computed);
            }
            catch (const detail::MissingGain&)
            {
                return detail::diverged(slot, "a gain needed by the update rules is missing");
            }
            catch (const ContractViolation& e)
            {
                return detail::diverged(slot, std::string("invariant violated: ") + e.what());
            }

            const auto expected = record_to_json(computed);
            if (expected != recorded)
            {
                std::string field = "record";
                for (auto it = expected.begin(); it != expected.end(); ++it)
                    if (!recorded.contains(it.key()) || recorded.at(it.key()) != it.value())
                    {
                        field = it.key();
                        break;
                    }
                return detail::diverged(slot, "field '" + field + "' differs from the recomputed value");
            }
        }
        if (!engine.done())
            return detail::diverged(engine.slot(), "trace ends early");
        return {};
    }
} // namespace ehrelay

#endif // EHRELAY_TRACE_HPP_INCLUDED
