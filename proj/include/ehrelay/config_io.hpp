#ifndef EHRELAY_CONFIG_IO_HPP_INCLUDED
#define EHRELAY_CONFIG_IO_HPP_INCLUDED

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace ehrelay
{
    inline nlohmann::ordered_json config_to_json(const SimConfig& c)
    {
        nlohmann::ordered_json j;
        j["policy"]          = std::string(to_string(c.policy.scheme));
        j["n"]               = c.n_relays;
        j["m"]               = c.policy.m;
        j["rate"]            = c.target_rate;
        j["eta"]             = c.eta;
        j["ps_dbw"]          = c.source_power_dbw;
        j["pr_dbw"]          = c.relay_power_dbw;
        j["sigma2"]          = c.noise_var;
        j["distance"]        = c.distance;
        j["slot"]            = c.slot_duration;
        j["sense_threshold"] = c.sense_threshold;
        if (c.initial_energy)
            j["initial_energy"] = *c.initial_energy;
        else
            j["initial_energy"] = nullptr;
        j["messages"]         = c.n_messages;
        j["warmup"]           = c.warmup_messages;
        j["trials"]           = c.n_trials;
        j["seed"]             = c.seed;
        j["schedule"]         = std::string(to_string(c.schedule));
        j["check_invariants"] = c.check_invariants;
        return j;
    }

    /// Inverse of config_to_json. Unknown keys are rejected.
    template <typename Json>
    SimConfig config_from_json(const Json& j)
    {
        SimConfig c;
        for (auto it = j.begin(); it != j.end(); ++it)
        {
            const std::string& key = it.key();
            const auto&        v   = it.value();
            try
            {
                if (key == "policy")
                    c.policy.scheme = parse_scheme(v.template get<std::string>());
                else if (key == "n")
                    c.n_relays = v.template get<std::size_t>();
                else if (key == "m")
                    c.policy.m = v.template get<std::size_t>();
                else if (key == "rate")
                    c.target_rate = v.template get<double>();
                else if (key == "eta")
                    c.eta = v.template get<double>();
                else if (key == "ps_dbw")
                    c.source_power_dbw = v.template get<double>();
                else if (key == "pr_dbw")
                    c.relay_power_dbw = v.template get<double>();
                else if (key == "sigma2")
                    c.noise_var = v.template get<double>();
                else if (key == "distance")
                    c.distance = v.template get<double>();
                else if (key == "slot")
                    c.slot_duration = v.template get<double>();
                else if (key == "sense_threshold")
                    c.sense_threshold = v.template get<double>();
                else if (key == "initial_energy")
                {
                    if (v.is_null())
                        c.initial_energy.reset();
                    else
                        c.initial_energy = v.template get<double>();
                }
                else if (key == "messages")
                    c.n_messages = v.template get<std::uint64_t>();
                else if (key == "warmup")
                    c.warmup_messages = v.template get<std::uint64_t>();
                else if (key == "trials")
                    c.n_trials = v.template get<std::uint64_t>();
                else if (key == "seed")
                    c.seed = v.template get<std::uint64_t>();
                else if (key == "schedule")
                    c.schedule = parse_schedule(v.template get<std::string>());
                else if (key == "check_invariants")
                    c.check_invariants = v.template get<bool>();
                else
                    throw ConfigError(key, "unknown configuration key '" + key + "'");
            }
            catch (const nlohmann::json::exception& e)
            {
                throw ConfigError(key, "bad value for '" + key + "': " + e.what());
            }
        }
        return c;
    }
} // namespace ehrelay

#endif // EHRELAY_CONFIG_IO_HPP_INCLUDED
