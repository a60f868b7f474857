#ifndef EHRELAY_REPORT_HPP_INCLUDED
#define EHRELAY_REPORT_HPP_INCLUDED

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "config_io.hpp"
#include "harness.hpp"

namespace ehrelay
{
    inline constexpr std::string_view version = "0.1.0";

    inline constexpr std::string_view csv_header
        = "policy,n,m,eta,rate,sigma2,ps_dbw,pr_dbw,schedule,seed,messages,outages,p_out,ci_halfwidth";

    /// Shortest text that parses back to the same double, '.' decimal.
    inline std::string format_double(double x)
    {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
        expects(ec == std::errc{}, "format_double: buffer too small");
        return std::string(buf, end);
    }

    inline double parse_double(std::string_view text)
    {
        double value = 0.0;
        auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || end != text.data() + text.size())
            throw std::invalid_argument("not a number: '" + std::string(text) + "'");
        return value;
    }

    inline void write_csv_row(std::ostream& out, const SweepPoint& p)
    {
        const auto& c = p.config;
        const auto& e = p.estimate;
        out << to_string(c.policy.scheme) << ',' << c.n_relays << ',' << c.policy.m << ',' << format_double(c.eta)
            << ',' << format_double(c.target_rate) << ',' << format_double(c.noise_var) << ','
            << format_double(c.source_power_dbw) << ',' << format_double(c.relay_power_dbw) << ','
            << to_string(c.schedule) << ',' << c.seed << ',' << e.messages << ',' << e.outages << ','
            << format_double(e.p_hat) << ',' << format_double(e.ci_halfwidth) << '\n';
    }

    inline void write_csv(std::ostream& out, std::span<const SweepPoint> table)
    {
        out << csv_header << '\n';
        for (const auto& p : table)
            write_csv_row(out, p);
    }

    inline std::string to_csv(std::span<const SweepPoint> table)
    {
        std::ostringstream out;
        write_csv(out, table);
        return out.str();
    }

    /// Reads the p_out column of an emitted table.
    inline std::vector<double> read_p_out(std::istream& in)
    {
        std::string line;
        if (!std::getline(in, line) || line != csv_header)
            throw std::invalid_argument("unexpected CSV header");
        std::vector<double> values;
        while (std::getline(in, line))
        {
            std::vector<std::string_view> fields;
            std::string_view              rest = line;
            for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(','))
            {
                fields.push_back(rest.substr(0, comma));
                rest.remove_prefix(comma + 1);
            }
            fields.push_back(rest);
            if (fields.size() != 14)
                throw std::invalid_argument("CSV row with " + std::to_string(fields.size()) + " fields");
            values.push_back(parse_double(fields[12]));
        }
        return values;
    }

    inline nlohmann::ordered_json row_to_json(const SweepPoint& p)
    {
        const auto&            c = p.config;
        const auto&            e = p.estimate;
        nlohmann::ordered_json j;
        j["policy"]       = std::string(to_string(c.policy.scheme));
        j["n"]            = c.n_relays;
        j["m"]            = c.policy.m;
        j["eta"]          = c.eta;
        j["rate"]         = c.target_rate;
        j["sigma2"]       = c.noise_var;
        j["ps_dbw"]       = c.source_power_dbw;
        j["pr_dbw"]       = c.relay_power_dbw;
        j["schedule"]     = std::string(to_string(c.schedule));
        j["seed"]         = c.seed;
        j["messages"]     = e.messages;
        j["outages"]      = e.outages;
        j["p_out"]        = e.p_hat;
        j["ci_halfwidth"] = e.ci_halfwidth;
        nlohmann::ordered_json causes;
        for (std::size_t k = 1; k < outcome_kinds; ++k)
            causes[std::string(to_string(static_cast<Outcome>(k)))] = e.by_outcome[k];
        j["outage_causes"] = std::move(causes);
        return j;
    }

    /// Everything needed to reproduce an output table.
    struct RunManifest
    {
        std::string              subcommand;
        SweepSpec                spec;
        unsigned                 threads = 1;
        std::string              format  = "csv";
        std::string              timestamp;
        std::vector<std::string> outputs;
    };

    inline std::string utc_timestamp()
    {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm    tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    inline nlohmann::ordered_json manifest_to_json(const RunManifest& m)
    {
        nlohmann::ordered_json j;
        j["tool"]       = "ehrelay";
        j["version"]    = std::string(version);
        j["subcommand"] = m.subcommand;
        j["config"]     = config_to_json(m.spec.base);
        nlohmann::ordered_json axes;
        axes["n"]    = m.spec.n_relays;
        axes["eta"]  = m.spec.etas;
        axes["m"]    = m.spec.ms;
        axes["rate"] = m.spec.rates;
        j["axes"]    = std::move(axes);
        j["common_random_numbers"] = m.spec.common_random_numbers;
        j["z"]                     = m.spec.z;
        j["seed"]                  = m.spec.base.seed;
        j["threads"]               = m.threads;
        j["format"]                = m.format;
        j["timestamp"]             = m.timestamp;
        j["outputs"]               = m.outputs;
        return j;
    }

    inline RunManifest manifest_from_json(const nlohmann::json& j)
    {
        try
        {
            RunManifest m;
            m.subcommand                 = j.at("subcommand").get<std::string>();
            m.spec.base                  = config_from_json(j.at("config"));
            const auto& axes             = j.at("axes");
            m.spec.n_relays              = axes.at("n").get<std::vector<std::size_t>>();
            m.spec.etas                  = axes.at("eta").get<std::vector<double>>();
            m.spec.ms                    = axes.at("m").get<std::vector<std::size_t>>();
            m.spec.rates                 = axes.at("rate").get<std::vector<double>>();
            m.spec.common_random_numbers = j.at("common_random_numbers").get<bool>();
            m.spec.z                     = j.at("z").get<double>();
            m.threads                    = j.at("threads").get<unsigned>();
            m.format                     = j.at("format").get<std::string>();
            m.timestamp                  = j.value("timestamp", "");
            m.outputs                    = j.value("outputs", std::vector<std::string>{});
            return m;
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError("manifest", std::string("malformed manifest: ") + e.what());
        }
    }

    /// JSON table: the manifest, one object per row, plus optional extras.
    inline nlohmann::ordered_json table_to_json(const RunManifest& manifest, std::span<const SweepPoint> table,
                                                nlohmann::ordered_json extra = {})
    {
        nlohmann::ordered_json j;
        j["manifest"] = manifest_to_json(manifest);
        auto rows     = nlohmann::ordered_json::array();
        for (const auto& p : table)
            rows.push_back(row_to_json(p));
        j["rows"] = std::move(rows);
        if (!extra.is_null())
            for (auto it = extra.begin(); it != extra.end(); ++it)
                j[it.key()] = it.value();
        return j;
    }
} // namespace ehrelay

#endif // EHRELAY_REPORT_HPP_INCLUDED
