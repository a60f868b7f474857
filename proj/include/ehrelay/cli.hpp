#ifndef EHRELAY_CLI_HPP_INCLUDED
#define EHRELAY_CLI_HPP_INCLUDED

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "harness.hpp"
#include "report.hpp"
#include "trace.hpp"

// Command-line front end. Exit codes: 0 success, 1 invalid input or failed
// check, 2 internal error.

namespace ehrelay::cli
{
    inline constexpr const char* output_dir_env = "EHRELAY_OUTPUT_DIR";

    struct Invocation
    {
        std::string                subcommand;
        SweepSpec                  spec;
        unsigned                   threads = 1;
        std::string                format  = "csv";
        std::optional<std::string> out;
        std::optional<std::string> trace_path;
        std::string                input_path; // replay trace or rerun manifest
        std::string                help_text;  // non-empty when help was requested
    };

    class OutputError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline std::vector<double> default_compare_rates()
    {
        return {0.5, 1.0, 1.5, 2.0, 2.5};
    }

    /// Builds the invocation from command-line tokens (without argv[0]).
    /// Precedence: defaults, then the --config file, then flags. Throws
    /// ConfigError or CLI::ParseError on invalid input.
    inline Invocation parse_invocation(std::vector<std::string> args)
    {
        Invocation inv;
        SimConfig  cfg;
        std::string policy   = "srs";
        std::string schedule = "pipelined";
        std::size_t m        = 0;
        double      z        = 3.0;

        CLI::App app{"Monte Carlo outage simulator for energy-harvesting relay selection", "ehrelay"};
        app.fallthrough();
        app.require_subcommand(1);
        app.set_config("--config", "", "flat key = value file with option defaults");
        app.allow_config_extras(CLI::config_extras_mode::error);

        app.add_option("--policy", policy, "relay selection: srs or mrs")->check(CLI::IsMember({"srs", "mrs"}));
        app.add_option("--n", cfg.n_relays, "number of relays");
        app.add_option("--m", m, "mrs pre-selection size");
        app.add_option("--rate", cfg.target_rate, "target rate R [bit/s/Hz]");
        app.add_option("--eta", cfg.eta, "energy conversion efficiency");
        app.add_option("--ps-dbw", cfg.source_power_dbw, "source power [dBW]");
        app.add_option("--pr-dbw", cfg.relay_power_dbw, "fixed relay power for srs [dBW]");
        app.add_option("--sigma2", cfg.noise_var, "noise variance [W]");
        app.add_option("--distance", cfg.distance, "source/relay/destination distance [m]");
        app.add_option("--slot", cfg.slot_duration, "slot duration [s]");
        app.add_option("--sense-threshold", cfg.sense_threshold, "minimum harvestable energy [J]");
        app.add_option_function<double>(
            "--initial-energy", [&cfg](double v) { cfg.initial_energy = v; },
            "initial battery of every relay [J] (default: ten fixed-power transmissions)");
        app.add_option("--messages", cfg.n_messages, "messages per trial");
        app.add_option("--warmup", cfg.warmup_messages, "leading messages excluded from the estimate");
        app.add_option("--trials", cfg.n_trials, "independent trials pooled per estimate");
        app.add_option("--seed", cfg.seed, "base seed");
        app.add_option("--schedule", schedule, "pipelined or framed")
            ->check(CLI::IsMember({"pipelined", "framed"}));
        app.add_flag("--check-invariants", cfg.check_invariants, "assert per-slot invariants");
        app.add_option("--threads", inv.threads, "worker threads")->check(CLI::PositiveNumber);
        app.add_option("--z", z, "confidence interval multiplier")->check(CLI::PositiveNumber);
        app.add_option("--format", inv.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        app.add_option("--out", inv.out, "output file (default: $" + std::string(output_dir_env)
                                             + " or ./results, named after the subcommand)");

        auto* run = app.add_subcommand("run", "single outage estimate");
        run->add_option("--trace", inv.trace_path, "write a slot trace of trial 0");

        std::vector<double>      sweep_rates, sweep_etas;
        std::vector<std::size_t> sweep_ns, sweep_ms;
        bool                     no_crn = false;
        auto* sw = app.add_subcommand("sweep", "outage over a parameter grid");
        sw->add_option("--rates", sweep_rates, "R axis")->delimiter(',');
        sw->add_option("--etas", sweep_etas, "eta axis")->delimiter(',');
        sw->add_option("--ns", sweep_ns, "N axis")->delimiter(',');
        sw->add_option("--ms", sweep_ms, "M axis (mrs)")->delimiter(',');
        sw->add_flag("--no-crn", no_crn, "independent seeds at every grid point");

        std::vector<std::size_t> opt_ms;
        auto* opt = app.add_subcommand("opt-m", "search the mrs pre-selection size minimising outage");
        opt->add_option("--ms", opt_ms, "candidate M values (default 1..N)")->delimiter(',');

        std::vector<double> compare_rates;
        auto* cmp = app.add_subcommand("compare", "srs against mrs with M = 1 and M = M*");
        cmp->add_option("--rates", compare_rates, "R grid")->delimiter(',');

        auto* rep = app.add_subcommand("replay", "verify a slot trace");
        rep->add_option("trace", inv.input_path, "trace file")->required();

        auto* rer = app.add_subcommand("rerun", "reproduce an output from its manifest");
        rer->add_option("manifest", inv.input_path, "manifest file")->required();

        std::reverse(args.begin(), args.end());
        try
        {
            app.parse(args);
        }
        catch (const CLI::CallForHelp& e)
        {
            std::ostringstream text, ignored;
            app.exit(e, text, ignored);
            inv.help_text = text.str();
            return inv;
        }
        catch (const CLI::CallForAllHelp& e)
        {
            std::ostringstream text, ignored;
            app.exit(e, text, ignored);
            inv.help_text = text.str();
            return inv;
        }

        inv.subcommand  = app.get_subcommands().front()->get_name();
        cfg.policy      = {parse_scheme(policy), m};
        cfg.schedule    = parse_schedule(schedule);
        inv.spec.z      = z;

        if (inv.subcommand == "replay" || inv.subcommand == "rerun")
            return inv;

        if (inv.subcommand == "sweep")
        {
            inv.spec.rates                 = sweep_rates;
            inv.spec.etas                  = sweep_etas;
            inv.spec.n_relays              = sweep_ns;
            inv.spec.ms                    = sweep_ms;
            inv.spec.common_random_numbers = !no_crn;
            if (cfg.policy.is_mrs() && cfg.policy.m == 0 && !sweep_ms.empty())
                cfg.policy.m = sweep_ms.front();
        }
        else if (inv.subcommand == "opt-m")
        {
            if (cfg.policy.m != 0 && !cfg.policy.is_mrs())
                throw ConfigError("m", "m is only valid for mrs");
            cfg.policy   = PolicyKind::mrs(cfg.policy.m == 0 ? 1 : cfg.policy.m);
            inv.spec.ms  = opt_ms;
        }
        else if (inv.subcommand == "compare")
        {
            if (cfg.policy.m != 0 && !cfg.policy.is_mrs())
                throw ConfigError("m", "m is only valid for mrs");
            cfg.policy     = PolicyKind::srs();
            inv.spec.rates = compare_rates.empty() ? default_compare_rates() : compare_rates;
        }
        inv.spec.base = cfg;
        if (inv.subcommand == "sweep")
            (void)expand(inv.spec);
        else
            validate(cfg);
        if (inv.subcommand == "opt-m")
            for (auto mm : inv.spec.ms)
                if (mm < 1 || mm > cfg.n_relays)
                    throw ConfigError("ms", "every M must lie in 1..n");
        return inv;
    }

    namespace detail
    {
        inline std::filesystem::path output_path(const Invocation& inv)
        {
            if (inv.out)
                return *inv.out;
            const char* dir = std::getenv(output_dir_env);
            return std::filesystem::path(dir && *dir ? dir : "results") / (inv.subcommand + "." + inv.format);
        }

        inline void write_file(const std::filesystem::path& path, const std::string& content)
        {
            std::error_code ec;
            if (path.has_parent_path())
                std::filesystem::create_directories(path.parent_path(), ec);
            std::ofstream file(path, std::ios::binary | std::ios::trunc);
            if (!file)
                throw OutputError("cannot write " + path.string());
            file << content;
            file.close();
            if (!file)
                throw OutputError("cannot write " + path.string());
        }

        inline std::string manifest_path(const std::filesystem::path& output)
        {
            return output.string() + ".manifest.json";
        }

        inline void emit(const Invocation& inv, std::span<const SweepPoint> table, std::vector<std::string> extra_outputs,
                         nlohmann::ordered_json extra, std::ostream& out)
        {
            const auto path = output_path(inv);
            RunManifest manifest;
            manifest.subcommand = inv.subcommand;
            manifest.spec       = inv.spec;
            manifest.threads    = inv.threads;
            manifest.format     = inv.format;
            manifest.timestamp  = utc_timestamp();
            manifest.outputs    = {path.string()};
            for (auto& p : extra_outputs)
                manifest.outputs.push_back(std::move(p));

            if (inv.format == "json")
                write_file(path, table_to_json(manifest, table, std::move(extra)).dump(2) + "\n");
            else
                write_file(path, to_csv(table));
            write_file(manifest_path(path), manifest_to_json(manifest).dump(2) + "\n");
            out << "wrote " << path.string() << '\n';
        }

        inline void print_point(std::ostream& out, const SweepPoint& p)
        {
            const auto& c = p.config;
            const auto& e = p.estimate;
            out << std::left << std::setw(4) << to_string(c.policy.scheme) << " n=" << std::setw(3) << c.n_relays
                << " m=" << std::setw(3) << c.policy.m << " eta=" << std::setw(6) << format_double(c.eta)
                << " rate=" << std::setw(6) << format_double(c.target_rate) << " p_out=" << std::fixed
                << std::setprecision(5) << e.p_hat << " +- " << e.ci_halfwidth << std::defaultfloat << " ("
                << e.outages << "/" << e.messages << ")\n";
        }

        inline int execute(const Invocation& inv, std::ostream& out, std::ostream& err);

        inline int run_replay(const Invocation& inv, std::ostream& out, std::ostream& err)
        {
            std::ifstream in(inv.input_path);
            if (!in)
            {
                err << "error: cannot open trace " << inv.input_path << '\n';
                return 1;
            }
            const auto result = replay_check(in);
            if (result)
            {
                out << "replay ok\n";
                return 0;
            }
            err << "replay mismatch";
            if (result.first_divergent_slot)
                err << " at slot " << *result.first_divergent_slot;
            err << ": " << result.detail << '\n';
            return 1;
        }

        inline int run_rerun(const Invocation& inv, std::ostream& out, std::ostream& err)
        {
            std::ifstream in(inv.input_path);
            if (!in)
            {
                err << "error: cannot open manifest " << inv.input_path << '\n';
                return 1;
            }
            nlohmann::json j;
            try
            {
                j = nlohmann::json::parse(in);
            }
            catch (const nlohmann::json::exception& e)
            {
                throw ConfigError("manifest", std::string("malformed manifest: ") + e.what());
            }
            const auto manifest = manifest_from_json(j);
            Invocation again;
            again.subcommand = manifest.subcommand;
            again.spec       = manifest.spec;
            again.threads    = manifest.threads;
            again.format     = manifest.format;
            if (inv.out)
                again.out = inv.out;
            else if (!manifest.outputs.empty())
                again.out = manifest.outputs.front();
            if (again.subcommand == "replay" || again.subcommand == "rerun")
                throw ConfigError("manifest", "manifest does not describe a table");
            validate(again.spec.base);
            return execute(again, out, err);
        }

        inline int execute(const Invocation& inv, std::ostream& out, std::ostream& err)
        {
            const auto& spec = inv.spec;
            if (inv.subcommand == "replay")
                return run_replay(inv, out, err);
            if (inv.subcommand == "rerun")
                return run_rerun(inv, out, err);

            if (inv.subcommand == "run")
            {
                std::vector<SweepPoint> table{{spec.base, estimate_outage(spec.base, spec.z, inv.threads)}};
                std::vector<std::string> extra_outputs;
                if (inv.trace_path)
                {
                    std::ostringstream trace;
                    write_trace(spec.base, trace);
                    write_file(*inv.trace_path, trace.str());
                    extra_outputs.push_back(*inv.trace_path);
                    out << "wrote trace " << *inv.trace_path << '\n';
                }
                print_point(out, table.front());
                for (std::size_t k = 1; k < outcome_kinds; ++k)
                    if (auto n = table.front().estimate.by_outcome[k])
                        out << "  " << to_string(static_cast<Outcome>(k)) << ": " << n << '\n';
                emit(inv, table, std::move(extra_outputs), {}, out);
                return 0;
            }
            if (inv.subcommand == "sweep")
            {
                const auto table = sweep(spec, inv.threads);
                for (const auto& p : table)
                    print_point(out, p);
                emit(inv, table, {}, {}, out);
                return 0;
            }
            if (inv.subcommand == "opt-m")
            {
                const auto result = optimize_m(spec.base, spec.ms, spec.z, inv.threads);
                for (const auto& p : result.table)
                    print_point(out, p);
                out << "m_star = " << result.m_star << '\n';
                nlohmann::ordered_json extra;
                extra["m_star"] = result.m_star;
                emit(inv, result.table, {}, std::move(extra), out);
                return 0;
            }
            if (inv.subcommand == "compare")
            {
                const auto report = compare_policies(spec.base, spec.rates, spec.z, inv.threads);
                std::vector<SweepPoint> table;
                auto                    verdicts = nlohmann::ordered_json::array();
                for (const auto& row : report.rows)
                {
                    table.push_back(row.srs);
                    table.push_back(row.mrs_one());
                    table.push_back(row.mrs_best());
                    out << "rate " << format_double(row.rate) << ": srs " << std::fixed << std::setprecision(5)
                        << row.srs.estimate.p_hat << ", mrs(1) " << row.mrs_one().estimate.p_hat << ", mrs("
                        << row.m_star << ") " << row.mrs_best().estimate.p_hat << std::defaultfloat
                        << (row.mrs_one_beats_srs() && row.mrs_best_beats_one() ? "  ordered" : "  NOT ordered")
                        << '\n';
                    nlohmann::ordered_json v;
                    v["rate"]               = row.rate;
                    v["m_star"]             = row.m_star;
                    v["mrs_one_beats_srs"]  = row.mrs_one_beats_srs();
                    v["mrs_best_beats_one"] = row.mrs_best_beats_one();
                    verdicts.push_back(std::move(v));
                }
                out << "ordering " << (report.ordered() ? "holds" : "violated") << " at every rate\n";
                nlohmann::ordered_json extra;
                extra["comparison"] = std::move(verdicts);
                extra["ordered"]    = report.ordered();
                emit(inv, table, {}, std::move(extra), out);
                return 0;
            }
            throw ContractViolation("unknown subcommand " + inv.subcommand);
        }
    } // namespace detail

    inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
    {
        try
        {
            const auto inv = parse_invocation(args);
            if (!inv.help_text.empty())
            {
                out << inv.help_text;
                return 0;
            }
            return detail::execute(inv, out, err);
        }
        catch (const ConfigError& e)
        {
            err << "error: " << e.what() << '\n';
            return 1;
        }
        catch (const CLI::ParseError& e)
        {
            err << "error: " << e.what() << '\n';
            return 1;
        }
        catch (const OutputError& e)
        {
            err << "error: " << e.what() << '\n';
            return 1;
        }
        catch (const ContractViolation& e)
        {
            err << "internal error: " << e.what() << '\n';
            return 2;
        }
        catch (const std::exception& e)
        {
            err << "internal error: " << e.what() << '\n';
            return 2;
        }
    }
} // namespace ehrelay::cli

#endif // EHRELAY_CLI_HPP_INCLUDED
