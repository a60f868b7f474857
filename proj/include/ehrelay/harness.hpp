#ifndef EHRELAY_HARNESS_HPP_INCLUDED
#define EHRELAY_HARNESS_HPP_INCLUDED

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "config.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace ehrelay
{
    /// Binomial outage estimate with a normal-approximation interval
    /// p_hat +- z*sqrt(p_hat(1-p_hat)/messages).
    struct OutageEstimate
    {
        std::uint64_t outages      = 0;
        std::uint64_t messages     = 0;
        double        p_hat        = 0.0;
        double        ci_halfwidth = 0.0;
        double        z            = 3.0;
        std::array<std::uint64_t, outcome_kinds> by_outcome{};

        double lower() const noexcept { return p_hat - ci_halfwidth; }
        double upper() const noexcept { return p_hat + ci_halfwidth; }

        std::uint64_t count(Outcome o) const noexcept { return by_outcome[static_cast<std::size_t>(o)]; }

        friend bool operator==(const OutageEstimate&, const OutageEstimate&) = default;
    };

    inline OutageEstimate make_estimate(std::uint64_t outages, std::uint64_t messages, double z = 3.0)
    {
        expects(messages > 0, "estimate over zero messages");
        expects(outages <= messages, "more outages than messages");
        OutageEstimate e;
        e.outages      = outages;
        e.messages     = messages;
        e.z            = z;
        e.p_hat        = static_cast<double>(outages) / static_cast<double>(messages);
        e.ci_halfwidth = z * std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(messages));
        return e;
    }

    inline OutageEstimate tally(std::span<const SlotOutcome> outcomes, double z = 3.0)
    {
        std::array<std::uint64_t, outcome_kinds> counts{};
        for (const auto& o : outcomes)
            ++counts[static_cast<std::size_t>(o.result)];
        const auto total   = static_cast<std::uint64_t>(outcomes.size());
        auto       e       = make_estimate(total - counts[static_cast<std::size_t>(Outcome::Success)], total, z);
        e.by_outcome       = counts;
        return e;
    }

    /// a <= b up to the combined interval half-width.
    inline bool no_worse(const OutageEstimate& a, const OutageEstimate& b) noexcept
    {
        return a.p_hat - b.p_hat <= std::hypot(a.ci_halfwidth, b.ci_halfwidth);
    }

    /// a's interval lies strictly below b's.
    inline bool clearly_below(const OutageEstimate& a, const OutageEstimate& b) noexcept
    {
        return a.upper() < b.lower();
    }

    inline bool intervals_overlap(const OutageEstimate& a, const OutageEstimate& b) noexcept
    {
        return a.lower() <= b.upper() && b.lower() <= a.upper();
    }

    /// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
    /// exception thrown by any task is rethrown after all workers stop.
    template <typename Fn>
    void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
    {
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
        if (threads == 1)
        {
            for (std::size_t i = 0; i < count; ++i)
                fn(i);
            return;
        }

        std::atomic<std::size_t> next{0};
        std::exception_ptr       error;
        std::mutex               error_mutex;
        {
            std::vector<std::jthread> workers;
            workers.reserve(threads);
            for (unsigned w = 0; w < threads; ++w)
                workers.emplace_back([&] {
                    for (auto i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                    {
                        try
                        {
                            fn(i);
                        }
                        catch (...)
                        {
                            std::lock_guard lock(error_mutex);
                            if (!error)
                                error = std::current_exception();
                            next = count;
                        }
                    }
                });
        }
        if (error)
            std::rethrow_exception(error);
    }

    /// Outage estimate of one configuration, pooled over its trials.
    inline OutageEstimate estimate_outage(const SimConfig& config, double z = 3.0, unsigned threads = 1)
    {
        validate(config);
        std::vector<OutageEstimate> per_trial(config.n_trials);
        parallel_for(per_trial.size(), threads,
                     [&](std::size_t t) { per_trial[t] = tally(run_trial(config, t), z); });

        std::array<std::uint64_t, outcome_kinds> counts{};
        std::uint64_t                             messages = 0;
        for (const auto& e : per_trial)
        {
            messages += e.messages;
            for (std::size_t k = 0; k < outcome_kinds; ++k)
                counts[k] += e.by_outcome[k];
        }
        auto pooled = make_estimate(messages - counts[static_cast<std::size_t>(Outcome::Success)], messages, z);
        pooled.by_outcome = counts;
        return pooled;
    }

    /// Cartesian grid over N, eta, M and R around a base configuration.
    /// An empty axis means "the base value only".
    struct SweepSpec
    {
        SimConfig                base;
        std::vector<std::size_t> n_relays;
        std::vector<double>      etas;
        std::vector<std::size_t> ms;
        std::vector<double>      rates;
        /// Same channel realisations along the R and M axes.
        bool   common_random_numbers = true;
        double z                     = 3.0;

        friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
    };

    struct SweepPoint
    {
        SimConfig      config;
        OutageEstimate estimate;
    };

    /// Seed of one grid point. With common random numbers only N and eta
    /// enter, so every R and M at the same (N, eta) shares its channels.
    inline std::uint64_t point_seed(std::uint64_t base_seed, const SimConfig& point, bool common_random_numbers)
    {
        if (common_random_numbers)
            return derive_key(base_seed, {point.n_relays, bits_of(point.eta)});
        return derive_key(base_seed,
                          {point.n_relays, bits_of(point.eta), point.policy.m, bits_of(point.target_rate)});
    }

    /// Grid points in row order: N outermost, then eta, M, and R innermost.
    inline std::vector<SimConfig> expand(const SweepSpec& spec)
    {
        if (!spec.ms.empty() && !spec.base.policy.is_mrs())
            throw ConfigError("ms", "an m axis is only valid for mrs");

        const auto n_axis   = spec.n_relays.empty() ? std::vector<std::size_t>{spec.base.n_relays} : spec.n_relays;
        const auto eta_axis = spec.etas.empty() ? std::vector<double>{spec.base.eta} : spec.etas;
        const auto m_axis   = spec.ms.empty() ? std::vector<std::size_t>{spec.base.policy.m} : spec.ms;
        const auto r_axis   = spec.rates.empty() ? std::vector<double>{spec.base.target_rate} : spec.rates;

        std::vector<SimConfig> points;
        points.reserve(n_axis.size() * eta_axis.size() * m_axis.size() * r_axis.size());
        for (auto n : n_axis)
            for (auto eta : eta_axis)
                for (auto m : m_axis)
                    for (auto rate : r_axis)
                    {
                        SimConfig c   = spec.base;
                        c.n_relays    = n;
                        c.eta         = eta;
                        c.policy.m    = m;
                        c.target_rate = rate;
                        c.seed        = point_seed(spec.base.seed, c, spec.common_random_numbers);
                        validate(c);
                        points.push_back(c);
                    }
        return points;
    }

    inline std::vector<SweepPoint> evaluate(std::vector<SimConfig> configs, double z, unsigned threads)
    {
        std::vector<SweepPoint> table(configs.size());
        for (std::size_t i = 0; i < configs.size(); ++i)
            table[i].config = std::move(configs[i]);
        parallel_for(table.size(), threads,
                     [&](std::size_t i) { table[i].estimate = estimate_outage(table[i].config, z); });
        return table;
    }

    inline std::vector<SweepPoint> sweep(const SweepSpec& spec, unsigned threads = 1)
    {
        return evaluate(expand(spec), spec.z, threads);
    }

    struct MStarResult
    {
        std::size_t             m_star = 0;
        std::vector<SweepPoint> table; // one row per evaluated M, in range order
    };

    /// Smallest M attaining the minimum estimated outage in `table`.
    inline std::size_t argmin_m(std::span<const SweepPoint> table)
    {
        expects(!table.empty(), "argmin over an empty table");
        const SweepPoint* best = &table.front();
        for (const auto& p : table)
            if (p.estimate.p_hat < best->estimate.p_hat
                || (p.estimate.p_hat == best->estimate.p_hat && p.config.policy.m < best->config.policy.m))
                best = &p;
        return best->config.policy.m;
    }

    /// Exhaustive search for the pre-selection size minimising outage. Every
    /// M is run on the base seed, so all candidates see the same channels.
    inline MStarResult optimize_m(const SimConfig& base, std::vector<std::size_t> m_range = {}, double z = 3.0,
                                  unsigned threads = 1)
    {
        if (!base.policy.is_mrs())
            throw ConfigError("policy", "optimising m requires policy mrs");
        if (m_range.empty())
        {
            m_range.resize(base.n_relays);
            std::iota(m_range.begin(), m_range.end(), std::size_t{1});
        }

        std::vector<SimConfig> configs;
        for (auto m : m_range)
        {
            SimConfig c = base;
            c.policy    = PolicyKind::mrs(m);
            validate(c);
            configs.push_back(c);
        }
        MStarResult result;
        result.table  = evaluate(std::move(configs), z, threads);
        result.m_star = argmin_m(result.table);
        return result;
    }

    struct ComparisonRow
    {
        double                  rate = 0.0;
        SweepPoint              srs;
        std::vector<SweepPoint> m_table; // MRS with M = 1..N
        std::size_t             m_star = 0;

        const SweepPoint& mrs_one() const { return m_table.front(); }
        const SweepPoint& mrs_best() const { return m_table.at(m_star - 1); }

        bool mrs_one_beats_srs() const { return no_worse(mrs_one().estimate, srs.estimate); }
        bool mrs_best_beats_one() const { return no_worse(mrs_best().estimate, mrs_one().estimate); }
    };

    struct ComparisonReport
    {
        std::vector<ComparisonRow> rows;

        bool ordered() const
        {
            return std::all_of(rows.begin(), rows.end(),
                               [](const ComparisonRow& r) { return r.mrs_one_beats_srs() && r.mrs_best_beats_one(); });
        }
    };

    /// SRS against MRS with M = 1 and M = M*(R) at every rate, all on the
    /// base seed. The policy of `base` is ignored.
    inline ComparisonReport compare_policies(const SimConfig& base, std::span<const double> rates, double z = 3.0,
                                             unsigned threads = 1)
    {
        expects(!rates.empty(), "compare_policies needs at least one rate");
        const auto n = base.n_relays;

        // Per rate: one SRS run followed by MRS with M = 1..N.
        std::vector<SimConfig> configs;
        for (double rate : rates)
        {
            SimConfig c   = base;
            c.target_rate = rate;
            c.policy      = PolicyKind::srs();
            validate(c);
            configs.push_back(c);
            for (std::size_t m = 1; m <= n; ++m)
            {
                c.policy = PolicyKind::mrs(m);
                configs.push_back(c);
            }
        }
        const auto table = evaluate(std::move(configs), z, threads);

        ComparisonReport report;
        const auto       stride = n + 1;
        for (std::size_t r = 0; r < rates.size(); ++r)
        {
            const auto*   block = &table[r * stride];
            ComparisonRow row;
            row.rate = rates[r];
            row.srs  = block[0];
            row.m_table.assign(block + 1, block + stride);
            row.m_star = argmin_m(row.m_table);
            report.rows.push_back(std::move(row));
        }
        return report;
    }
} // namespace ehrelay

#endif // EHRELAY_HARNESS_HPP_INCLUDED
