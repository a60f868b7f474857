#ifndef EHRELAY_ENGINE_HPP_INCLUDED
#define EHRELAY_ENGINE_HPP_INCLUDED

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "channel.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "relay_state.hpp"
#include "rng.hpp"
#include "selection.hpp"

namespace ehrelay
{
    enum class Outcome
    {
        Success,
        OutageNoCandidate,     // SRS: nobody could afford the fixed-power transmission
        OutageDecodeFail,      // SRS: the designated relay could not decode the source
        OutageRelayLink,       // SRS: fixed-power relay-to-destination rate below target
        OutageEmptyLambda,     // MRS: no listener decoded the source
        OutageNoFeasiblePower, // MRS: no decoder could afford its inversion power
    };

    inline constexpr std::size_t outcome_kinds = 6;

    constexpr std::string_view to_string(Outcome o) noexcept
    {
        constexpr std::array<std::string_view, outcome_kinds> names
            = {"success", "no_candidate", "decode_fail", "relay_link", "empty_lambda", "no_feasible_power"};
        return names[static_cast<std::size_t>(o)];
    }

    inline std::optional<Outcome> parse_outcome(std::string_view text) noexcept
    {
        for (std::size_t i = 0; i < outcome_kinds; ++i)
            if (to_string(static_cast<Outcome>(i)) == text)
                return static_cast<Outcome>(i);
        return std::nullopt;
    }

    struct SlotOutcome
    {
        std::uint64_t message = 0;
        Outcome       result  = Outcome::Success;

        friend bool operator==(const SlotOutcome&, const SlotOutcome&) = default;
    };

    enum class Link : std::uint8_t
    {
        SourceToRelay = 0,
        RelayToDest   = 1,
    };

    struct GainDraw
    {
        std::size_t  relay = 0;
        Link         link  = Link::SourceToRelay;
        FadingSample gain;

        friend bool operator==(const GainDraw&, const GainDraw&) = default;
    };

    /// Everything that happened in one slot.
    struct SlotRecord
    {
        std::uint64_t              slot = 0;
        std::vector<double>        battery_before;
        std::vector<double>        battery_after;
        std::vector<RelayStatus>   status;
        std::optional<std::size_t> forwarder;
        double                     tx_power = 0.0;
        std::vector<std::size_t>   listeners;
        std::vector<std::size_t>   decoded;
        std::vector<GainDraw>      gains;
        std::vector<SlotOutcome>   resolved;
        double                     harvested = 0.0;
        double                     debited   = 0.0;

        friend bool operator==(const SlotRecord&, const SlotRecord&) = default;
    };

    inline std::uint64_t trial_key(std::uint64_t seed, std::uint64_t trial) noexcept
    {
        return derive_key(seed, {trial});
    }

    /// Block-fading gains addressed by (slot, relay, link). The value for a
    /// given address does not depend on which other gains were drawn, so
    /// runs that differ only in R or M see the same channels.
    class CounterGains
    {
    public:
        CounterGains(std::uint64_t key, std::size_t n_relays) noexcept : stream_(key), n_relays_(n_relays) {}

        FadingSample operator()(std::uint64_t slot, std::size_t relay, Link link) const noexcept
        {
            const auto index = (slot * n_relays_ + relay) * 2 + static_cast<std::uint64_t>(link);
            return gain_at(stream_, index);
        }

    private:
        CounterStream stream_;
        std::size_t   n_relays_;
    };

    template <typename Source>
    concept GainSource = requires(Source& s, std::uint64_t slot, std::size_t relay, Link link) {
        { s(slot, relay, link) } -> std::convertible_to<FadingSample>;
    };

    /// Slot-by-slot simulator of one trial.
    ///
    /// Each slot runs, in order:
    ///  1. forward: last slot's decoder (SRS) or the best affordable member of
    ///     last slot's decode set (MRS) transmits to the destination;
    ///  2. designate: listeners are chosen among relays not transmitting;
    ///  3. broadcast: listeners try to decode, idle relays harvest.
    /// Under the framed schedule even slots only broadcast and odd slots
    /// only forward.
    template <GainSource Gains>
    class SlotEngine
    {
    public:
        SlotEngine(const SimConfig& config, Gains gains) : config_(config), gains_(std::move(gains))
        {
            validate(config_);
            relays_.resize(config_.n_relays);
            for (std::size_t i = 0; i < relays_.size(); ++i)
                relays_[i] = RelayState{i, config_.initial_energy_joules(), RelayStatus::Idle};
            view_.resize(relays_.size());
            outcomes_.reserve(config_.n_messages);
        }

        bool done() const noexcept { return slot_ >= config_.slots_per_trial(); }

        std::uint64_t slot() const noexcept { return slot_; }

        const std::vector<RelayState>& relays() const noexcept { return relays_; }

        /// Outcomes in resolution order, warmup included.
        const std::vector<SlotOutcome>& outcomes() const noexcept { return outcomes_; }

        const SimConfig& config() const noexcept { return config_; }

        void step(SlotRecord* record = nullptr)
        {
            expects(!done(), "SlotEngine::step past the last slot");
            const auto t = slot_;

            bool          broadcast = false;
            bool          forward   = false;
            std::uint64_t message   = 0;
            if (config_.schedule == Schedule::Framed)
            {
                broadcast = t % 2 == 0;
                forward   = !broadcast;
                message   = t / 2;
            }
            else
            {
                broadcast = t < config_.n_messages;
                forward   = true;
                message   = t;
            }

            record_ = record;
            if (record_)
            {
                *record_      = SlotRecord{};
                record_->slot = t;
                for (const auto& r : relays_)
                    record_->battery_before.push_back(r.battery);
            }
            long double total_before = config_.check_invariants ? battery_total() : 0.0L;
            harvested_               = 0.0;
            debited_                 = 0.0;

            for (auto& r : relays_)
                r.status = RelayStatus::Idle;

            if (forward && pending_)
            {
                run_forward(t, *pending_);
                pending_.reset();
            }
            if (broadcast)
                run_broadcast(t, message);

            if (record_)
            {
                for (const auto& r : relays_)
                {
                    record_->battery_after.push_back(r.battery);
                    record_->status.push_back(r.status);
                }
                record_->harvested = harvested_;
                record_->debited   = debited_;
            }
            if (config_.check_invariants)
                check_slot(total_before);

            record_ = nullptr;
            ++slot_;
        }

    private:
        struct Pending
        {
            std::uint64_t            message = 0;
            std::vector<std::size_t> decoders;
        };

        FadingSample draw(std::uint64_t t, std::size_t relay, Link link)
        {
            const FadingSample g = gains_(t, relay, link);
            if (record_)
                record_->gains.push_back({relay, link, g});
            return g;
        }

        void resolve(std::uint64_t message, Outcome result)
        {
            outcomes_.push_back({message, result});
            if (record_)
                record_->resolved.push_back({message, result});
        }

        void transmit(std::size_t id, double power, double cost)
        {
            auto debited = debit_for_tx(relays_[id], cost);
            expects(debited.has_value(), "forwarder cannot afford its transmission");
            relays_[id]        = *debited;
            relays_[id].status = RelayStatus::Transmitting;
            debited_ += cost;
            if (record_)
            {
                record_->forwarder = id;
                record_->tx_power  = power;
            }
        }

        void refresh_view()
        {
            for (std::size_t i = 0; i < relays_.size(); ++i)
                view_[i] = Candidate{i, relays_[i].battery, relays_[i].status != RelayStatus::Transmitting};
        }

        void run_forward(std::uint64_t t, const Pending& pending)
        {
            if (!config_.policy.is_mrs())
            {
                const auto id   = pending.decoders.front();
                const auto gain = draw(t, id, Link::RelayToDest);
                transmit(id, config_.relay_power(), config_.fixed_tx_cost());
                const LinkBudget budget{config_.relay_power(), config_.noise_var, config_.distance};
                resolve(pending.message,
                        link_rate(gain, budget) >= config_.target_rate ? Outcome::Success : Outcome::OutageRelayLink);
                return;
            }

            if (pending.decoders.empty())
            {
                resolve(pending.message, Outcome::OutageEmptyLambda);
                return;
            }
            std::vector<FadingSample> to_dest;
            to_dest.reserve(pending.decoders.size());
            for (auto id : pending.decoders)
                to_dest.push_back(draw(t, id, Link::RelayToDest));

            refresh_view();
            const InversionParams params{config_.target_rate, config_.noise_var, config_.distance,
                                         config_.slot_duration};
            const auto choice = mrs_final_select(pending.decoders, view_, to_dest, params);
            if (!choice)
            {
                resolve(pending.message, Outcome::OutageNoFeasiblePower);
                return;
            }
            transmit(choice->id, choice->tx_power, choice->cost);
            resolve(pending.message, Outcome::Success);
        }

        void run_broadcast(std::uint64_t t, std::uint64_t message)
        {
            refresh_view();
            if (config_.policy.is_mrs())
            {
                for (auto id : mrs_preselect(view_, config_.policy.m))
                    relays_[id].status = RelayStatus::Listening;
            }
            else if (auto id = srs_select(view_, config_.fixed_tx_cost()))
            {
                relays_[*id].status = RelayStatus::Listening;
            }
            else
            {
                resolve(message, Outcome::OutageNoCandidate);
            }

            const LinkBudget    budget{config_.source_power(), config_.noise_var, config_.distance};
            const HarvestParams harvest = config_.harvest_params();
            Pending             next{message, {}};
            bool                any_listener = false;
            for (auto& r : relays_)
            {
                if (r.status == RelayStatus::Transmitting)
                    continue;
                const auto gain = draw(t, r.id, Link::SourceToRelay);
                if (r.status == RelayStatus::Listening)
                {
                    any_listener = true;
                    if (record_)
                        record_->listeners.push_back(r.id);
                    if (link_rate(gain, budget) >= config_.target_rate)
                    {
                        next.decoders.push_back(r.id);
                        if (record_)
                            record_->decoded.push_back(r.id);
                    }
                }
                else
                {
                    const double amount = harvest_amount(gain, harvest);
                    r                   = credit(r, amount);
                    harvested_ += amount;
                }
            }

            if (config_.policy.is_mrs())
                pending_ = std::move(next);
            else if (any_listener)
            {
                if (next.decoders.empty())
                    resolve(message, Outcome::OutageDecodeFail);
                else
                    pending_ = std::move(next);
            }
        }

        long double battery_total() const noexcept
        {
            long double sum = 0.0L;
            for (const auto& r : relays_)
                sum += r.battery;
            return sum;
        }

        void check_slot(long double total_before) const
        {
            std::size_t transmitting = 0;
            for (const auto& r : relays_)
            {
                expects(r.battery >= 0.0, "battery went negative");
                transmitting += r.status == RelayStatus::Transmitting;
            }
            expects(transmitting <= 1, "more than one relay transmitting");
            const long double delta    = battery_total() - total_before;
            const long double expected = static_cast<long double>(harvested_) - debited_;
            const long double scale    = std::max(1.0L, total_before);
            expects(std::fabs(delta - expected) <= 1e-9L * scale, "energy ledger does not balance");
        }

        SimConfig                config_;
        Gains                    gains_;
        std::vector<RelayState>  relays_;
        std::vector<Candidate>   view_;
        std::optional<Pending>   pending_;
        std::vector<SlotOutcome> outcomes_;
        std::uint64_t            slot_      = 0;
        double                   harvested_ = 0.0;
        double                   debited_   = 0.0;
        SlotRecord*              record_    = nullptr;
    };

    using SlotObserver = std::function<void(const SlotRecord&)>;

    /// Runs one trial and returns the post-warmup outcomes ordered by message
    /// index. `on_slot`, when set, receives every slot record.
    inline std::vector<SlotOutcome> run_trial(const SimConfig& config, std::uint64_t trial = 0,
                                              const SlotObserver& on_slot = {})
    {
        SlotEngine engine(config, CounterGains(trial_key(config.seed, trial), config.n_relays));
        SlotRecord record;
        while (!engine.done())
        {
            engine.step(on_slot ? &record : nullptr);
            if (on_slot)
                on_slot(record);
        }

        std::vector<SlotOutcome> out;
        out.reserve(engine.outcomes().size());
        for (const auto& o : engine.outcomes())
            if (o.message >= config.warmup_messages)
                out.push_back(o);
        std::sort(out.begin(), out.end(),
                  [](const SlotOutcome& a, const SlotOutcome& b) { return a.message < b.message; });
        expects(out.size() == config.n_messages - config.warmup_messages, "every message resolves exactly once");
        return out;
    }
} // namespace ehrelay

#endif // EHRELAY_ENGINE_HPP_INCLUDED
