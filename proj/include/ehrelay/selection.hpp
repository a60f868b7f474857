#ifndef EHRELAY_SELECTION_HPP_INCLUDED
#define EHRELAY_SELECTION_HPP_INCLUDED

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"

// Relay selection rules. All functions are pure; ties go to the lowest id.

namespace ehrelay
{
    /// One relay as seen by a selection rule. `available` is false while the
    /// relay is transmitting.
    struct Candidate
    {
        std::size_t id        = 0;
        double      battery   = 0.0;
        bool        available = true;
    };

    using CandidateView = std::span<const Candidate>;

    /// Single relay selection: the available relay with the largest surplus
    /// over the fixed transmission cost, or none if nobody can afford it.
    inline std::optional<std::size_t> srs_select(CandidateView view, double fixed_cost)
    {
        std::optional<std::size_t> best;
        double                     best_surplus = 0.0;
        for (const auto& c : view)
        {
            if (!c.available || !(c.battery >= fixed_cost))
                continue;
            const double surplus = c.battery - fixed_cost;
            if (!best || surplus > best_surplus || (surplus == best_surplus && c.id < *best))
            {
                best         = c.id;
                best_surplus = surplus;
            }
        }
        return best;
    }

    /// Pre-selection of the listener set: the min(m, #available) available
    /// relays with the largest batteries. Returned ids are ascending.
    inline std::vector<std::size_t> mrs_preselect(CandidateView view, std::size_t m)
    {
        expects(m >= 1, "mrs_preselect: m must be positive");
        std::vector<const Candidate*> ranked;
        ranked.reserve(view.size());
        for (const auto& c : view)
            if (c.available)
                ranked.push_back(&c);

        const auto k = std::min(m, ranked.size());
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                          [](const Candidate* a, const Candidate* b) {
                              return a->battery > b->battery || (a->battery == b->battery && a->id < b->id);
                          });

        std::vector<std::size_t> ids;
        ids.reserve(k);
        for (std::size_t i = 0; i < k; ++i)
            ids.push_back(ranked[i]->id);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    struct ForwardChoice
    {
        std::size_t id       = 0;
        double      tx_power = 0.0; // W
        double      cost     = 0.0; // J

        friend bool operator==(const ForwardChoice&, const ForwardChoice&) = default;
    };

    /// Physical constants needed to price a channel-inverting transmission.
    struct InversionParams
    {
        double target_rate   = 1.0; // bit/s/Hz
        double noise_var     = 1.0; // W
        double distance      = 1.0; // m
        double slot_duration = 1.0; // s
    };

    /// Final selection among the relays that decoded (`decoded`, with their
    /// relay-to-destination gains in `gains_to_dest`, index-aligned). Each
    /// relay is priced at the channel-inversion power for one slot; the
    /// affordable relay with the largest remaining energy wins.
    inline std::optional<ForwardChoice> mrs_final_select(std::span<const std::size_t>  decoded,
                                                         CandidateView                  view,
                                                         std::span<const FadingSample>  gains_to_dest,
                                                         const InversionParams&         params)
    {
        expects(decoded.size() == gains_to_dest.size(), "mrs_final_select: gains not aligned with decode set");

        std::optional<ForwardChoice> best;
        double                       best_surplus = 0.0;
        for (std::size_t k = 0; k < decoded.size(); ++k)
        {
            const auto id = decoded[k];
            auto it = std::find_if(view.begin(), view.end(), [id](const Candidate& c) { return c.id == id; });
            expects(it != view.end(), "mrs_final_select: decoded id not in view");

            const double power
                = inversion_power(params.target_rate, gains_to_dest[k], params.noise_var, params.distance);
            const double cost = power * params.slot_duration;
            if (!(it->battery >= cost))
                continue;
            const double surplus = it->battery - cost;
            if (!best || surplus > best_surplus || (surplus == best_surplus && id < best->id))
            {
                best         = ForwardChoice{id, power, cost};
                best_surplus = surplus;
            }
        }
        return best;
    }
} // namespace ehrelay

#endif // EHRELAY_SELECTION_HPP_INCLUDED
