#pragma once

// Device-agent stubs: open-loop, schedule-driven order emitters for the
// participant archetypes, plus the feeder liquidity agent and the
// sequential-auction convergence scenario generator.

#include <algorithm>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "lob/book.hpp"
#include "lob/engine.hpp"
#include "lob/types.hpp"

namespace lob {

enum class Archetype { HVAC, WaterHeater, EV_V0G, EV_V1G, EV_V2G, PV, Battery, Feeder };

inline std::optional<Archetype> archetype_from_string(const std::string& s) {
    if (s == "HVAC") return Archetype::HVAC;
    if (s == "WaterHeater") return Archetype::WaterHeater;
    if (s == "EV_V0G") return Archetype::EV_V0G;
    if (s == "EV_V1G") return Archetype::EV_V1G;
    if (s == "EV_V2G") return Archetype::EV_V2G;
    if (s == "PV") return Archetype::PV;
    if (s == "Battery") return Archetype::Battery;
    if (s == "Feeder") return Archetype::Feeder;
    return std::nullopt;
}

// Power flexibility is fixed by archetype: thermostatic loads and V0G
// chargers are all-or-nothing; batteries, V1G/V2G chargers, and the
// feeder accept partial fills. PV flexibility depends on curtailment.
inline bool archetype_flexible(Archetype a, bool pv_curtailable) {
    switch (a) {
        case Archetype::HVAC:
        case Archetype::WaterHeater:
        case Archetype::EV_V0G:
            return false;
        case Archetype::PV:
            return pv_curtailable;
        case Archetype::EV_V1G:
        case Archetype::EV_V2G:
        case Archetype::Battery:
        case Archetype::Feeder:
            return true;
    }
    return false;
}

// Loads buy, generation sells; batteries and V2G chargers quote both
// sides of their price band.
inline bool archetype_buys(Archetype a) {
    switch (a) {
        case Archetype::HVAC:
        case Archetype::WaterHeater:
        case Archetype::EV_V0G:
        case Archetype::EV_V1G:
            return true;
        default:
            return false;
    }
}

struct AgentSpec {
    DeviceId device{};
    Archetype archetype{Archetype::HVAC};
    Price reservation{};          // single-sided reservation price
    Price band_low{};             // two-sided quoters: buy at band_low
    Price band_high{};            //                    sell at band_high
    Quantity quantity{Quantity{1}};
    Duration duration{Duration{60}};
    std::optional<Duration> expiration{};
    bool pv_curtailable{false};
    std::vector<Time> submit_times;
    std::uint64_t seed{0};
};

struct FeederParams {
    Price bid{};   // wholesale price
    Price ask{};   // locational marginal price
    Quantity depth{};

    bool valid() const { return ask >= bid; }
};

// Orders an agent places at `now`. Deterministic in (spec, now); the
// snapshot is available for future closed-loop strategies but the stubs
// are open loop.
inline std::vector<RawOrder> emit_orders(const AgentSpec& spec, const Book& snapshot, Time now) {
    (void)snapshot;
    (void)now;
    bool flexible = archetype_flexible(spec.archetype, spec.pv_curtailable);
    auto base = [&](std::int64_t signed_q, Price price) {
        RawOrder r;
        r.device = spec.device;
        r.signed_quantity = signed_q;
        r.price = price;
        r.expiration = spec.expiration;
        r.flexible = flexible;
        r.duration = spec.duration;
        return r;
    };
    auto q = static_cast<std::int64_t>(spec.quantity.units);
    std::vector<RawOrder> out;
    switch (spec.archetype) {
        case Archetype::HVAC:
        case Archetype::WaterHeater:
        case Archetype::EV_V0G:
        case Archetype::EV_V1G:
            out.push_back(base(q, spec.reservation));
            break;
        case Archetype::PV:
            out.push_back(base(-q, spec.reservation));
            break;
        case Archetype::Battery:
        case Archetype::EV_V2G:
        case Archetype::Feeder:
            if (spec.band_high < spec.band_low)
                throw std::invalid_argument("agent price band is self-crossing");
            out.push_back(base(q, spec.band_low));
            out.push_back(base(-q, spec.band_high));
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convergence scenario (sequential double auction against static curves)

// Unique crossing price of two unit-step curves, found by exhaustive
// enumeration: the midpoint of the last crossing demand/supply pair,
// rounding toward the buyer.
inline Price curve_intersection(std::vector<Price> demand, std::vector<Price> supply) {
    if (demand.empty() || supply.empty())
        throw std::invalid_argument("curves must be nonempty");
    std::sort(demand.begin(), demand.end(), [](Price a, Price b) { return a > b; });
    std::sort(supply.begin(), supply.end(), [](Price a, Price b) { return a < b; });
    std::size_t k = 0;
    while (k < demand.size() && k < supply.size() && demand[k] >= supply[k]) ++k;
    if (k == 0) throw std::invalid_argument("curves do not cross");
    return midpoint_toward_buyer(demand[k - 1], supply[k - 1]);
}

struct ConvergenceParams {
    std::size_t rounds{200};       // sampled arrivals
    Quantity min_quantity{Quantity{1}};
    Quantity max_quantity{Quantity{3}};
    Duration duration{Duration{3600}};
    Duration expiration{Duration{1'000'000}};
    DeviceId buyer_device{1000};
    DeviceId seller_device{2000};
};

// Randomized stream of flexible limit orders sampled from the two
// curves; arrivals alternate sides in a random order. Used to observe
// clearing-price convergence to the curve intersection.
inline std::vector<InputEvent> convergence_scenario(const std::vector<Price>& demand,
                                                    const std::vector<Price>& supply,
                                                    std::uint64_t seed,
                                                    const ConvergenceParams& params = {}) {
    curve_intersection(demand, supply);  // validates crossing
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dpick(0, demand.size() - 1);
    std::uniform_int_distribution<std::size_t> spick(0, supply.size() - 1);
    std::uniform_int_distribution<std::uint64_t> qpick(params.min_quantity.units,
                                                       params.max_quantity.units);
    std::bernoulli_distribution buy_side(0.5);

    std::vector<InputEvent> stream;
    for (std::size_t i = 0; i < params.rounds; ++i) {
        bool buy = buy_side(rng);
        auto q = static_cast<std::int64_t>(qpick(rng));
        RawOrder r;
        r.device = buy ? params.buyer_device : params.seller_device;
        r.signed_quantity = buy ? q : -q;
        r.price = buy ? demand[dpick(rng)] : supply[spick(rng)];
        r.flexible = true;
        r.duration = params.duration;
        r.expiration = params.expiration;
        stream.push_back({static_cast<Time>(i + 1), SubmitInput{r}});
    }
    return stream;
}

}  // namespace lob
