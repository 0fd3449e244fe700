#pragma once

// Scenario configuration: market parameters, an explicit order list in
// the tabular field names, agent specs, and assembly of the input
// event stream.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lob/agents.hpp"
#include "lob/engine.hpp"
#include "lob/io.hpp"

namespace lob {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
    EngineConfig engine;
    std::optional<Time> stop_time;
    std::uint64_t seed{0};
    std::vector<InputEvent> explicit_inputs;
    std::vector<AgentSpec> agents;
};

namespace detail {

using json = nlohmann::ordered_json;

inline void require_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ScenarioError("unknown field '" + it.key() + "' in " + where);
    }
}

inline RawOrder parse_order_entry(const json& o, const TickSize& tick) {
    require_keys(o,
                 {"Device ID", "Order ID", "Timestamp", "Quantity", "Price", "isPowerFlexible",
                  "Duration", "Expiration", "Kind"},
                 "order entry");
    if (!o.contains("Timestamp")) throw ScenarioError("order entry missing Timestamp");
    RawOrder raw;
    try {
        raw.device = o.at("Device ID").get<DeviceId>();
        if (o.contains("Order ID")) raw.id = o.at("Order ID").get<OrderId>();
        raw.signed_quantity = o.at("Quantity").get<std::int64_t>();
        if (o.contains("Price") && !o.at("Price").is_null())
            raw.price = io::parse_price(o.at("Price"), tick);
        raw.flexible = o.at("isPowerFlexible").get<bool>();
        raw.duration = Duration{o.at("Duration").get<std::uint64_t>()};
        if (o.contains("Expiration") && !o.at("Expiration").is_null())
            raw.expiration = Duration{o.at("Expiration").get<std::uint64_t>()};
        if (o.contains("Kind")) raw.kind = o.at("Kind").get<std::string>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("malformed order entry: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("malformed order entry: ") + e.what());
    }
    return raw;
}

inline AgentSpec parse_agent_entry(const json& a, const TickSize& tick, std::uint64_t seed) {
    require_keys(a,
                 {"device_id", "archetype", "reservation_price", "band_low", "band_high",
                  "quantity", "duration", "expiration", "pv_curtailable", "submit_times"},
                 "agent entry");
    AgentSpec spec;
    try {
        spec.device = a.at("device_id").get<DeviceId>();
        auto arch = archetype_from_string(a.at("archetype").get<std::string>());
        if (!arch) throw ScenarioError("unknown archetype in agent entry");
        spec.archetype = *arch;
        if (a.contains("reservation_price"))
            spec.reservation = io::parse_price(a.at("reservation_price"), tick);
        if (a.contains("band_low")) spec.band_low = io::parse_price(a.at("band_low"), tick);
        if (a.contains("band_high")) spec.band_high = io::parse_price(a.at("band_high"), tick);
        spec.quantity = Quantity{a.at("quantity").get<std::uint64_t>()};
        spec.duration = Duration{a.at("duration").get<std::uint64_t>()};
        if (a.contains("expiration"))
            spec.expiration = Duration{a.at("expiration").get<std::uint64_t>()};
        if (a.contains("pv_curtailable")) spec.pv_curtailable = a.at("pv_curtailable").get<bool>();
        for (const auto& t : a.at("submit_times")) spec.submit_times.push_back(t.get<Time>());
        spec.seed = seed ^ spec.device;
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("malformed agent entry: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("malformed agent entry: ") + e.what());
    }
    return spec;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("config is not valid JSON: ") + e.what());
    }
    detail::require_keys(j, {"version", "market", "stop_time", "seed", "orders", "cancels", "agents"},
                         "scenario");
    ScenarioConfig cfg;
    try {
        if (j.at("version").get<int>() != 1) throw ScenarioError("unsupported config version");
        const json& m = j.at("market");
        detail::require_keys(
            m, {"tick_size", "power_unit_kw", "tariff", "residual_mode", "rounding_mode"},
            "market");
        cfg.engine.tick = io::parse_tick_size(m.value("tick_size", "0.01"));
        cfg.engine.power_unit_kw = m.value("power_unit_kw", std::uint64_t{1});
        if (m.contains("tariff")) {
            detail::require_keys(m.at("tariff"), {"per_kwh", "per_transaction"}, "tariff");
            cfg.engine.tariff.per_kwh = io::parse_price(m.at("tariff").at("per_kwh"), cfg.engine.tick);
            cfg.engine.tariff.flat_fee_ticks =
                io::parse_price(m.at("tariff").at("per_transaction"), cfg.engine.tick).ticks;
            if (!cfg.engine.tariff.valid()) throw ScenarioError("tariff must be nonnegative");
        }
        std::string mode = m.value("residual_mode", "deferred");
        if (mode != "deferred" && mode != "immediate")
            throw ScenarioError("residual_mode must be 'deferred' or 'immediate'");
        cfg.engine.immediate_residuals = mode == "immediate";
        std::string rounding = m.value("rounding_mode", "half_up_buyer");
        if (rounding != "half_up_buyer")
            throw ScenarioError("unsupported rounding_mode: " + rounding);

        if (j.contains("stop_time")) cfg.stop_time = j.at("stop_time").get<Time>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

        if (j.contains("orders")) {
            for (const auto& o : j.at("orders")) {
                Time t = o.at("Timestamp").get<Time>();
                RawOrder raw = detail::parse_order_entry(o, cfg.engine.tick);
                // Validate eagerly so field errors surface as config errors.
                try {
                    make_order(raw, t, 0);
                } catch (const std::invalid_argument& e) {
                    throw ScenarioError("invalid order entry (Order ID " +
                                        std::to_string(raw.id) + "): " + e.what());
                }
                cfg.explicit_inputs.push_back({t, SubmitInput{raw}});
            }
        }
        if (j.contains("cancels")) {
            for (const auto& c : j.at("cancels")) {
                detail::require_keys(c, {"Timestamp", "Order ID"}, "cancel entry");
                cfg.explicit_inputs.push_back(
                    {c.at("Timestamp").get<Time>(), CancelInput{c.at("Order ID").get<OrderId>()}});
            }
        }
        if (j.contains("agents")) {
            for (const auto& a : j.at("agents"))
                cfg.agents.push_back(detail::parse_agent_entry(a, cfg.engine.tick, cfg.seed));
        }
    } catch (const detail::json::exception& e) {
        throw ScenarioError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

// Flattens explicit orders, cancels, and agent emissions into one
// time-sorted input stream. Stable: equal-time entries keep listing
// order (explicit entries before agent emissions).
inline std::vector<InputEvent> build_inputs(const ScenarioConfig& cfg) {
    std::vector<InputEvent> inputs = cfg.explicit_inputs;
    Book empty_snapshot;
    for (const auto& agent : cfg.agents) {
        for (Time t : agent.submit_times) {
            for (const auto& raw : emit_orders(agent, empty_snapshot, t))
                inputs.push_back({t, SubmitInput{raw}});
        }
    }
    std::stable_sort(inputs.begin(), inputs.end(),
                     [](const InputEvent& a, const InputEvent& b) { return a.time < b.time; });
    return inputs;
}

// Convenience: parse, build, run. Returns the engine for inspection.
inline Engine run_scenario(const ScenarioConfig& cfg) {
    Engine engine(cfg.engine);
    engine.run(build_inputs(cfg), cfg.stop_time);
    return engine;
}

}  // namespace lob
