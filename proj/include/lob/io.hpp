#pragma once

// Serialization: exact decimal price formatting, the JSON Lines event
// log (byte-stable for replay comparison), CSV exports, the Table-style
// book snapshot, and log replay verification.

#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lob/engine.hpp"
#include "lob/settlement.hpp"
#include "lob/types.hpp"

namespace lob::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Decimal formatting (exact, no floating point)

inline std::string format_scaled(std::int64_t scaled, int exponent) {
    bool neg = scaled < 0;
    unsigned long long mag = neg ? 0ull - static_cast<unsigned long long>(scaled)
                                 : static_cast<unsigned long long>(scaled);
    std::string digits = std::to_string(mag);
    std::string out;
    if (exponent <= 0) {
        out = digits;
        out.append(static_cast<std::size_t>(-exponent), '0');
    } else {
        auto e = static_cast<std::size_t>(exponent);
        if (digits.size() <= e) digits.insert(0, e + 1 - digits.size(), '0');
        out = digits.substr(0, digits.size() - e) + "." + digits.substr(digits.size() - e);
    }
    return neg ? "-" + out : out;
}

inline std::string format_price(Price p, const TickSize& tick) {
    return format_scaled(p.ticks * tick.mantissa, tick.exponent);
}

// Money quanta are tick/3600 currency units; reported rounded to six
// decimals (exact decimals rarely terminate with the 1/3600 factor).
inline std::string format_money(Money m, const TickSize& tick) {
    long long numer;
    if (tick.exponent <= 6) {
        long long scale = 1;
        for (int i = tick.exponent; i < 6; ++i) scale *= 10;
        numer = m * tick.mantissa * scale;
    } else {
        long long scale = 1;
        for (int i = 6; i < tick.exponent; ++i) scale *= 10;
        numer = m * tick.mantissa / scale;
    }
    long long q = numer >= 0 ? (numer + 1800) / 3600 : -((-numer + 1800) / 3600);
    return format_scaled(q, 6);
}

inline Price parse_price(const std::string& text, const TickSize& tick) {
    std::string s = text;
    bool neg = false;
    std::size_t pos = 0;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) neg = s[pos++] == '-';
    std::string intpart, frac;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) intpart += s[pos++];
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) frac += s[pos++];
    }
    if (pos != s.size() || intpart.empty())
        throw std::invalid_argument("malformed price: " + text);
    while (frac.size() > static_cast<std::size_t>(tick.exponent)) {
        if (frac.back() != '0')
            throw std::invalid_argument("price finer than tick: " + text);
        frac.pop_back();
    }
    frac.append(static_cast<std::size_t>(tick.exponent) - frac.size(), '0');
    std::int64_t scaled = std::stoll(intpart + (frac.empty() ? "" : frac));
    if (scaled % tick.mantissa != 0)
        throw std::invalid_argument("price not on the tick grid: " + text);
    std::int64_t ticks = scaled / tick.mantissa;
    return Price{neg ? -ticks : ticks};
}

inline Price parse_price(const json& v, const TickSize& tick) {
    if (v.is_string()) return parse_price(v.get<std::string>(), tick);
    if (v.is_number()) {
        double x = v.get<double>();
        double scale = std::pow(10.0, tick.exponent);
        auto scaled = static_cast<std::int64_t>(std::llround(x * scale));
        if (std::abs(x * scale - static_cast<double>(scaled)) > 1e-6)
            throw std::invalid_argument("price not representable at tick size");
        if (scaled % tick.mantissa != 0)
            throw std::invalid_argument("price not on the tick grid");
        return Price{scaled / tick.mantissa};
    }
    throw std::invalid_argument("price must be a number or decimal string");
}

// ---------------------------------------------------------------------------
// Event log

inline json order_to_json(const Order& o, const TickSize& tick) {
    json j;
    j["order_id"] = o.id;
    j["device_id"] = o.device;
    j["timestamp"] = o.timestamp;
    j["quantity"] = signed_quantity(o);
    j["price"] = o.is_limit() ? json(format_price(o.limit->limit, tick)) : json(nullptr);
    j["flexible"] = o.flexible;
    j["duration"] = o.duration.seconds;
    j["expiration"] = (o.is_limit() && o.limit->expiration)
                          ? json(o.limit->expiration->seconds)
                          : json(nullptr);
    j["activation"] = o.activation ? json(*o.activation) : json(nullptr);
    j["ancestor"] = o.ancestor ? json(*o.ancestor) : json(nullptr);
    return j;
}

inline json dispatch_to_json(const Dispatch& d, const TickSize& tick) {
    json j;
    j["round"] = d.round_id;
    j["trigger_order"] = d.trigger_order;
    j["clearing_price"] = format_price(d.clearing_price, tick);
    json txs = json::array();
    for (const auto& t : d.transactions) {
        json tx;
        tx["seller_device"] = t.seller_device;
        tx["buyer_device"] = t.buyer_device;
        tx["quantity"] = t.quantity.units;
        tx["price"] = format_price(t.clearing_price, tick);
        tx["duration"] = t.duration.seconds;
        tx["seller_order"] = t.seller_order;
        tx["buyer_order"] = t.buyer_order;
        tx["start_time"] = t.start_time;
        txs.push_back(tx);
    }
    j["transactions"] = txs;
    return j;
}

inline json event_to_json(const Event& e, const TickSize& tick) {
    json j;
    j["index"] = e.index;
    j["time"] = e.time;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Submitted>) {
                j["type"] = "submitted";
                j["payload"] = json{{"order", order_to_json(p.order, tick)}};
            } else if constexpr (std::is_same_v<T, Canceled>) {
                j["type"] = "canceled";
                j["payload"] = json{{"order_id", p.order}, {"reason", p.reason}};
            } else if constexpr (std::is_same_v<T, Expired>) {
                j["type"] = "expired";
                j["payload"] = json{{"order_id", p.order}};
            } else if constexpr (std::is_same_v<T, ResidualScheduled>) {
                j["type"] = "residual_scheduled";
                j["payload"] = json{{"order", order_to_json(p.order, tick)}};
            } else if constexpr (std::is_same_v<T, ResidualActivated>) {
                j["type"] = "residual_activated";
                j["payload"] = json{{"order_id", p.order}};
            } else if constexpr (std::is_same_v<T, Matched>) {
                j["type"] = "matched";
                j["payload"] = json{{"dispatch", dispatch_to_json(p.dispatch, tick)}};
            } else if constexpr (std::is_same_v<T, MatchFailed>) {
                j["type"] = "match_failed";
                j["payload"] = json{{"trigger", p.trigger}};
            }
        },
        e.payload);
    return j;
}

inline json config_to_json(const EngineConfig& cfg) {
    json j;
    j["tick_size"] = format_scaled(cfg.tick.mantissa, cfg.tick.exponent);
    j["power_unit_kw"] = cfg.power_unit_kw;
    j["tariff"] = json{{"per_kwh", format_price(cfg.tariff.per_kwh, cfg.tick)},
                       {"per_transaction", format_scaled(cfg.tariff.flat_fee_ticks * cfg.tick.mantissa,
                                                         cfg.tick.exponent)}};
    j["residual_mode"] = cfg.immediate_residuals ? "immediate" : "deferred";
    return j;
}

inline TickSize parse_tick_size(const std::string& text) {
    // tick is a decimal like "0.01": mantissa * 10^-exponent.
    auto dot = text.find('.');
    std::string digits = dot == std::string::npos ? text : text.substr(0, dot) + text.substr(dot + 1);
    int exponent = dot == std::string::npos ? 0 : static_cast<int>(text.size() - dot - 1);
    std::int64_t mantissa = std::stoll(digits);
    if (mantissa <= 0) throw std::invalid_argument("tick size must be positive");
    while (mantissa % 10 == 0 && exponent > 0) {
        mantissa /= 10;
        --exponent;
    }
    return TickSize{mantissa, exponent};
}

inline EngineConfig config_from_json(const json& j) {
    EngineConfig cfg;
    cfg.tick = parse_tick_size(j.at("tick_size").get<std::string>());
    cfg.power_unit_kw = j.at("power_unit_kw").get<std::uint64_t>();
    cfg.tariff.per_kwh = parse_price(j.at("tariff").at("per_kwh"), cfg.tick);
    cfg.tariff.flat_fee_ticks = parse_price(j.at("tariff").at("per_transaction"), cfg.tick).ticks;
    cfg.immediate_residuals = j.at("residual_mode").get<std::string>() == "immediate";
    return cfg;
}

inline std::string serialize_log(const Engine& engine, std::optional<Time> stop = {}) {
    std::string out;
    json header;
    header["format"] = "lob-events";
    header["version"] = 1;
    header["config"] = config_to_json(engine.config());
    header["stop_time"] = stop ? json(*stop) : json(nullptr);
    out += header.dump();
    out += "\n";
    for (const auto& e : engine.log()) {
        out += event_to_json(e, engine.config().tick).dump();
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV exports (column orders frozen for golden-file tests)

inline std::string dispatches_csv(const std::vector<Dispatch>& dispatches, const TickSize& tick) {
    std::ostringstream os;
    os << "round,transaction,seller_device,buyer_device,quantity,price,duration,"
          "seller_order,buyer_order,start_time\n";
    for (const auto& d : dispatches) {
        std::size_t i = 1;
        for (const auto& t : d.transactions) {
            os << d.round_id << ',' << i++ << ',' << t.seller_device << ',' << t.buyer_device
               << ',' << t.quantity.units << ',' << format_price(t.clearing_price, tick) << ','
               << t.duration.seconds << ',' << t.seller_order << ',' << t.buyer_order << ','
               << t.start_time << '\n';
        }
    }
    return os.str();
}

inline std::string settlement_csv(const std::vector<SettlementReport>& reports,
                                  const TickSize& tick) {
    std::ostringstream os;
    os << "round_id,device_id,role,quantity,duration,clearing_price,tariff,payment,surplus\n";
    for (const auto& r : reports) {
        for (const auto& l : r.lines) {
            os << r.round_id << ',' << l.device << ',' << to_string(l.role) << ','
               << l.quantity.units << ',' << l.duration.seconds << ','
               << format_price(r.clearing_price, tick) << ',' << format_money(l.tariff, tick)
               << ',' << format_money(l.payment, tick) << ',' << format_money(l.surplus, tick)
               << '\n';
        }
    }
    return os.str();
}

inline std::string prices_csv(const std::vector<Dispatch>& dispatches, const TickSize& tick) {
    std::ostringstream os;
    os << "time,clearing_price\n";
    for (const auto& d : dispatches) {
        Time t = d.transactions.empty() ? 0 : d.transactions.front().start_time;
        os << t << ',' << format_price(d.clearing_price, tick) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Book snapshot in the tabular BUY/SELL layout

inline std::string render_book_table(const Book& book, const TickSize& tick) {
    std::ostringstream os;
    os << "Device ID | Order ID | Timestamp | Quantity | Price | isPowerFlexible | Duration | "
          "Expiration\n";
    auto section = [&](const char* name, const std::vector<Order>& list) {
        os << name << "\n";
        for (const auto& o : list) {
            os << o.device << " | " << o.id << " | " << o.timestamp << " | " << signed_quantity(o)
               << " | " << (o.is_limit() ? format_price(o.limit->limit, tick) : "MKT") << " | "
               << (o.flexible ? "TRUE" : "FALSE") << " | " << o.duration.seconds << " | ";
            if (o.is_limit() && o.limit->expiration)
                os << o.limit->expiration->seconds;
            else
                os << "-";
            os << "\n";
        }
    };
    section("BUY", book.bids);
    section("SELL", book.asks);
    return os.str();
}

// ---------------------------------------------------------------------------
// Replay

struct ParsedLog {
    EngineConfig config;
    std::optional<Time> stop_time;
    std::vector<std::string> lines;  // event lines only, as given
    std::vector<InputEvent> inputs;
};

inline ParsedLog parse_log(const std::string& text) {
    ParsedLog out;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);  // throws on corrupt input
        if (first) {
            first = false;
            if (j.value("format", "") != "lob-events")
                throw std::runtime_error("not an event log: missing header");
            out.config = config_from_json(j.at("config"));
            if (j.contains("stop_time") && !j.at("stop_time").is_null())
                out.stop_time = j.at("stop_time").get<Time>();
            continue;
        }
        out.lines.push_back(line);
        std::string type = j.at("type").get<std::string>();
        Time t = j.at("time").get<Time>();
        if (type == "submitted") {
            const json& o = j.at("payload").at("order");
            RawOrder raw;
            raw.device = o.at("device_id").get<DeviceId>();
            raw.id = o.at("order_id").get<OrderId>();
            raw.signed_quantity = o.at("quantity").get<std::int64_t>();
            if (!o.at("price").is_null())
                raw.price = parse_price(o.at("price"), out.config.tick);
            else
                raw.kind = "market";
            raw.flexible = o.at("flexible").get<bool>();
            raw.duration = Duration{o.at("duration").get<std::uint64_t>()};
            if (!o.at("expiration").is_null())
                raw.expiration = Duration{o.at("expiration").get<std::uint64_t>()};
            out.inputs.push_back({t, SubmitInput{raw}});
        } else if (type == "canceled" && j.at("payload").at("reason") == "user") {
            out.inputs.push_back({t, CancelInput{j.at("payload").at("order_id").get<OrderId>()}});
        }
    }
    if (first) throw std::runtime_error("empty event log");
    return out;
}

struct ReplayResult {
    bool verified{};
    bool truncated{};
    std::optional<std::size_t> diverged_at{};  // event index of first divergence
    std::string message;
};

// Re-executes the log's inputs and compares the regenerated event stream
// byte for byte.
inline ReplayResult replay(const std::string& text) {
    ParsedLog parsed = parse_log(text);
    Engine engine(parsed.config);
    engine.run(parsed.inputs, parsed.stop_time);

    std::vector<std::string> fresh;
    for (const auto& e : engine.log())
        fresh.push_back(event_to_json(e, parsed.config.tick).dump());

    ReplayResult r;
    std::size_t n = std::min(fresh.size(), parsed.lines.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (fresh[i] != parsed.lines[i]) {
            r.verified = false;
            r.diverged_at = i;
            r.message = "divergence at event index " + std::to_string(i);
            return r;
        }
    }
    if (parsed.lines.size() < fresh.size()) {
        r.verified = false;
        r.truncated = true;
        r.message = "prefix of " + std::to_string(parsed.lines.size()) +
                    " events verified; log truncated (expected " + std::to_string(fresh.size()) + ")";
        return r;
    }
    if (parsed.lines.size() > fresh.size()) {
        r.verified = false;
        r.diverged_at = fresh.size();
        r.message = "log contains events beyond the replayed stream";
        return r;
    }
    r.verified = true;
    r.message = "verified " + std::to_string(fresh.size()) + " events";
    return r;
}

}  // namespace lob::io
