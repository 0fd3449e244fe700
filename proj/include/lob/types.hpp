#pragma once

// Core market domain types: fixed-point prices, quantities, durations,
// orders and their priority keys, transactions, dispatches, and the
// append-only event record. All arithmetic is exact integer arithmetic;
// no floating point enters the book.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lob {

using OrderId = std::uint64_t;
using DeviceId = std::uint64_t;
using Seq = std::uint64_t;
using Time = std::int64_t;  // simulation time, whole seconds

enum class Side { Buy, Sell };

inline const char* to_string(Side s) { return s == Side::Buy ? "buy" : "sell"; }

// tick = mantissa * 10^-exponent currency units per kWh. Default 0.01.
struct TickSize {
    std::int64_t mantissa{1};
    int exponent{2};
};

// Price as a signed count of ticks.
struct Price {
    std::int64_t ticks{};

    friend constexpr bool operator==(Price a, Price b) { return a.ticks == b.ticks; }
    friend constexpr bool operator!=(Price a, Price b) { return a.ticks != b.ticks; }
    friend constexpr bool operator<(Price a, Price b) { return a.ticks < b.ticks; }
    friend constexpr bool operator<=(Price a, Price b) { return a.ticks <= b.ticks; }
    friend constexpr bool operator>(Price a, Price b) { return a.ticks > b.ticks; }
    friend constexpr bool operator>=(Price a, Price b) { return a.ticks >= b.ticks; }
    friend constexpr Price operator-(Price a, Price b) { return Price{a.ticks - b.ticks}; }
    friend constexpr Price operator+(Price a, Price b) { return Price{a.ticks + b.ticks}; }
};

// Quantity as an unsigned count of power units (default unit 1 kW).
struct Quantity {
    std::uint64_t units{};

    friend constexpr bool operator==(Quantity a, Quantity b) { return a.units == b.units; }
    friend constexpr bool operator!=(Quantity a, Quantity b) { return a.units != b.units; }
    friend constexpr bool operator<(Quantity a, Quantity b) { return a.units < b.units; }
    friend constexpr bool operator<=(Quantity a, Quantity b) { return a.units <= b.units; }
    friend constexpr bool operator>(Quantity a, Quantity b) { return a.units > b.units; }
    friend constexpr bool operator>=(Quantity a, Quantity b) { return a.units >= b.units; }
    friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity{a.units + b.units}; }
    friend constexpr Quantity operator-(Quantity a, Quantity b) {
        return Quantity{a.units - b.units};
    }
};

struct Duration {
    std::uint64_t seconds{};

    friend constexpr bool operator==(Duration a, Duration b) { return a.seconds == b.seconds; }
    friend constexpr bool operator!=(Duration a, Duration b) { return a.seconds != b.seconds; }
    friend constexpr bool operator<(Duration a, Duration b) { return a.seconds < b.seconds; }
    friend constexpr bool operator<=(Duration a, Duration b) { return a.seconds <= b.seconds; }
    friend constexpr bool operator>(Duration a, Duration b) { return a.seconds > b.seconds; }
    friend constexpr bool operator>=(Duration a, Duration b) { return a.seconds >= b.seconds; }
};

// Floor division that is correct for negative numerators.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Midpoint of the marginal bid and ask prices. With an odd tick sum the
// result rounds half-up toward the buyer's price.
constexpr Price midpoint_toward_buyer(Price bid, Price ask) {
    std::int64_t sum = bid.ticks + ask.ticks;
    if (sum % 2 == 0) return Price{sum / 2};
    if (bid.ticks >= ask.ticks) return Price{floor_div(sum, 2) + 1};
    return Price{floor_div(sum, 2)};
}

// Limit-order terms. Expiration, when present, is relative to the order's
// activation time; the resting order is deleted strictly after
// activation + expiration elapses.
struct LimitTerms {
    Price limit{};
    std::optional<Duration> expiration{};
};

struct Order {
    OrderId id{};
    DeviceId device{};
    Side side{Side::Buy};
    Quantity quantity{};
    Duration duration{};
    bool flexible{};
    std::optional<LimitTerms> limit{};  // nullopt => market order
    Time timestamp{};
    Seq seq{};
    std::optional<Time> activation{};  // residual orders only
    std::optional<OrderId> ancestor{};
    // Priority components inherited unchanged through splits.
    Time origin_timestamp{};
    Seq origin_seq{};

    bool is_market() const { return !limit.has_value(); }
    bool is_limit() const { return limit.has_value(); }

    Time activation_time() const { return activation.value_or(timestamp); }

    std::optional<Time> deadline() const {
        if (!limit || !limit->expiration) return std::nullopt;
        return activation_time() + static_cast<Time>(limit->expiration->seconds);
    }
};

// Total order within one side of the book: market orders first, then by
// limit price (buys high first, sells low first), ties broken by the
// ancestral (timestamp, seq).
struct PriorityKey {
    Side side{Side::Buy};
    bool market{};
    Price limit{};
    Time origin_timestamp{};
    Seq origin_seq{};
};

inline PriorityKey priority_key(const Order& o) {
    PriorityKey k;
    k.side = o.side;
    k.market = o.is_market();
    k.limit = o.limit ? o.limit->limit : Price{};
    k.origin_timestamp = o.origin_timestamp;
    k.origin_seq = o.origin_seq;
    return k;
}

// True iff a has strictly better matching priority than b. Both keys must
// belong to the same side.
inline bool better(const PriorityKey& a, const PriorityKey& b) {
    if (a.market != b.market) return a.market;
    if (!a.market && a.limit != b.limit) {
        return a.side == Side::Buy ? a.limit > b.limit : a.limit < b.limit;
    }
    if (a.origin_timestamp != b.origin_timestamp) return a.origin_timestamp < b.origin_timestamp;
    return a.origin_seq < b.origin_seq;
}

struct Transaction {
    DeviceId seller_device{};
    DeviceId buyer_device{};
    OrderId seller_order{};
    OrderId buyer_order{};
    Quantity quantity{};
    Price clearing_price{};
    Duration duration{};
    Time start_time{};
};

struct Dispatch {
    std::uint64_t round_id{};
    std::vector<Transaction> transactions;
    Price clearing_price{};
    OrderId trigger_order{};
};

// ---------------------------------------------------------------------------
// Event record

struct Submitted { Order order; };
struct Canceled { OrderId order{}; std::string reason; };
struct Expired { OrderId order{}; };
struct ResidualScheduled { Order order; };
struct ResidualActivated { OrderId order{}; };
struct Matched { Dispatch dispatch; };
struct MatchFailed { OrderId trigger{}; };

using EventPayload = std::variant<Submitted, Canceled, Expired, ResidualScheduled,
                                  ResidualActivated, Matched, MatchFailed>;

struct Event {
    std::uint64_t index{};
    Time time{};
    EventPayload payload;
};

// ---------------------------------------------------------------------------
// Order admission

// External order description using the signed-quantity convention
// (positive buy, negative sell). Side and magnitude are separated at
// admission; the sign never reaches the matcher.
struct RawOrder {
    DeviceId device{};
    OrderId id{};  // 0 => assign automatically
    std::int64_t signed_quantity{};
    std::optional<Price> price{};
    std::optional<Duration> expiration{};
    bool flexible{};
    Duration duration{};
    std::optional<std::string> kind{};  // "limit" | "market"; inferred when absent
};

inline Order make_order(const RawOrder& raw, Time timestamp, Seq seq) {
    if (raw.signed_quantity == 0) throw std::invalid_argument("order quantity must be nonzero");
    if (raw.duration.seconds == 0) throw std::invalid_argument("order duration must be positive");

    bool market;
    if (raw.kind) {
        if (*raw.kind == "market") market = true;
        else if (*raw.kind == "limit") market = false;
        else throw std::invalid_argument("unknown order kind: " + *raw.kind);
    } else {
        market = !raw.price.has_value();
    }
    if (market && raw.price) throw std::invalid_argument("market order carrying a price");
    if (market && raw.expiration) throw std::invalid_argument("market order carrying an expiration");
    if (!market && !raw.price) throw std::invalid_argument("limit order missing a price");
    if (raw.expiration && raw.expiration->seconds == 0)
        throw std::invalid_argument("expiration must be positive");

    Order o;
    o.id = raw.id;
    o.device = raw.device;
    o.side = raw.signed_quantity > 0 ? Side::Buy : Side::Sell;
    o.quantity = Quantity{static_cast<std::uint64_t>(
        raw.signed_quantity > 0 ? raw.signed_quantity : -raw.signed_quantity)};
    o.duration = raw.duration;
    o.flexible = raw.flexible;
    if (!market) o.limit = LimitTerms{*raw.price, raw.expiration};
    o.timestamp = timestamp;
    o.seq = seq;
    o.origin_timestamp = timestamp;
    o.origin_seq = seq;
    return o;
}

inline std::int64_t signed_quantity(const Order& o) {
    auto q = static_cast<std::int64_t>(o.quantity.units);
    return o.side == Side::Buy ? q : -q;
}

}  // namespace lob
