#pragma once

// Ex post settlement: the single clearing price per matching round,
// per-device payments and surplus, and the network-usage tariff.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lob/matching.hpp"
#include "lob/types.hpp"

namespace lob {

// Exact money amounts are kept in integer quanta of (tick / 3600)
// currency units, so price x quantity x duration/3600 stays closed over
// integers. One quantum = tick_value / 3600.
using Money = std::int64_t;

inline Money money_from_kwh_rate(Price rate, Quantity q, Duration d) {
    return rate.ticks * static_cast<Money>(q.units) * static_cast<Money>(d.seconds);
}

inline Money money_from_ticks(std::int64_t ticks) { return ticks * 3600; }

struct TariffSchedule {
    Price per_kwh{};                 // adder charged to buyers per kWh
    std::int64_t flat_fee_ticks{};   // flat per-transaction fee, in price ticks

    bool valid() const { return per_kwh.ticks >= 0 && flat_fee_ticks >= 0; }
};

struct PriceUndiscoverable : std::runtime_error {
    PriceUndiscoverable() : std::runtime_error("clearing price undiscoverable: no limit order in contract") {}
};

// The single ex post clearing price for a round.
//   - Exactly one in-contract order had quantity cut: that order's limit
//     price sets the price (midpoint fallback when the cut order is a
//     market order).
//   - No cut (exact stacks): midpoint of the lowest in-contract bid
//     limit and highest in-contract ask limit, rounding half-up toward
//     the buyer. When only one side carries a limit order its marginal
//     limit is used directly; with no limit order in contract at all the
//     price is undiscoverable.
inline Price clearing_price(const PriceFilteredStacks& stacks, const MarginalInfo& marginal) {
    if (marginal.cut_order) {
        for (const auto* list : {&stacks.bids, &stacks.asks}) {
            for (const auto& e : *list) {
                if (e.order.id == *marginal.cut_order && e.order.is_limit())
                    return e.order.limit->limit;
            }
        }
        // Cut order is a market order: fall through to the midpoint rule.
    }
    std::optional<Price> b_low, s_high;
    for (const auto& e : stacks.bids) {
        if (e.effective.units == 0 || e.order.is_market()) continue;
        Price p = e.order.limit->limit;
        if (!b_low || p < *b_low) b_low = p;
    }
    for (const auto& e : stacks.asks) {
        if (e.effective.units == 0 || e.order.is_market()) continue;
        Price p = e.order.limit->limit;
        if (!s_high || p > *s_high) s_high = p;
    }
    if (b_low && s_high) return midpoint_toward_buyer(*b_low, *s_high);
    if (b_low) return *b_low;
    if (s_high) return *s_high;
    throw PriceUndiscoverable{};
}

enum class Role { Buyer, Seller };

inline const char* to_string(Role r) { return r == Role::Buyer ? "buyer" : "seller"; }

struct SettlementLine {
    DeviceId device{};
    OrderId order{};
    Role role{};
    Quantity quantity{};
    Duration duration{};
    Money payment{};       // buyer: amount paid (tariff included); seller: amount received
    Money tariff{};        // buyer lines only
    Money surplus{};       // vs. the order's limit price; zero for market orders
};

struct SettlementReport {
    std::uint64_t round_id{};
    Price clearing_price{};
    std::vector<SettlementLine> lines;
    Money buyer_total{};
    Money seller_total{};
    Money tariff_total{};
};

// Computes per-participant payments at the dispatch's single clearing
// price. The tariff is charged to buyers as a per-kWh adder plus a flat
// per-transaction fee, outside the clearing price.
inline SettlementReport settle(const Dispatch& dispatch,
                               const std::map<OrderId, Order>& orders,
                               const TariffSchedule& tariff) {
    SettlementReport report;
    report.round_id = dispatch.round_id;
    report.clearing_price = dispatch.clearing_price;

    auto lookup = [&](OrderId id) -> const Order& {
        auto it = orders.find(id);
        if (it == orders.end())
            throw std::invalid_argument("settle: unknown order reference " + std::to_string(id));
        return it->second;
    };

    for (const auto& t : dispatch.transactions) {
        if (t.clearing_price != dispatch.clearing_price)
            throw std::logic_error("settle: transaction price differs from dispatch price");
        const Order& buy = lookup(t.buyer_order);
        const Order& sell = lookup(t.seller_order);

        Money base = money_from_kwh_rate(t.clearing_price, t.quantity, t.duration);
        Money charge = money_from_kwh_rate(tariff.per_kwh, t.quantity, t.duration) +
                       money_from_ticks(tariff.flat_fee_ticks);

        SettlementLine bl;
        bl.device = t.buyer_device;
        bl.order = t.buyer_order;
        bl.role = Role::Buyer;
        bl.quantity = t.quantity;
        bl.duration = t.duration;
        bl.payment = base + charge;
        bl.tariff = charge;
        if (buy.is_limit())
            bl.surplus = money_from_kwh_rate(buy.limit->limit - t.clearing_price, t.quantity, t.duration);
        report.lines.push_back(bl);

        SettlementLine sl;
        sl.device = t.seller_device;
        sl.order = t.seller_order;
        sl.role = Role::Seller;
        sl.quantity = t.quantity;
        sl.duration = t.duration;
        sl.payment = base;
        if (sell.is_limit())
            sl.surplus = money_from_kwh_rate(t.clearing_price - sell.limit->limit, t.quantity, t.duration);
        report.lines.push_back(sl);

        report.buyer_total += bl.payment;
        report.seller_total += sl.payment;
        report.tariff_total += charge;
    }
    return report;
}

}  // namespace lob
