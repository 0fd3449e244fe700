#pragma once

// Matching primitives: price filtering into crossing stacks, stack
// cutting with inflexible skipping, greedy stack matching, and
// partial-fill order splitting.

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lob/book.hpp"
#include "lob/types.hpp"

namespace lob {

struct StackEntry {
    Order order;
    Quantity effective{};  // quantity in contract (reduced when cut)
};

// The crossing prefixes (B', S') of the book's priority orderings.
// d_tot / s_tot are the effective totals of the included orders.
struct PriceFilteredStacks {
    std::vector<StackEntry> bids;
    std::vector<StackEntry> asks;
    Quantity d_tot{};
    Quantity s_tot{};

    bool empty() const { return bids.empty() || asks.empty(); }
};

namespace detail {

// Market bids match any price, market asks likewise.
inline std::int64_t bid_rank(const Order& o) {
    return o.is_market() ? std::numeric_limits<std::int64_t>::max() : o.limit->limit.ticks;
}
inline std::int64_t ask_rank(const Order& o) {
    return o.is_market() ? std::numeric_limits<std::int64_t>::min() : o.limit->limit.ticks;
}

}  // namespace detail

// Two-pointer quantity walk down both priority stacks. Unit pairs are
// admitted while bid price >= ask price; an order is in its stack iff at
// least one of its units was admitted. When one side's units are
// exhausted the other side keeps extending while its next order still
// crosses the least competitive admitted order of the exhausted side.
inline PriceFilteredStacks price_filter(const Book& book) {
    PriceFilteredStacks out;
    if (book.bids.empty() || book.asks.empty()) return out;

    std::size_t bi = 0, ai = 0;          // order cursors
    std::uint64_t bu = 0, au = 0;        // units consumed within the cursor order

    while (bi < book.bids.size() && ai < book.asks.size()) {
        const Order& b = book.bids[bi];
        const Order& a = book.asks[ai];
        if (detail::bid_rank(b) < detail::ask_rank(a)) break;
        ++bu;
        ++au;
        if (bu == b.quantity.units) { ++bi; bu = 0; }
        if (au == a.quantity.units) { ++ai; au = 0; }
    }

    std::size_t nb = bi + (bu > 0 ? 1 : 0);
    std::size_t na = ai + (au > 0 ? 1 : 0);

    // Extension on exhaustion only.
    if (nb > 0 && na > 0) {
        if (bi >= book.bids.size() && bu == 0) {
            std::int64_t worst_bid = detail::bid_rank(book.bids[nb - 1]);
            while (na < book.asks.size() && detail::ask_rank(book.asks[na]) <= worst_bid) ++na;
        } else if (ai >= book.asks.size() && au == 0) {
            std::int64_t worst_ask = detail::ask_rank(book.asks[na - 1]);
            while (nb < book.bids.size() && detail::bid_rank(book.bids[nb]) >= worst_ask) ++nb;
        }
    }

    for (std::size_t i = 0; i < nb; ++i) {
        out.bids.push_back({book.bids[i], book.bids[i].quantity});
        out.d_tot = out.d_tot + book.bids[i].quantity;
    }
    for (std::size_t i = 0; i < na; ++i) {
        out.asks.push_back({book.asks[i], book.asks[i].quantity});
        out.s_tot = out.s_tot + book.asks[i].quantity;
    }
    return out;
}

// The in-contract marginal unit: set when exactly one order had its
// quantity reduced to equalize the stacks.
struct MarginalInfo {
    std::optional<OrderId> cut_order{};
    Quantity cut_amount{};
};

struct CutResult {
    PriceFilteredStacks stacks;
    MarginalInfo marginal;
};

// Equalizes the stack totals. On the larger side the lowest-priority
// order is cut if flexible and larger than the excess; otherwise it is
// excluded entirely and the walk repeats. Returns nullopt when the
// exclusions exhaust a side: the book is in the inflexible-marginal
// equilibrium and no match is possible.
inline std::optional<CutResult> stack_cut(PriceFilteredStacks stacks) {
    MarginalInfo marginal;
    while (stacks.d_tot != stacks.s_tot) {
        if (stacks.bids.empty() || stacks.asks.empty()) return std::nullopt;
        bool demand_larger = stacks.d_tot > stacks.s_tot;
        auto& larger = demand_larger ? stacks.bids : stacks.asks;
        auto& total = demand_larger ? stacks.d_tot : stacks.s_tot;
        Quantity excess{demand_larger ? stacks.d_tot.units - stacks.s_tot.units
                                      : stacks.s_tot.units - stacks.d_tot.units};
        StackEntry& m = larger.back();
        if (m.order.flexible && m.effective > excess) {
            m.effective = m.effective - excess;
            total = total - excess;
            marginal.cut_order = m.order.id;
            marginal.cut_amount = excess;
        } else {
            total = total - m.effective;
            larger.pop_back();
        }
    }
    if (stacks.bids.empty() || stacks.asks.empty()) return std::nullopt;
    return CutResult{std::move(stacks), marginal};
}

struct Pairing {
    OrderId bid{};
    OrderId ask{};
    Quantity quantity{};
};

// Greedy pairing of matched stacks: bids in priority order, each filled
// against asks in priority order. Requires equal effective totals.
inline std::vector<Pairing> match_stacks(const PriceFilteredStacks& stacks) {
    if (stacks.d_tot != stacks.s_tot)
        throw std::logic_error("match_stacks: stack totals are unequal");
    std::vector<Pairing> pairs;
    std::size_t ai = 0;
    std::uint64_t ask_left = stacks.asks.empty() ? 0 : stacks.asks[0].effective.units;
    for (const auto& b : stacks.bids) {
        std::uint64_t need = b.effective.units;
        while (need > 0) {
            while (ask_left == 0) {
                ++ai;
                ask_left = stacks.asks[ai].effective.units;
            }
            std::uint64_t take = std::min(need, ask_left);
            pairs.push_back({b.order.id, stacks.asks[ai].order.id, Quantity{take}});
            need -= take;
            ask_left -= take;
        }
    }
    return pairs;
}

struct FillRecord {
    Quantity quantity{};
    Duration duration{};
    Time start{};
};

// Splits a partially consumed flexible order into its fill record and an
// optional residual order. The residual keeps the ancestor's priority
// components and activates once the fill window ends (or immediately
// when `immediate` is set).
inline std::pair<FillRecord, std::optional<Order>> split_partial(const Order& order,
                                                                 Quantity filled_q,
                                                                 Duration filled_d, Time t0,
                                                                 OrderId residual_id,
                                                                 bool immediate = false) {
    if (filled_q > order.quantity || filled_d > order.duration)
        throw std::invalid_argument("split_partial: fill exceeds order");
    if (!order.flexible && filled_q < order.quantity)
        throw std::logic_error("split_partial: partial quantity on an inflexible order");

    FillRecord fill{filled_q, filled_d, t0};
    if (filled_q == order.quantity && filled_d == order.duration) return {fill, std::nullopt};

    Order residual = order;
    residual.id = residual_id;
    residual.ancestor = order.id;
    residual.quantity = filled_q < order.quantity ? order.quantity - filled_q : order.quantity;
    residual.duration = filled_d < order.duration
                            ? Duration{order.duration.seconds - filled_d.seconds}
                            : order.duration;
    residual.timestamp = t0;
    if (immediate) {
        residual.activation = std::nullopt;
    } else {
        residual.activation = t0 + static_cast<Time>(filled_d.seconds);
    }
    // origin_timestamp / origin_seq are inherited unchanged.
    return {fill, residual};
}

// Outcome of one matching round.
struct MatchOutcome {
    std::optional<Dispatch> dispatch{};
    std::vector<Order> residuals;        // scheduled for future activation
    std::vector<OrderId> rested;         // left standing in the book
    std::vector<OrderId> canceled;       // unfilled market remainders
    MarginalInfo marginal{};
    std::optional<OrderId> failed_market{};  // market order that could not fill
    std::vector<std::string> advisories;
};

}  // namespace lob
