#pragma once

// Brute-force reference for small books: exhaustively enumerates every
// legal clearing and independently re-derives the clearing the
// priority-ordered procedure must select. Test support only; kept
// deliberately naive and separate from the matching implementation.

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lob/book.hpp"
#include "lob/matching.hpp"
#include "lob/types.hpp"

namespace lob::oracle {

struct OracleCaps {
    std::size_t max_orders{8};
    std::uint64_t max_quantity{6};
};

struct LegalClearing {
    std::vector<OrderId> bids;  // fully included, priority order
    std::vector<OrderId> asks;
    std::optional<OrderId> cut_order{};
    std::uint64_t cut_amount{};
    std::uint64_t matched_quantity{};
    std::optional<std::int64_t> price_ticks{};  // absent when undiscoverable
};

namespace detail {

inline std::int64_t buy_rank(const Order& o) {
    return o.is_market() ? std::numeric_limits<std::int64_t>::max() : o.limit->limit.ticks;
}
inline std::int64_t sell_rank(const Order& o) {
    return o.is_market() ? std::numeric_limits<std::int64_t>::min() : o.limit->limit.ticks;
}

// Settlement cases, re-derived from scratch: cut limit order's price, or
// the midpoint of the marginal in-contract limit prices rounded half-up
// toward the buyer.
inline std::optional<std::int64_t> derive_price(const std::vector<const Order*>& bids,
                                                const std::vector<const Order*>& asks,
                                                const Order* cut) {
    if (cut != nullptr && cut->is_limit()) return cut->limit->limit.ticks;
    std::optional<std::int64_t> blow, shigh;
    for (const Order* b : bids)
        if (b->is_limit() && (!blow || b->limit->limit.ticks < *blow)) blow = b->limit->limit.ticks;
    for (const Order* a : asks)
        if (a->is_limit() && (!shigh || a->limit->limit.ticks > *shigh)) shigh = a->limit->limit.ticks;
    if (blow && shigh) {
        std::int64_t sum = *blow + *shigh;
        std::int64_t half = sum >= 0 ? sum / 2 : -((-sum + 1) / 2);  // floor
        if (sum % 2 == 0) return sum / 2;
        return *blow >= *shigh ? half + 1 : half;
    }
    if (blow) return blow;
    if (shigh) return shigh;
    return std::nullopt;
}

}  // namespace detail

// All clearings satisfying the legality invariants: included orders form
// priority prefixes on both sides, every included bid can pay every
// included ask, totals balance after at most one partial cut of the
// lowest-priority flexible order on the heavy side.
inline std::vector<LegalClearing> enumerate_clearings(const Book& book,
                                                      const OracleCaps& caps = {}) {
    if (book.size() > caps.max_orders)
        throw std::invalid_argument("oracle: book exceeds order cap");
    for (const auto* list : {&book.bids, &book.asks})
        for (const auto& o : *list)
            if (o.quantity.units > caps.max_quantity)
                throw std::invalid_argument("oracle: quantity exceeds cap");

    std::vector<LegalClearing> found;
    for (std::size_t nb = 1; nb <= book.bids.size(); ++nb) {
        for (std::size_t na = 1; na <= book.asks.size(); ++na) {
            std::int64_t worst_bid = detail::buy_rank(book.bids[nb - 1]);
            std::int64_t worst_ask = detail::sell_rank(book.asks[na - 1]);
            if (worst_bid < worst_ask) continue;

            std::uint64_t db = 0, da = 0;
            for (std::size_t i = 0; i < nb; ++i) db += book.bids[i].quantity.units;
            for (std::size_t i = 0; i < na; ++i) da += book.asks[i].quantity.units;

            LegalClearing c;
            for (std::size_t i = 0; i < nb; ++i) c.bids.push_back(book.bids[i].id);
            for (std::size_t i = 0; i < na; ++i) c.asks.push_back(book.asks[i].id);

            const Order* cut = nullptr;
            if (db == da) {
                c.matched_quantity = db;
            } else if (db > da) {
                const Order& m = book.bids[nb - 1];
                if (!m.flexible || db - da >= m.quantity.units) continue;
                cut = &m;
                c.cut_order = m.id;
                c.cut_amount = db - da;
                c.matched_quantity = da;
            } else {
                const Order& m = book.asks[na - 1];
                if (!m.flexible || da - db >= m.quantity.units) continue;
                cut = &m;
                c.cut_order = m.id;
                c.cut_amount = da - db;
                c.matched_quantity = db;
            }

            std::vector<const Order*> bptr, aptr;
            for (std::size_t i = 0; i < nb; ++i) bptr.push_back(&book.bids[i]);
            for (std::size_t i = 0; i < na; ++i) aptr.push_back(&book.asks[i]);
            c.price_ticks = detail::derive_price(bptr, aptr, cut);
            found.push_back(std::move(c));
        }
    }
    return found;
}

// Re-derivation of the clearing the specified procedure must pick,
// written naively over per-unit expansions.
inline std::optional<LegalClearing> expected_clearing(const Book& book) {
    // Unit-level pair walk.
    struct Unit { std::size_t order_idx; std::int64_t rank; };
    std::vector<Unit> bunits, aunits;
    for (std::size_t i = 0; i < book.bids.size(); ++i)
        for (std::uint64_t u = 0; u < book.bids[i].quantity.units; ++u)
            bunits.push_back({i, detail::buy_rank(book.bids[i])});
    for (std::size_t i = 0; i < book.asks.size(); ++i)
        for (std::uint64_t u = 0; u < book.asks[i].quantity.units; ++u)
            aunits.push_back({i, detail::sell_rank(book.asks[i])});

    std::size_t pairs = 0;
    while (pairs < bunits.size() && pairs < aunits.size() &&
           bunits[pairs].rank >= aunits[pairs].rank)
        ++pairs;
    if (pairs == 0) return std::nullopt;

    std::size_t nb = bunits[pairs - 1].order_idx + 1;
    std::size_t na = aunits[pairs - 1].order_idx + 1;
    if (pairs == bunits.size()) {
        std::int64_t worst_bid = detail::buy_rank(book.bids[nb - 1]);
        while (na < book.asks.size() && detail::sell_rank(book.asks[na]) <= worst_bid) ++na;
    } else if (pairs == aunits.size()) {
        std::int64_t worst_ask = detail::sell_rank(book.asks[na - 1]);
        while (nb < book.bids.size() && detail::buy_rank(book.bids[nb]) >= worst_ask) ++nb;
    }

    // Exclusion loop; totals recomputed by summation each pass.
    std::optional<std::size_t> cut_bid, cut_ask;
    std::uint64_t cut_amount = 0;
    while (true) {
        if (nb == 0 || na == 0) return std::nullopt;
        std::uint64_t db = 0, da = 0;
        for (std::size_t i = 0; i < nb; ++i) db += book.bids[i].quantity.units;
        for (std::size_t i = 0; i < na; ++i) da += book.asks[i].quantity.units;
        if (db == da) break;
        if (db > da) {
            const Order& m = book.bids[nb - 1];
            if (m.flexible && m.quantity.units > db - da) {
                cut_bid = nb - 1;
                cut_amount = db - da;
                break;
            }
            --nb;
        } else {
            const Order& m = book.asks[na - 1];
            if (m.flexible && m.quantity.units > da - db) {
                cut_ask = na - 1;
                cut_amount = da - db;
                break;
            }
            --na;
        }
    }
    if (nb == 0 || na == 0) return std::nullopt;

    LegalClearing c;
    std::uint64_t matched = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        c.bids.push_back(book.bids[i].id);
        matched += book.bids[i].quantity.units;
    }
    if (cut_bid) {
        c.cut_order = book.bids[*cut_bid].id;
        c.cut_amount = cut_amount;
        matched -= cut_amount;
    }
    for (std::size_t i = 0; i < na; ++i) c.asks.push_back(book.asks[i].id);
    if (cut_ask) {
        c.cut_order = book.asks[*cut_ask].id;
        c.cut_amount = cut_amount;
    }
    c.matched_quantity = matched;

    std::vector<const Order*> bptr, aptr;
    for (std::size_t i = 0; i < nb; ++i) bptr.push_back(&book.bids[i]);
    for (std::size_t i = 0; i < na; ++i) aptr.push_back(&book.asks[i]);
    const Order* cut = nullptr;
    if (cut_bid) cut = &book.bids[*cut_bid];
    if (cut_ask) cut = &book.asks[*cut_ask];
    c.price_ticks = detail::derive_price(bptr, aptr, cut);
    if (!c.price_ticks) return std::nullopt;  // all-market clearing is not dispatchable
    return c;
}

struct Verdict {
    bool ok{true};
    std::string message;
};

inline Verdict fail(std::string msg) { return {false, std::move(msg)}; }

// Confirms a matcher outcome against the exhaustive enumeration and the
// independently derived expected clearing for the same book.
inline Verdict check(const Book& book, const MatchOutcome& outcome, const OracleCaps& caps = {}) {
    auto expected = expected_clearing(book);

    if (!outcome.dispatch) {
        if (expected) return fail("matcher produced no dispatch but a clearing exists");
        return {};
    }
    if (!expected) return fail("matcher produced a dispatch on an equilibrium book");

    const Dispatch& d = *outcome.dispatch;

    std::uint64_t buy_total = 0, sell_total = 0;
    std::set<OrderId> matched_bids, matched_asks;
    for (const auto& t : d.transactions) {
        buy_total += t.quantity.units;
        sell_total += t.quantity.units;
        matched_bids.insert(t.buyer_order);
        matched_asks.insert(t.seller_order);
        if (t.clearing_price != d.clearing_price) return fail("mixed prices within one dispatch");
    }
    if (buy_total != sell_total) return fail("buy and sell totals differ");

    if (buy_total != expected->matched_quantity) {
        std::ostringstream os;
        os << "matched quantity " << buy_total << " != expected " << expected->matched_quantity;
        return fail(os.str());
    }
    std::set<OrderId> exp_bids(expected->bids.begin(), expected->bids.end());
    std::set<OrderId> exp_asks(expected->asks.begin(), expected->asks.end());
    if (matched_bids != exp_bids) return fail("included bid set differs from oracle");
    if (matched_asks != exp_asks) return fail("included ask set differs from oracle");

    if (outcome.marginal.cut_order.has_value() != expected->cut_order.has_value() ||
        (expected->cut_order && (*outcome.marginal.cut_order != *expected->cut_order ||
                                 outcome.marginal.cut_amount.units != expected->cut_amount)))
        return fail("cut marginal differs from oracle");

    if (!expected->price_ticks || d.clearing_price.ticks != *expected->price_ticks)
        return fail("clearing price differs from oracle");

    // Priority check: every skipped-over order with a matched worse-priority
    // peer on its side must be inflexible or price-incompatible.
    auto enumerated = enumerate_clearings(book, caps);
    bool member = false;
    for (const auto& c : enumerated) {
        if (std::set<OrderId>(c.bids.begin(), c.bids.end()) == matched_bids &&
            std::set<OrderId>(c.asks.begin(), c.asks.end()) == matched_asks &&
            c.cut_order == outcome.marginal.cut_order &&
            c.cut_amount == outcome.marginal.cut_amount.units)
            member = true;
    }
    if (!member) return fail("outcome is not a legal clearing (priority/suffix violation)");
    return {};
}

}  // namespace lob::oracle
