#pragma once

// One matching round over the book: price filter, stack cutting, greedy
// matching, settlement pricing, and the application of fills, splits,
// and market-order cleanup. Restores the book to equilibrium.

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "lob/book.hpp"
#include "lob/matching.hpp"
#include "lob/settlement.hpp"

namespace lob {

struct MatchConfig {
    bool immediate_residuals{false};  // activate residuals at t0 instead of t0 + filled duration
};

namespace detail {

// Cancels every market order still standing after a round; market orders
// are immediate-or-cancel and never rest.
inline void cleanup_market_orders(Book& book, OrderId trigger, MatchOutcome& out) {
    std::vector<OrderId> markets;
    for (const auto* list : {&book.bids, &book.asks})
        for (const auto& o : *list)
            if (o.is_market()) markets.push_back(o.id);
    for (OrderId id : markets) {
        book.cancel(id);
        out.canceled.push_back(id);
        if (id == trigger) out.failed_market = id;
    }
}

}  // namespace detail

// Runs one full matching round against the current book. `trigger` is
// the order whose arrival (or activation) broke equilibrium. Residual
// orders receive ids from `next_order_id`.
inline MatchOutcome run_match_round(Book& book, Time now, OrderId trigger,
                                    std::uint64_t round_id, OrderId& next_order_id,
                                    const MatchConfig& cfg = {}) {
    MatchOutcome out;

    auto stacks = price_filter(book);
    std::optional<CutResult> cut;
    if (!stacks.empty()) {
        if (stacks.d_tot == stacks.s_tot)
            cut = CutResult{stacks, {}};
        else
            cut = stack_cut(stacks);
    }

    if (!cut) {
        detail::cleanup_market_orders(book, trigger, out);
        for (const auto* list : {&book.bids, &book.asks})
            for (const auto& o : *list) out.rested.push_back(o.id);
        return out;
    }

    Price price;
    try {
        price = clearing_price(cut->stacks, cut->marginal);
    } catch (const PriceUndiscoverable&) {
        detail::cleanup_market_orders(book, trigger, out);
        for (const auto* list : {&book.bids, &book.asks})
            for (const auto& o : *list) out.rested.push_back(o.id);
        return out;
    }

    auto pairs = match_stacks(cut->stacks);
    out.marginal = cut->marginal;

    Dispatch dispatch;
    dispatch.round_id = round_id;
    dispatch.clearing_price = price;
    dispatch.trigger_order = trigger;

    std::map<OrderId, const StackEntry*> in_contract;
    for (const auto& e : cut->stacks.bids) in_contract.emplace(e.order.id, &e);
    for (const auto& e : cut->stacks.asks) in_contract.emplace(e.order.id, &e);

    std::map<OrderId, Quantity> filled_q;
    std::map<OrderId, Duration> filled_d;
    for (const auto& p : pairs) {
        const Order& b = in_contract.at(p.bid)->order;
        const Order& a = in_contract.at(p.ask)->order;
        Duration d = std::min(b.duration, a.duration);
        Transaction t;
        t.seller_device = a.device;
        t.buyer_device = b.device;
        t.seller_order = a.id;
        t.buyer_order = b.id;
        t.quantity = p.quantity;
        t.clearing_price = price;
        t.duration = d;
        t.start_time = now;
        dispatch.transactions.push_back(t);
        filled_q[p.bid] = filled_q[p.bid] + p.quantity;
        filled_q[p.ask] = filled_q[p.ask] + p.quantity;
        filled_d[p.bid] = std::max(filled_d[p.bid], d);
        filled_d[p.ask] = std::max(filled_d[p.ask], d);
    }

    // Apply consumption to every in-contract order.
    for (const auto& [id, entry] : in_contract) {
        const Order& o = entry->order;
        Quantity fq = filled_q[id];
        Duration fd = filled_d[id];
        bool whole = fq == o.quantity && fd == o.duration;
        if (whole) {
            book.cancel(id);
        } else if (o.is_market()) {
            book.cancel(id);
            if (fq < o.quantity) out.canceled.push_back(id);
        } else if (o.flexible) {
            auto [fill, residual] = split_partial(o, fq, fd, now, next_order_id, cfg.immediate_residuals);
            (void)fill;
            book.cancel(id);
            if (residual) {
                ++next_order_id;
                out.residuals.push_back(*residual);
            }
        } else {
            // Inflexible with a shorter-lived counterparty: considered
            // fulfilled for its full duration at the matched quantity.
            out.advisories.push_back("inflexible order " + std::to_string(id) +
                                     " fulfilled past counterparty duration");
            book.cancel(id);
        }
    }

    if (!dispatch.transactions.empty()) out.dispatch = std::move(dispatch);
    detail::cleanup_market_orders(book, trigger, out);
    for (const auto* list : {&book.bids, &book.asks})
        for (const auto& o : *list) out.rested.push_back(o.id);
    return out;
}

// Inserts a validated incoming order and clears the book until it is
// back in equilibrium. Whole-order exclusions during stack cutting can
// leave two crossing orders behind, so one arrival may trigger several
// rounds; each clears at its own price and gets its own dispatch. The
// final element never carries a dispatch.
inline std::vector<MatchOutcome> process_order(Book& book, const Order& incoming, Time now,
                                               std::uint64_t round_id, OrderId& next_order_id,
                                               const MatchConfig& cfg = {}) {
    book.insert(incoming);
    std::vector<MatchOutcome> rounds;
    while (true) {
        rounds.push_back(run_match_round(book, now, incoming.id, round_id, next_order_id, cfg));
        const MatchOutcome& last = rounds.back();
        if (last.dispatch) {
            ++round_id;
            continue;
        }
        // A dispatch-free round can still cancel market orders, and that
        // removal alone can unblock the book; re-check once more.
        if (last.canceled.empty()) break;
    }
    return rounds;
}

// Definition-2 equilibrium: positive (or undefined) spread, or a trial
// matching round that produces no dispatch.
inline bool is_equilibrium(const Book& book) {
    auto s = book.spread();
    if (!s || s->ticks > 0) return true;
    Book trial = book;
    OrderId scratch_id = 1ull << 62;
    auto outcome = run_match_round(trial, book.now, 0, 0, scratch_id);
    return !outcome.dispatch.has_value();
}

}  // namespace lob
