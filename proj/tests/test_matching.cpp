#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lob/process.hpp"

using namespace lob;

namespace {

Order limit_order(OrderId id, std::int64_t sq, std::int64_t ticks, bool flexible, Time ts,
                  Seq seq, std::uint64_t dur = 10) {
    RawOrder r;
    r.device = id;
    r.id = id;
    r.signed_quantity = sq;
    r.price = Price{ticks};
    r.flexible = flexible;
    r.duration = Duration{dur};
    return make_order(r, ts, seq);
}

Order market_order(OrderId id, std::int64_t sq, bool flexible, Time ts, Seq seq,
                   std::uint64_t dur = 10) {
    RawOrder r;
    r.device = id;
    r.id = id;
    r.signed_quantity = sq;
    r.flexible = flexible;
    r.duration = Duration{dur};
    return make_order(r, ts, seq);
}

Book example_book() {
    Book book;
    book.insert(limit_order(1, +2, 400, false, 0, 1));
    book.insert(limit_order(2, +2, 300, false, 385, 2));
    book.insert(limit_order(3, -2, 250, true, 498, 3));
    book.insert(limit_order(4, -3, 100, false, 727, 4));
    return book;
}

}  // namespace

TEST_CASE("price_filter admits the whole example book: d_tot 4, s_tot 5") {
    Book book = example_book();
    auto stacks = price_filter(book);
    CHECK(stacks.bids.size() == 2);
    CHECK(stacks.asks.size() == 2);
    CHECK(stacks.d_tot == Quantity{4});
    CHECK(stacks.s_tot == Quantity{5});
}

TEST_CASE("price_filter extends the ask side after bid exhaustion") {
    // bid 1 @ 5.00 vs asks 1 @ 2.00 and 1 @ 4.00: both asks still cross
    // the exhausted bid side's worst admitted order.
    Book book;
    book.insert(limit_order(1, +1, 500, false, 0, 1));
    book.insert(limit_order(2, -1, 200, false, 1, 2));
    book.insert(limit_order(3, -1, 400, false, 2, 3));
    auto stacks = price_filter(book);
    CHECK(stacks.d_tot == Quantity{1});
    CHECK(stacks.s_tot == Quantity{2});
    REQUIRE(stacks.asks.size() == 2);
    CHECK(stacks.asks[1].order.id == 3);
}

TEST_CASE("price_filter on a positive-spread book yields empty stacks") {
    Book book;
    book.insert(limit_order(1, +1, 300, false, 0, 1));
    book.insert(limit_order(2, -1, 500, false, 1, 2));
    auto stacks = price_filter(book);
    CHECK(stacks.empty());
    CHECK(stacks.d_tot == Quantity{0});
}

TEST_CASE("price_filter treats market orders as crossing any price") {
    Book book;
    book.insert(market_order(1, +2, true, 0, 1));
    book.insert(limit_order(2, -2, 999, false, 1, 2));
    auto stacks = price_filter(book);
    CHECK(stacks.d_tot == Quantity{2});
    CHECK(stacks.s_tot == Quantity{2});
}

TEST_CASE("stack_cut cuts 1 unit from the flexible marginal ask of the example") {
    auto stacks = price_filter(example_book());
    auto cut = stack_cut(stacks);
    REQUIRE(cut.has_value());
    CHECK(cut->marginal.cut_order == OrderId{3});
    CHECK(cut->marginal.cut_amount == Quantity{1});
    CHECK(cut->stacks.d_tot == Quantity{4});
    CHECK(cut->stacks.s_tot == Quantity{4});
    REQUIRE(cut->stacks.asks.size() == 2);
    CHECK(cut->stacks.asks[1].effective == Quantity{1});
}

TEST_CASE("stack_cut excludes whole inflexible marginals and repeats") {
    // supply 5 = [2 @ 1.00, inflexible 3 @ 2.00], demand 4 =
    // [inflexible 2 @ 5.00, inflexible 2 @ 4.00]: exclude the inflexible
    // ask (4 vs 2), then the junior bid (2 vs 2) -> matched.
    Book book;
    book.insert(limit_order(1, +2, 500, false, 0, 1));
    book.insert(limit_order(2, +2, 400, false, 1, 2));
    book.insert(limit_order(3, -2, 100, false, 2, 3));
    book.insert(limit_order(4, -3, 200, false, 3, 4));
    auto stacks = price_filter(book);
    REQUIRE(stacks.d_tot == Quantity{4});
    REQUIRE(stacks.s_tot == Quantity{5});
    auto cut = stack_cut(stacks);
    REQUIRE(cut.has_value());
    CHECK_FALSE(cut->marginal.cut_order.has_value());
    CHECK(cut->stacks.d_tot == Quantity{2});
    CHECK(cut->stacks.s_tot == Quantity{2});
    REQUIRE(cut->stacks.bids.size() == 1);
    CHECK(cut->stacks.bids[0].order.id == 1);
    REQUIRE(cut->stacks.asks.size() == 1);
    CHECK(cut->stacks.asks[0].order.id == 3);
}

TEST_CASE("stack_cut reports NoMatch for two crossing inflexible orders") {
    Book book;
    book.insert(limit_order(1, +2, 500, false, 0, 1));
    book.insert(limit_order(2, -3, 400, false, 1, 2));
    auto cut = stack_cut(price_filter(book));
    CHECK_FALSE(cut.has_value());
}

TEST_CASE("a flexible marginal no larger than the excess is excluded whole") {
    // demand 1, supply [1 @ 1.00, flexible 2 @ 1.50]: excess 2 equals the
    // flexible marginal's quantity, so it leaves the contract entirely
    // and is not the price setter.
    Book book;
    book.insert(limit_order(1, +1, 300, false, 0, 1));
    book.insert(limit_order(2, -1, 100, false, 1, 2));
    book.insert(limit_order(3, -2, 150, true, 2, 3));
    auto cut = stack_cut(price_filter(book));
    REQUIRE(cut.has_value());
    CHECK_FALSE(cut->marginal.cut_order.has_value());
    REQUIRE(cut->stacks.asks.size() == 1);
    CHECK(cut->stacks.asks[0].order.id == 2);
}

TEST_CASE("match_stacks pairs greedily in priority order") {
    PriceFilteredStacks stacks;
    stacks.bids = {{limit_order(1, +2, 500, true, 0, 1), Quantity{2}},
                   {limit_order(2, +2, 400, true, 1, 2), Quantity{2}}};
    stacks.asks = {{limit_order(3, -3, 100, true, 2, 3), Quantity{3}},
                   {limit_order(4, -1, 200, true, 3, 4), Quantity{1}}};
    stacks.d_tot = Quantity{4};
    stacks.s_tot = Quantity{4};
    auto pairs = match_stacks(stacks);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].bid == 1); CHECK(pairs[0].ask == 3); CHECK(pairs[0].quantity == Quantity{2});
    CHECK(pairs[1].bid == 2); CHECK(pairs[1].ask == 3); CHECK(pairs[1].quantity == Quantity{1});
    CHECK(pairs[2].bid == 2); CHECK(pairs[2].ask == 4); CHECK(pairs[2].quantity == Quantity{1});
}

TEST_CASE("match_stacks single pair and precondition") {
    PriceFilteredStacks stacks;
    stacks.bids = {{limit_order(1, +3, 500, true, 0, 1), Quantity{3}}};
    stacks.asks = {{limit_order(2, -3, 100, true, 1, 2), Quantity{3}}};
    stacks.d_tot = stacks.s_tot = Quantity{3};
    auto pairs = match_stacks(stacks);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].quantity == Quantity{3});

    stacks.d_tot = Quantity{2};
    CHECK_THROWS_AS(match_stacks(stacks), std::logic_error);
}

TEST_CASE("the example stacks after cutting pair into the published transactions") {
    auto cut = stack_cut(price_filter(example_book()));
    REQUIRE(cut.has_value());
    auto pairs = match_stacks(cut->stacks);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0].bid == 1); CHECK(pairs[0].ask == 4); CHECK(pairs[0].quantity == Quantity{2});
    CHECK(pairs[1].bid == 2); CHECK(pairs[1].ask == 4); CHECK(pairs[1].quantity == Quantity{1});
    CHECK(pairs[2].bid == 2); CHECK(pairs[2].ask == 3); CHECK(pairs[2].quantity == Quantity{1});
}

TEST_CASE("split_partial on a quantity+duration partial fill") {
    Order o = limit_order(1, -5, 250, true, 0, 1, 10);
    auto [fill, residual] = split_partial(o, Quantity{3}, Duration{4}, 100, 42);
    CHECK(fill.quantity == Quantity{3});
    CHECK(fill.duration == Duration{4});
    CHECK(fill.start == 100);
    REQUIRE(residual.has_value());
    CHECK(residual->id == 42);
    CHECK(residual->ancestor == OrderId{1});
    CHECK(residual->quantity == Quantity{2});
    CHECK(residual->duration == Duration{6});
    CHECK(residual->activation == Time{104});
    CHECK(residual->origin_timestamp == o.origin_timestamp);
    CHECK(residual->origin_seq == o.origin_seq);
}

TEST_CASE("split_partial complete fill produces no residual") {
    Order o = limit_order(1, -2, 250, true, 0, 1, 10);
    auto [fill, residual] = split_partial(o, Quantity{2}, Duration{10}, 50, 42);
    CHECK(fill.quantity == Quantity{2});
    CHECK_FALSE(residual.has_value());
}

TEST_CASE("split_partial duration-only partial keeps the full quantity") {
    Order o = limit_order(1, -4, 250, true, 0, 1, 10);
    auto [fill, residual] = split_partial(o, Quantity{4}, Duration{6}, 0, 42);
    REQUIRE(residual.has_value());
    CHECK(residual->quantity == Quantity{4});
    CHECK(residual->duration == Duration{4});
    CHECK(residual->activation == Time{6});
    // energy Q*d conserved across fill + residual
    std::uint64_t original = o.quantity.units * o.duration.seconds;
    std::uint64_t split = fill.quantity.units * fill.duration.seconds +
                          residual->quantity.units * residual->duration.seconds;
    CHECK(original == split);
}

TEST_CASE("split_partial guards") {
    Order flex = limit_order(1, -4, 250, true, 0, 1, 10);
    CHECK_THROWS_AS(split_partial(flex, Quantity{5}, Duration{10}, 0, 42), std::invalid_argument);
    Order inflex = limit_order(2, -4, 250, false, 0, 1, 10);
    CHECK_THROWS_AS(split_partial(inflex, Quantity{3}, Duration{10}, 0, 42), std::logic_error);
}

TEST_CASE("split_partial immediate mode clears activation") {
    Order o = limit_order(1, -5, 250, true, 0, 1, 10);
    auto [fill, residual] = split_partial(o, Quantity{3}, Duration{10}, 100, 42, true);
    (void)fill;
    REQUIRE(residual.has_value());
    CHECK_FALSE(residual->activation.has_value());
}

TEST_CASE("process_order: the fourth example order triggers the published dispatch") {
    Book book;
    OrderId next = 5;
    // arrival order keeps the book uncleared until the flexible sell lands
    auto r1 = process_order(book, limit_order(1, +2, 400, false, 0, 1), 0, 1, next);
    CHECK_FALSE(r1.front().dispatch.has_value());
    auto r2 = process_order(book, limit_order(4, -3, 100, false, 385, 2), 385, 1, next);
    CHECK_FALSE(r2.front().dispatch.has_value());  // inflexible-marginal equilibrium
    auto r3 = process_order(book, limit_order(2, +2, 300, false, 498, 3), 498, 1, next);
    CHECK_FALSE(r3.front().dispatch.has_value());
    CHECK(book.size() == 3);

    auto rounds = process_order(book, limit_order(3, -2, 250, true, 727, 4), 727, 1, next);
    REQUIRE(rounds.size() == 2);  // one dispatched round, then equilibrium
    const MatchOutcome& r4 = rounds.front();
    REQUIRE(r4.dispatch.has_value());
    const Dispatch& d = *r4.dispatch;
    CHECK(d.clearing_price == Price{250});
    REQUIRE(d.transactions.size() == 3);
    CHECK(d.transactions[0].seller_device == 4);
    CHECK(d.transactions[0].buyer_device == 1);
    CHECK(d.transactions[0].quantity == Quantity{2});
    CHECK(d.transactions[1].seller_device == 4);
    CHECK(d.transactions[1].buyer_device == 2);
    CHECK(d.transactions[1].quantity == Quantity{1});
    CHECK(d.transactions[2].seller_device == 3);
    CHECK(d.transactions[2].buyer_device == 2);
    CHECK(d.transactions[2].quantity == Quantity{1});
    for (const auto& t : d.transactions) {
        CHECK(t.clearing_price == Price{250});
        CHECK(t.duration == Duration{10});
    }
    CHECK(r4.marginal.cut_order == OrderId{3});
    CHECK(r4.marginal.cut_amount == Quantity{1});

    // order 3's unfilled unit splits into a residual activating at 727+10
    REQUIRE(r4.residuals.size() == 1);
    CHECK(r4.residuals[0].quantity == Quantity{1});
    CHECK(r4.residuals[0].activation == Time{737});
    CHECK(r4.residuals[0].ancestor == OrderId{3});
    CHECK(book.size() == 0);
    CHECK(is_equilibrium(book));
}

TEST_CASE("process_order: resting limit order into an empty book") {
    Book book;
    OrderId next = 2;
    auto rounds = process_order(book, limit_order(1, +2, 300, true, 0, 1), 0, 1, next);
    REQUIRE(rounds.size() == 1);
    const MatchOutcome& out = rounds.front();
    CHECK_FALSE(out.dispatch.has_value());
    CHECK(out.rested == std::vector<OrderId>{1});
    CHECK(book.contains(1));
}

TEST_CASE("process_order: flexible market sell fills what crosses, remainder canceled") {
    Book book;
    OrderId next = 10;
    process_order(book, limit_order(1, +2, 400, true, 0, 1), 0, 1, next);
    auto rounds = process_order(book, market_order(2, -5, true, 1, 2), 1, 1, next);
    const MatchOutcome& out = rounds.front();
    REQUIRE(out.dispatch.has_value());
    REQUIRE(out.dispatch->transactions.size() == 1);
    CHECK(out.dispatch->transactions[0].quantity == Quantity{2});
    CHECK(out.dispatch->clearing_price == Price{400});  // one-sided bound
    CHECK(std::count(out.canceled.begin(), out.canceled.end(), 2) == 1);
    CHECK_FALSE(out.failed_market.has_value());
    CHECK(book.size() == 0);
}

TEST_CASE("process_order: unfillable inflexible market order fails whole") {
    Book book;
    OrderId next = 10;
    // the failing round cancels the market order, then one more round
    // confirms the (empty) book is settled
    auto rounds = process_order(book, market_order(1, -3, false, 0, 1), 0, 1, next);
    REQUIRE(rounds.size() == 2);
    const MatchOutcome& out = rounds.front();
    CHECK_FALSE(out.dispatch.has_value());
    CHECK(out.failed_market == OrderId{1});
    CHECK(book.size() == 0);  // market orders never rest
}

TEST_CASE("is_equilibrium matches Definition 2") {
    Book positive;
    positive.insert(limit_order(1, +1, 300, false, 0, 1));
    positive.insert(limit_order(2, -1, 500, false, 1, 2));
    CHECK(is_equilibrium(positive));

    CHECK_FALSE(is_equilibrium(example_book()));

    Book inflex;
    inflex.insert(limit_order(1, +2, 500, false, 0, 1));
    inflex.insert(limit_order(2, -3, 400, false, 1, 2));
    CHECK(is_equilibrium(inflex));  // negative spread but all-or-nothing mismatch

    CHECK(is_equilibrium(Book{}));
}

TEST_CASE("random books: conservation, atomicity, and post-round equilibrium") {
    std::mt19937_64 rng(11);
    for (int iter = 0; iter < 3000; ++iter) {
        Book book;
        OrderId next = 100;
        std::size_t n = 1 + rng() % 6;
        for (OrderId id = 1; id <= n; ++id) {
            std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 4);
            bool buy = rng() % 2;
            if (rng() % 10 == 0)
                book.insert(market_order(id, buy ? q : -q, rng() % 2, static_cast<Time>(id), id));
            else
                book.insert(limit_order(id, buy ? q : -q,
                                        100 + static_cast<std::int64_t>(rng() % 10), rng() % 2,
                                        static_cast<Time>(id), id));
        }
        std::map<OrderId, Order> before;
        for (const auto* list : {&book.bids, &book.asks})
            for (const auto& o : *list) before.emplace(o.id, o);

        // one arrival can take several rounds to restore equilibrium
        std::vector<MatchOutcome> rounds;
        do {
            rounds.push_back(run_match_round(book, 100, 1, rounds.size() + 1, next));
        } while (rounds.back().dispatch || !rounds.back().canceled.empty());
        for (const auto& out : rounds) {
            if (!out.dispatch) continue;
            std::uint64_t bought = 0, sold = 0;
            std::map<OrderId, std::uint64_t> fill;
            for (const auto& t : out.dispatch->transactions) {
                bought += t.quantity.units;
                sold += t.quantity.units;
                fill[t.buyer_order] += t.quantity.units;
                fill[t.seller_order] += t.quantity.units;
                CHECK(t.clearing_price == out.dispatch->clearing_price);
            }
            CHECK(bought == sold);
            for (const auto& [id, q] : fill) {
                const Order& o = before.at(id);
                // price feasibility per limit participant
                if (o.is_limit()) {
                    if (o.side == Side::Buy)
                        CHECK(out.dispatch->clearing_price <= o.limit->limit);
                    else
                        CHECK(out.dispatch->clearing_price >= o.limit->limit);
                }
                // inflexible atomicity
                if (!o.flexible) CHECK(q == o.quantity.units);
            }
        }
        CHECK(is_equilibrium(book));
        CHECK(book.invariants_hold());
    }
}
