#pragma once

// Discrete-event loop owning the book: admits orders, fires
// expirations, activates scheduled residuals, invokes matching, and
// appends every event to the log. Deterministic for identical input
// streams.

#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <variant>
#include <vector>

#include "lob/book.hpp"
#include "lob/process.hpp"
#include "lob/settlement.hpp"
#include "lob/types.hpp"

namespace lob {

struct EngineConfig {
    TickSize tick{};
    std::uint64_t power_unit_kw{1};
    TariffSchedule tariff{};
    bool immediate_residuals{false};
};

struct SubmitInput { RawOrder order; };
struct CancelInput { OrderId order{}; };

struct InputEvent {
    Time time{};
    std::variant<SubmitInput, CancelInput> action;
};

class Engine {
public:
    explicit Engine(EngineConfig cfg = {}) : cfg_(std::move(cfg)) {}

    const EngineConfig& config() const { return cfg_; }
    const Book& book() const { return book_; }
    const std::vector<Event>& log() const { return log_; }
    const std::vector<Dispatch>& dispatches() const { return dispatches_; }
    const std::vector<SettlementReport>& settlements() const { return settlements_; }
    const std::map<OrderId, Order>& registry() const { return registry_; }

    // Processes one input immediately (together with anything already
    // scheduled at or before its time).
    void step(const InputEvent& in) {
        if (in.time < book_.now) throw std::invalid_argument("step: time regression");
        drain_until(in.time);
        push({in.time, kArrival, tie_++, to_qaction(in.action)});
        drain_scheduled(in.time);
    }

    // Folds the whole input stream; afterwards drains the queue of
    // scheduled residual activations and expirations (up to `stop`).
    void run(const std::vector<InputEvent>& inputs, std::optional<Time> stop = {}) {
        for (const auto& in : inputs) push({in.time, kArrival, tie_++, to_qaction(in.action)});
        while (!queue_.empty()) {
            if (stop && queue_.top().time > *stop) break;
            pop_and_handle();
        }
    }

private:
    static constexpr int kExpire = 0;
    static constexpr int kActivate = 1;
    static constexpr int kArrival = 2;

    struct ExpireCheck { OrderId order{}; };
    struct Activate { Order order; };
    using QAction = std::variant<SubmitInput, CancelInput, ExpireCheck, Activate>;

    struct QItem {
        Time time{};
        int klass{};
        std::uint64_t tie{};
        QAction what;
    };
    struct Later {
        bool operator()(const QItem& a, const QItem& b) const {
            if (a.time != b.time) return a.time > b.time;
            if (a.klass != b.klass) return a.klass > b.klass;
            return a.tie > b.tie;
        }
    };

    static QAction to_qaction(const std::variant<SubmitInput, CancelInput>& a) {
        return std::visit([](const auto& x) { return QAction{x}; }, a);
    }

    void push(QItem item) { queue_.push(std::move(item)); }

    void drain_until(Time t) {
        while (!queue_.empty() && queue_.top().time < t) pop_and_handle();
    }
    void drain_scheduled(Time t) {
        while (!queue_.empty() && queue_.top().time <= t) pop_and_handle();
    }

    void pop_and_handle() {
        QItem item = queue_.top();
        queue_.pop();
        if (item.time < book_.now) throw std::logic_error("event queue time regression");
        // Advance the clock only; expirations fire through their own
        // scheduled checks so every removal is logged.
        book_.now = item.time;
        std::visit([&](auto&& a) { handle(item.time, a); }, item.what);
    }

    void log_event(Time t, EventPayload payload) {
        log_.push_back(Event{event_index_++, t, std::move(payload)});
    }

    void schedule_expiry(const Order& o) {
        auto deadline = o.deadline();
        if (deadline) push({*deadline + 1, kExpire, tie_++, ExpireCheck{o.id}});
    }

    void handle(Time now, const SubmitInput& in) {
        RawOrder raw = in.order;
        if (raw.id == 0) raw.id = next_order_id_;
        if (registry_.count(raw.id)) throw std::invalid_argument("duplicate order id");
        Order order = make_order(raw, now, next_seq_++);
        if (order.id >= next_order_id_) next_order_id_ = order.id + 1;
        registry_.emplace(order.id, order);
        log_event(now, Submitted{order});
        auto rounds = process_order(book_, order, now, next_round_, next_order_id_,
                                    MatchConfig{cfg_.immediate_residuals});
        schedule_expiry(order);
        for (auto& outcome : rounds) apply_outcome(now, std::move(outcome));
    }

    void handle(Time now, const CancelInput& in) {
        book_.cancel(in.order);  // throws on unknown id
        log_event(now, Canceled{in.order, "user"});
        clear_to_equilibrium(now);
    }

    void handle(Time now, const ExpireCheck& in) {
        const Order* o = book_.find(in.order);
        if (!o) return;
        auto deadline = o->deadline();
        if (deadline && *deadline < now) {
            book_.cancel(in.order);
            log_event(now, Expired{in.order});
            clear_to_equilibrium(now);
        }
    }

    // Removing an order can unblock a crossed book: a senior inflexible
    // order may have forced the cut to empty one side (no match) while
    // the orders behind it cross. Clear until no round dispatches.
    void clear_to_equilibrium(Time now) {
        while (true) {
            auto s = book_.spread();
            if (!s || s->ticks > 0) return;
            auto out = run_match_round(book_, now, 0, next_round_, next_order_id_,
                                       MatchConfig{cfg_.immediate_residuals});
            bool dispatched = out.dispatch.has_value();
            apply_outcome(now, std::move(out));
            if (!dispatched) return;
        }
    }

    void handle(Time now, const Activate& in) {
        log_event(now, ResidualActivated{in.order.id});
        auto rounds = process_order(book_, in.order, now, next_round_, next_order_id_,
                                    MatchConfig{cfg_.immediate_residuals});
        schedule_expiry(in.order);
        for (auto& outcome : rounds) apply_outcome(now, std::move(outcome));
    }

    void apply_outcome(Time now, MatchOutcome&& out) {
        if (out.dispatch) {
            ++next_round_;
            dispatches_.push_back(*out.dispatch);
            settlements_.push_back(settle(*out.dispatch, registry_, cfg_.tariff));
            log_event(now, Matched{*out.dispatch});
        }
        for (const auto& r : out.residuals) {
            registry_.emplace(r.id, r);
            log_event(now, ResidualScheduled{r});
            push({r.activation.value_or(now), kActivate, tie_++, Activate{r}});
        }
        for (OrderId id : out.canceled) {
            if (out.failed_market && *out.failed_market == id) continue;
            log_event(now, Canceled{id, "ioc"});
        }
        if (out.failed_market) log_event(now, MatchFailed{*out.failed_market});
    }

    EngineConfig cfg_;
    Book book_;
    std::vector<Event> log_;
    std::vector<Dispatch> dispatches_;
    std::vector<SettlementReport> settlements_;
    std::map<OrderId, Order> registry_;
    std::priority_queue<QItem, std::vector<QItem>, Later> queue_;
    // Auto-assigned ids (agent submissions, residuals) live in a high
    // range so they cannot collide with explicit ids arriving later in
    // the stream.
    static constexpr OrderId kAutoIdBase = 1ull << 32;

    std::uint64_t event_index_{0};
    Seq next_seq_{1};
    std::uint64_t next_round_{1};
    OrderId next_order_id_{kAutoIdBase};
    std::uint64_t tie_{0};
};

}  // namespace lob
