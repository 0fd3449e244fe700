#pragma once

// The limit order book: the pair of priority-sorted lists (bids, asks)
// with insertion, cancellation, time expiration, and the spread query.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lob/types.hpp"

namespace lob {

class Book {
public:
    std::vector<Order> bids;  // best (highest priority) first
    std::vector<Order> asks;
    Time now{};

    const std::vector<Order>& side(Side s) const { return s == Side::Buy ? bids : asks; }
    std::vector<Order>& side(Side s) { return s == Side::Buy ? bids : asks; }

    bool contains(OrderId id) const { return index_.count(id) != 0; }

    const Order* find(OrderId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return nullptr;
        const auto& list = side(it->second);
        for (const auto& o : list)
            if (o.id == id) return &o;
        return nullptr;
    }

    std::size_t size() const { return bids.size() + asks.size(); }

    void insert(const Order& order) {
        if (contains(order.id)) throw std::invalid_argument("duplicate order id");
        auto& list = side(order.side);
        auto key = priority_key(order);
        // Stable position: after every order with equal or better priority.
        auto pos = std::find_if(list.begin(), list.end(), [&](const Order& o) {
            return better(key, priority_key(o));
        });
        list.insert(pos, order);
        index_.emplace(order.id, order.side);
    }

    Order cancel(OrderId id) {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::invalid_argument("unknown order id");
        auto& list = side(it->second);
        auto pos = std::find_if(list.begin(), list.end(), [&](const Order& o) { return o.id == id; });
        Order removed = *pos;
        list.erase(pos);
        index_.erase(it);
        return removed;
    }

    // Removes every limit order whose deadline has passed (deadline
    // inclusive: an order with activation+expiration == now is retained).
    // Market-kind orders never expire by time.
    std::vector<OrderId> expire_due(Time at) {
        if (at < now) throw std::invalid_argument("expire_due: time regression");
        now = at;
        std::vector<OrderId> expired;
        for (auto* list : {&bids, &asks}) {
            for (auto it = list->begin(); it != list->end();) {
                auto deadline = it->deadline();
                if (deadline && *deadline < at) {
                    expired.push_back(it->id);
                    index_.erase(it->id);
                    it = list->erase(it);
                } else {
                    ++it;
                }
            }
        }
        return expired;
    }

    // Best ask price minus best bid price; absent when either side is
    // empty or its best order is a market order (no discoverable price).
    std::optional<Price> spread() const {
        if (bids.empty() || asks.empty()) return std::nullopt;
        if (bids.front().is_market() || asks.front().is_market()) return Price{0};
        return asks.front().limit->limit - bids.front().limit->limit;
    }

    // Full consistency rescan used by tests.
    bool invariants_hold() const {
        for (auto* list : {&bids, &asks}) {
            for (std::size_t i = 1; i < list->size(); ++i) {
                if (better(priority_key((*list)[i]), priority_key((*list)[i - 1]))) return false;
            }
        }
        std::size_t counted = 0;
        for (const auto& o : bids) {
            auto it = index_.find(o.id);
            if (it == index_.end() || it->second != Side::Buy) return false;
            ++counted;
        }
        for (const auto& o : asks) {
            auto it = index_.find(o.id);
            if (it == index_.end() || it->second != Side::Sell) return false;
            ++counted;
        }
        return counted == index_.size();
    }

private:
    std::unordered_map<OrderId, Side> index_;
};

}  // namespace lob
