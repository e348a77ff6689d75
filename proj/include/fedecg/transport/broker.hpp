#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fedecg/error.hpp"

namespace fedecg::transport {

using Bytes = std::shared_ptr<const std::vector<unsigned char>>;

inline Bytes make_bytes(std::vector<unsigned char> v) {
    return std::make_shared<const std::vector<unsigned char>>(std::move(v));
}

// Topic paths: fl/<fed_id>/global, fl/<fed_id>/updates/<client_id>,
// fl/<fed_id>/control. Tokens are lowercase alphanumeric.
bool valid_token(const std::string& token);
std::string global_topic(const std::string& fed_id);
std::string update_topic(const std::string& fed_id, const std::string& client_id);
std::string control_topic(const std::string& fed_id);

// True when topic matches pattern. Patterns are exact topic paths, optionally
// with a single trailing "+" segment matching exactly one segment.
bool topic_matches(const std::string& pattern, const std::string& topic);

class Subscription {
  public:
    Subscription(std::string pattern, std::size_t capacity)
        : pattern_(std::move(pattern)), capacity_(capacity) {}

    // Blocks until a message arrives or the deadline passes; nullopt on timeout.
    std::optional<Bytes> poll(std::chrono::milliseconds deadline);

    // Non-blocking variant.
    std::optional<Bytes> try_poll() { return poll(std::chrono::milliseconds(0)); }

    const std::string& pattern() const { return pattern_; }
    std::size_t pending() const;

  private:
    friend class Broker;
    bool offer(const Bytes& msg);  // false when the queue is full

    std::string pattern_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Bytes> queue_;
};

// Deterministic in-process pub/sub broker with MQTT-like topic semantics.
// Fan-out copies message handles to every matching subscription; per
// (topic, subscription) delivery order equals publish order. Safe for
// concurrent publishers and subscribers.
class Broker {
  public:
    explicit Broker(std::size_t queue_capacity = 64) : capacity_(queue_capacity) {}

    std::shared_ptr<Subscription> subscribe(const std::string& pattern);
    void publish(const std::string& topic, Bytes message);
    void publish(const std::string& topic, std::vector<unsigned char> message) {
        publish(topic, make_bytes(std::move(message)));
    }

  private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::vector<std::shared_ptr<Subscription>> subs_;
};

}  // namespace fedecg::transport
