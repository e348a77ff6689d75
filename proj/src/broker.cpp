#include "fedecg/transport/broker.hpp"

#include <algorithm>

namespace fedecg::transport {

bool valid_token(const std::string& token) {
    if (token.empty()) return false;
    return std::all_of(token.begin(), token.end(), [](unsigned char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    });
}

namespace {
void require_token(const std::string& token, const char* what) {
    if (!valid_token(token))
        throw ValueError(std::string(what) + " '" + token + "' must be lowercase alphanumeric");
}
}  // namespace

std::string global_topic(const std::string& fed_id) {
    require_token(fed_id, "fed_id");
    return "fl/" + fed_id + "/global";
}

std::string update_topic(const std::string& fed_id, const std::string& client_id) {
    require_token(fed_id, "fed_id");
    require_token(client_id, "client_id");
    return "fl/" + fed_id + "/updates/" + client_id;
}

std::string control_topic(const std::string& fed_id) {
    require_token(fed_id, "fed_id");
    return "fl/" + fed_id + "/control";
}

bool topic_matches(const std::string& pattern, const std::string& topic) {
    std::size_t p = 0, t = 0;
    while (true) {
        const std::size_t pe = pattern.find('/', p);
        const std::size_t te = topic.find('/', t);
        const std::string pseg = pattern.substr(p, pe == std::string::npos ? pe : pe - p);
        const std::string tseg = topic.substr(t, te == std::string::npos ? te : te - t);
        const bool last_pattern_seg = pe == std::string::npos;
        if (pseg == "+") {
            // single trailing wildcard segment
            if (!last_pattern_seg || tseg.empty()) return false;
            return te == std::string::npos;
        }
        if (pseg != tseg) return false;
        if (last_pattern_seg || te == std::string::npos)
            return last_pattern_seg && te == std::string::npos;
        p = pe + 1;
        t = te + 1;
    }
}

std::optional<Bytes> Subscription::poll(std::chrono::milliseconds deadline) {
    std::unique_lock lock(mutex_);
    if (!cv_.wait_for(lock, deadline, [&] { return !queue_.empty(); })) return std::nullopt;
    Bytes msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
}

std::size_t Subscription::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

bool Subscription::offer(const Bytes& msg) {
    {
        std::lock_guard lock(mutex_);
        if (queue_.size() >= capacity_) return false;
        queue_.push_back(msg);
    }
    cv_.notify_one();
    return true;
}

std::shared_ptr<Subscription> Broker::subscribe(const std::string& pattern) {
    // "+" is only meaningful as the final segment.
    const std::size_t plus = pattern.find('+');
    if (plus != std::string::npos &&
        (plus != pattern.size() - 1 || plus == 0 || pattern[plus - 1] != '/'))
        throw ValueError("pattern '" + pattern + "': wildcard must be a single trailing segment");
    auto sub = std::make_shared<Subscription>(pattern, capacity_);
    std::lock_guard lock(mutex_);
    subs_.push_back(sub);
    return sub;
}

void Broker::publish(const std::string& topic, Bytes message) {
    std::vector<std::shared_ptr<Subscription>> targets;
    {
        std::lock_guard lock(mutex_);
        for (const auto& sub : subs_)
            if (topic_matches(sub->pattern(), topic)) targets.push_back(sub);
    }
    for (const auto& sub : targets)
        if (!sub->offer(message))
            throw BackpressureError("subscription queue for pattern '" + sub->pattern() +
                                    "' is full (topic " + topic + ")");
}

}  // namespace fedecg::transport
