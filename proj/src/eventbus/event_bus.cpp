#include "mrflow/eventbus/event_bus.hpp"

#include "mrflow/core/error.hpp"

namespace mrflow {

void InProcessEventBus::declare_topic(const std::string& topic) {
  std::lock_guard lock(mutex_);
  queues_.try_emplace(topic);
}

bool InProcessEventBus::has_topic(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  return queues_.contains(topic);
}

void InProcessEventBus::publish(const std::string& topic, const TriggerEvent& event) {
  {
    std::lock_guard lock(mutex_);
    if (shut_down_) throw Error(Errc::kBusUnavailable, "event bus is shut down");
    const auto it = queues_.find(topic);
    if (it == queues_.end()) throw Error(Errc::kUnknownTopic, topic);
    it->second.push_back(Queued{serialize_event(event), false});
    log_.push_back(PublishedEvent{topic, event});
  }
  cv_.notify_all();
}

std::optional<TriggerEvent> InProcessEventBus::receive(const std::string& topic, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  const auto it = queues_.find(topic);
  if (it == queues_.end()) throw Error(Errc::kUnknownTopic, topic);
  auto& queue = it->second;
  if (!cv_.wait_for(lock, timeout, [&] { return shut_down_ || !queue.empty(); }) || shut_down_) {
    return std::nullopt;
  }
  Queued entry = std::move(queue.front());
  queue.pop_front();
  if (!entry.redelivery && duplicate_rate_ > 0.0 && std::bernoulli_distribution(duplicate_rate_)(rng_)) {
    queue.push_back(Queued{entry.raw, true});
    ++duplicates_;
    cv_.notify_all();
  }
  lock.unlock();
  return parse_event(entry.raw);
}

void InProcessEventBus::set_duplicate_rate(double rate, std::uint64_t seed) {
  std::lock_guard lock(mutex_);
  duplicate_rate_ = rate;
  rng_.seed(seed);
}

void InProcessEventBus::shutdown() {
  {
    std::lock_guard lock(mutex_);
    shut_down_ = true;
  }
  cv_.notify_all();
}

std::vector<PublishedEvent> InProcessEventBus::publish_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t InProcessEventBus::pending(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  const auto it = queues_.find(topic);
  return it == queues_.end() ? 0 : it->second.size();
}

std::size_t InProcessEventBus::duplicates_injected() const {
  std::lock_guard lock(mutex_);
  return duplicates_;
}

void declare_standard_topics(EventBus& bus) {
  for (const auto type : {EventType::kSplit, EventType::kMap, EventType::kReduce, EventType::kFinalize}) {
    bus.declare_topic(std::string(topic_for(type)));
  }
}

}  // namespace mrflow
