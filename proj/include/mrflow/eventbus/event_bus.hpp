#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mrflow/eventbus/trigger_event.hpp"

namespace mrflow {

// Broker-shaped transport: named topics with durable FIFO queues. Delivery
// is at-least-once; consumers must tolerate duplicates.
class EventBus {
 public:
  virtual ~EventBus() = default;

  virtual void declare_topic(const std::string& topic) = 0;
  virtual bool has_topic(const std::string& topic) const = 0;
  // Throws UnknownTopic for undeclared topics, BusUnavailable once shut down.
  virtual void publish(const std::string& topic, const TriggerEvent& event) = 0;
  // Blocks up to `timeout`; nullopt on timeout or shutdown.
  virtual std::optional<TriggerEvent> receive(const std::string& topic, std::chrono::milliseconds timeout) = 0;
};

struct PublishedEvent {
  std::string topic;
  TriggerEvent event;
};

// Default transport. Queues live in the bus, not in consumers, so a consumer
// that detaches leaves pending events queued for the next one. Events cross
// the queue in their serialized envelope form.
class InProcessEventBus final : public EventBus {
 public:
  InProcessEventBus() = default;

  void declare_topic(const std::string& topic) override;
  bool has_topic(const std::string& topic) const override;
  void publish(const std::string& topic, const TriggerEvent& event) override;
  std::optional<TriggerEvent> receive(const std::string& topic, std::chrono::milliseconds timeout) override;

  // Redelivers each received event a second time with probability `rate`
  // (fault injection for duplicate-delivery testing). Redeliveries are not
  // duplicated again.
  void set_duplicate_rate(double rate, std::uint64_t seed);

  void shutdown();

  std::vector<PublishedEvent> publish_log() const;
  std::size_t pending(const std::string& topic) const;
  std::size_t duplicates_injected() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  struct Queued {
    std::string raw;
    bool redelivery = false;
  };

  std::map<std::string, std::deque<Queued>> queues_;
  std::vector<PublishedEvent> log_;
  bool shut_down_ = false;
  double duplicate_rate_ = 0.0;
  std::mt19937_64 rng_{0};
  std::size_t duplicates_ = 0;
};

// The four topics every deployment declares.
void declare_standard_topics(EventBus& bus);

}  // namespace mrflow
