#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftvote/types.hpp"

namespace driftvote {

struct BusMessage {
  std::string topic;
  std::string payload;
  std::uint64_t publish_seq = 0;
};

/// MQTT-style matching: `+` matches one level, a trailing `#` any number of
/// remaining levels (including none).
bool topic_matches(std::string_view pattern, std::string_view topic);

class Bus;

/// Queue of messages delivered to one subscriber. Unsubscribes on destruction.
class Subscription {
 public:
  ~Subscription();
  Subscription(const Subscription&) = delete;
  Subscription& operator=(const Subscription&) = delete;

  const std::string& pattern() const noexcept { return pattern_; }

  std::optional<BusMessage> try_receive();
  /// Waits up to `timeout`; returns nothing on timeout or once the bus is
  /// closed and the queue is drained.
  std::optional<BusMessage> receive(std::chrono::milliseconds timeout);
  std::vector<BusMessage> drain();
  std::size_t pending() const;

 private:
  friend class Bus;
  Subscription(std::weak_ptr<Bus> bus, std::string pattern);
  void deliver(const BusMessage& msg);
  void close();

  std::weak_ptr<Bus> bus_;
  std::string pattern_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<BusMessage> queue_;
  bool closed_ = false;
};

/// In-process topic bus. Publishing is safe from any thread; each subscriber
/// sees the messages of one topic in publish order. Messages published before
/// a subscription exists are not replayed.
class Bus : public std::enable_shared_from_this<Bus> {
 public:
  static std::shared_ptr<Bus> create();

  std::shared_ptr<Subscription> subscribe(const std::string& pattern);
  /// Returns the publish sequence number. Throws StateError once closed and
  /// InputError for an empty topic or one containing wildcards.
  std::uint64_t publish(const std::string& topic, std::string payload);
  void close();
  bool closed() const;

 private:
  Bus() = default;
  friend class Subscription;
  void unsubscribe(const Subscription* sub);

  mutable std::mutex mu_;
  std::vector<std::weak_ptr<Subscription>> subs_;
  std::uint64_t next_seq_ = 0;
  bool closed_ = false;
};

}  // namespace driftvote
