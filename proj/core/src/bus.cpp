#include "driftvote/bus.hpp"

#include <algorithm>

#include "driftvote/types.hpp"

namespace driftvote {

namespace {

std::vector<std::string_view> levels(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t from = 0;
  while (true) {
    const auto slash = s.find('/', from);
    if (slash == std::string_view::npos) {
      out.push_back(s.substr(from));
      return out;
    }
    out.push_back(s.substr(from, slash - from));
    from = slash + 1;
  }
}

}  // namespace

bool topic_matches(std::string_view pattern, std::string_view topic) {
  const auto p = levels(pattern);
  const auto t = levels(topic);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == "#") return i + 1 == p.size();
    if (i >= t.size()) return false;
    if (p[i] != "+" && p[i] != t[i]) return false;
  }
  return p.size() == t.size();
}

Subscription::Subscription(std::weak_ptr<Bus> bus, std::string pattern)
    : bus_(std::move(bus)), pattern_(std::move(pattern)) {}

Subscription::~Subscription() {
  if (auto bus = bus_.lock()) bus->unsubscribe(this);
}

void Subscription::deliver(const BusMessage& msg) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(msg);
  }
  cv_.notify_one();
}

void Subscription::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::optional<BusMessage> Subscription::try_receive() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  auto msg = std::move(queue_.front());
  queue_.pop_front();
  return msg;
}

std::optional<BusMessage> Subscription::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto msg = std::move(queue_.front());
  queue_.pop_front();
  return msg;
}

std::vector<BusMessage> Subscription::drain() {
  std::lock_guard lock(mu_);
  std::vector<BusMessage> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t Subscription::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

std::shared_ptr<Bus> Bus::create() { return std::shared_ptr<Bus>(new Bus()); }

std::shared_ptr<Subscription> Bus::subscribe(const std::string& pattern) {
  if (pattern.empty()) throw InputError("bus: empty subscription pattern");
  std::shared_ptr<Subscription> sub(new Subscription(weak_from_this(), pattern));
  std::lock_guard lock(mu_);
  if (closed_) sub->close();
  subs_.push_back(sub);
  return sub;
}

std::uint64_t Bus::publish(const std::string& topic, std::string payload) {
  if (topic.empty()) throw InputError("bus: empty topic");
  if (topic.find_first_of("+#") != std::string::npos) throw InputError("bus: wildcard in published topic");
  std::lock_guard lock(mu_);
  if (closed_) throw StateError("bus: publish on closed bus");
  BusMessage msg{topic, std::move(payload), next_seq_++};
  for (const auto& weak : subs_) {
    if (auto sub = weak.lock(); sub && topic_matches(sub->pattern(), topic)) sub->deliver(msg);
  }
  return msg.publish_seq;
}

void Bus::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  for (const auto& weak : subs_) {
    if (auto sub = weak.lock()) sub->close();
  }
}

bool Bus::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void Bus::unsubscribe(const Subscription* sub) {
  std::lock_guard lock(mu_);
  std::erase_if(subs_, [&](const std::weak_ptr<Subscription>& w) {
    auto s = w.lock();
    return !s || s.get() == sub;
  });
}

}  // namespace driftvote
