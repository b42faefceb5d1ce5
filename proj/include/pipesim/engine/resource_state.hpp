#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>

#include "pipesim/domain.hpp"
#include "pipesim/sim_time.hpp"

namespace pipesim::engine {

/// A blocked resource request.
struct Waiting {
  std::uint32_t slot = 0;     ///< pipeline slot inside the simulation
  std::uint64_t pipeline = 0;
  SimTime requested;
  std::uint64_t ticket = 0;   ///< monotone request counter
};

/// Orders blocked requests. The engine only ships FIFO; other disciplines
/// plug in through ResourceState's constructor.
class QueueDiscipline {
public:
  virtual ~QueueDiscipline() = default;
  virtual void push(const Waiting& w) = 0;
  virtual Waiting pop() = 0;
  virtual bool empty() const = 0;
  virtual std::size_t size() const = 0;
  /// Visits waiting requests in service order.
  virtual void for_each(const std::function<void(const Waiting&)>& f) const = 0;
};

class FifoQueue final : public QueueDiscipline {
public:
  void push(const Waiting& w) override { q_.push_back(w); }
  Waiting pop() override {
    Waiting w = q_.front();
    q_.pop_front();
    return w;
  }
  bool empty() const override { return q_.empty(); }
  std::size_t size() const override { return q_.size(); }
  void for_each(const std::function<void(const Waiting&)>& f) const override {
    for (const auto& w : q_) f(w);
  }

private:
  std::deque<Waiting> q_;
};

using QueueFactory = std::function<std::unique_ptr<QueueDiscipline>()>;

inline QueueFactory fifo_factory() {
  return [] { return std::make_unique<FifoQueue>(); };
}

/// Slots in service, the wait queue, and time integrals of both.
class ResourceState {
public:
  explicit ResourceState(Resource r, std::unique_ptr<QueueDiscipline> q = std::make_unique<FifoQueue>())
      : resource_{std::move(r)}, queue_{std::move(q)} {}

  const Resource& resource() const { return resource_; }
  std::uint32_t in_service() const { return in_service_; }
  std::size_t queued() const { return queue_->size(); }
  const QueueDiscipline& queue() const { return *queue_; }

  /// Takes a free slot. Fails while anyone is queued so arrivals cannot
  /// overtake waiting requests.
  bool try_acquire(SimTime now) {
    if (in_service_ >= resource_.capacity || !queue_->empty()) return false;
    advance(now);
    ++in_service_;
    ++grants_;
    return true;
  }

  void enqueue(const Waiting& w, SimTime now) {
    advance(now);
    queue_->push(w);
  }

  /// Frees a slot. When requests are waiting the slot passes straight to
  /// the next one in line, which is returned.
  std::optional<Waiting> release(SimTime now) {
    advance(now);
    if (!queue_->empty()) {
      ++grants_;
      return queue_->pop();
    }
    --in_service_;
    return std::nullopt;
  }

  void finish(SimTime horizon) { advance(horizon); }

  double busy_slot_seconds() const { return static_cast<double>(busy_us_) / 1e6; }
  /// Time integral of the queue length, in request-seconds.
  double queue_seconds() const { return static_cast<double>(queue_us_) / 1e6; }
  std::uint64_t grants() const { return grants_; }

private:
  void advance(SimTime now) {
    if (now > last_) {
      const auto dt = (now - last_).micros();
      busy_us_ += static_cast<std::int64_t>(in_service_) * dt;
      queue_us_ += static_cast<std::int64_t>(queue_->size()) * dt;
      last_ = now;
    }
  }

  Resource resource_;
  std::unique_ptr<QueueDiscipline> queue_;
  std::uint32_t in_service_ = 0;
  std::uint64_t grants_ = 0;
  SimTime last_{};
  std::int64_t busy_us_ = 0;
  std::int64_t queue_us_ = 0;
};

} // namespace pipesim::engine
