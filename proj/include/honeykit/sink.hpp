#pragma once

#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "honeykit/clock.hpp"
#include "honeykit/event.hpp"
#include "honeykit/ulid.hpp"

namespace honeykit {

// Serialized event consumer. Sensors funnel all per-connection contexts
// through one sink; implementations must be safe under concurrent emit.
class EventSink {
  public:
    virtual ~EventSink() = default;
    virtual void emit(const EventEnvelope& e) = 0;
};

// Appends canonical JSON lines to a file, one whole line per emit.
class FileEventSink : public EventSink {
  public:
    explicit FileEventSink(const std::string& path);
    void emit(const EventEnvelope& e) override;

  private:
    std::mutex mu_;
    std::ofstream out_;
    std::string path_;
};

// Test sink keeping envelopes in memory.
class MemoryEventSink : public EventSink {
  public:
    void emit(const EventEnvelope& e) override;
    std::vector<EventEnvelope> events() const;

  private:
    mutable std::mutex mu_;
    std::vector<EventEnvelope> events_;
};

// Stamps ids/timestamps/sensor name onto bodies and forwards to a sink.
class EventWriter {
  public:
    EventWriter(std::shared_ptr<EventSink> sink, std::string sensor_name,
                Clock clock = system_clock_ms());

    EventEnvelope write(EventKind kind, EventBody body);
    std::string new_id();
    int64_t now_ms() const { return clock_(); }
    const std::string& sensor() const { return sensor_; }

  private:
    std::shared_ptr<EventSink> sink_;
    std::string sensor_;
    Clock clock_;
    UlidGenerator ulid_;
};

} // namespace honeykit
