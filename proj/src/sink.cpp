#include "honeykit/sink.hpp"

#include <stdexcept>

namespace honeykit {

FileEventSink::FileEventSink(const std::string& path) : path_(path) {
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_.is_open()) throw std::runtime_error("cannot open event log for append: " + path);
}

void FileEventSink::emit(const EventEnvelope& e) {
    std::string line = encode_event(e);
    line.push_back('\n');
    std::lock_guard<std::mutex> lock(mu_);
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
}

void MemoryEventSink::emit(const EventEnvelope& e) {
    std::lock_guard<std::mutex> lock(mu_);
    events_.push_back(e);
}

std::vector<EventEnvelope> MemoryEventSink::events() const {
    std::lock_guard<std::mutex> lock(mu_);
    return events_;
}

EventWriter::EventWriter(std::shared_ptr<EventSink> sink, std::string sensor_name, Clock clock)
    : sink_(std::move(sink)), sensor_(std::move(sensor_name)), clock_(clock), ulid_(clock) {}

EventEnvelope EventWriter::write(EventKind kind, EventBody body) {
    EventEnvelope e;
    e.id = ulid_.next();
    e.ts_ms = clock_();
    e.sensor = sensor_;
    e.kind = kind;
    e.body = std::move(body);
    std::string bad = validate_event(e);
    if (!bad.empty()) throw std::invalid_argument("invalid envelope field: " + bad);
    sink_->emit(e);
    return e;
}

std::string EventWriter::new_id() { return ulid_.next(); }

} // namespace honeykit
