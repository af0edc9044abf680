#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace honeykit {

enum class EventKind {
    connection,
    login_attempt,
    session_start,
    session_event,
    session_end,
    download,
    sensor_error,
};

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

enum class TransportKind { tcp, udp };
enum class ConnOutcome { completed, refused, protocol_error, timeout };

// One observed TCP/UDP contact on any sensor port.
struct ConnectionEvent {
    std::string remote_ip;
    uint16_t remote_port = 0;
    uint16_t local_port = 0;
    TransportKind transport = TransportKind::tcp;
    std::string service_label;
    ConnOutcome outcome = ConnOutcome::completed;
    uint64_t bytes_captured = 0;
    std::string payload_hex; // first bytes seen on the wire, hex, capped

    bool operator==(const ConnectionEvent&) const = default;
};

// One SSH authentication attempt. username/password/client_banner are raw
// byte strings (not necessarily UTF-8), each capped at 256 bytes.
struct LoginAttempt {
    std::string remote_ip;
    std::string username;
    std::string password;
    std::string client_banner;
    bool success = false;

    bool operator==(const LoginAttempt&) const = default;
};

// An accepted attacker session. Used as the body of both session_start
// (ended_at == started_at, event_count 0) and session_end (final values).
struct ShellSession {
    std::string session_id;
    std::string remote_ip;
    std::string username;
    std::string password;
    int64_t started_at_ms = 0;
    int64_t ended_at_ms = 0;
    std::string tty_ref;
    uint64_t event_count = 0;

    bool operator==(const ShellSession&) const = default;
};

enum class SessionEventKind { command, output, download, resize, disconnect };

const char* to_string(SessionEventKind k);
std::optional<SessionEventKind> session_event_kind_from_string(std::string_view s);

struct CommandPayload {
    std::string line; // raw bytes as typed
    bool operator==(const CommandPayload&) const = default;
};
struct OutputPayload {
    uint64_t byte_count = 0;
    bool operator==(const OutputPayload&) const = default;
};
struct DownloadPayload {
    std::string sha256;
    std::string url;
    uint64_t size_bytes = 0;
    bool truncated = false;
    bool operator==(const DownloadPayload&) const = default;
};
struct ResizePayload {
    uint32_t cols = 0;
    uint32_t rows = 0;
    bool operator==(const ResizePayload&) const = default;
};
struct DisconnectPayload {
    bool operator==(const DisconnectPayload&) const = default;
};

using SessionPayload =
    std::variant<CommandPayload, OutputPayload, DownloadPayload, ResizePayload, DisconnectPayload>;

struct SessionEvent {
    std::string session_id;
    uint64_t offset_ms = 0;
    SessionEventKind kind = SessionEventKind::command;
    SessionPayload payload;

    bool operator==(const SessionEvent&) const = default;
};

// Content-addressed captured file, kept in the artifact store index.
struct ArtifactRecord {
    std::string sha256;
    uint64_t size_bytes = 0;
    std::string source;
    int64_t first_seen_ms = 0;
    uint64_t ref_count = 1;
    bool truncated = false;

    bool operator==(const ArtifactRecord&) const = default;
};

// Body of a top-level download event: ties a captured artifact to the
// session and source address that fetched it.
struct DownloadRecord {
    std::string remote_ip;
    std::string session_id;
    std::string sha256;
    std::string url;
    uint64_t size_bytes = 0;
    bool truncated = false;

    bool operator==(const DownloadRecord&) const = default;
};

struct SensorError {
    std::string message;
    std::string detail;

    bool operator==(const SensorError&) const = default;
};

using EventBody = std::variant<ConnectionEvent, LoginAttempt, ShellSession, SessionEvent,
                               DownloadRecord, SensorError>;

struct EventEnvelope {
    std::string id;     // 26-char sortable id
    int64_t ts_ms = 0;  // UTC milliseconds
    std::string sensor; // [a-z0-9_-]+
    EventKind kind = EventKind::connection;
    EventBody body;

    bool operator==(const EventEnvelope&) const = default;
};

// Empty when the envelope satisfies every type invariant, otherwise the
// offending field path ("body.remote_ip"). Shared by the codec and by
// EventWriter, so a sensor bug surfaces at the write, whatever the sink.
std::string validate_event(const EventEnvelope& e);

// Canonical single-line JSON encoding; keys in ascending lexicographic
// order; decode(encode(e)) == e. Throws std::invalid_argument when the
// envelope violates its type invariants.
std::string encode_event(const EventEnvelope& e);

enum class DecodeErrorKind { malformed_syntax, unknown_kind, invariant_violation };

struct DecodeError {
    DecodeErrorKind kind;
    std::string detail; // names the offending field
};

using DecodeResult = std::variant<EventEnvelope, DecodeError>;

DecodeResult decode_event(std::string_view line);

inline bool decode_ok(const DecodeResult& r) { return std::holds_alternative<EventEnvelope>(r); }

} // namespace honeykit
