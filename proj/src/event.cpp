#include "honeykit/event.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

#include "honeykit/sha256.hpp"
#include "honeykit/ulid.hpp"
#include "honeykit/util.hpp"

using json = nlohmann::json;

namespace honeykit {

const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::connection: return "connection";
    case EventKind::login_attempt: return "login_attempt";
    case EventKind::session_start: return "session_start";
    case EventKind::session_event: return "session_event";
    case EventKind::session_end: return "session_end";
    case EventKind::download: return "download";
    case EventKind::sensor_error: return "sensor_error";
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
    if (s == "connection") return EventKind::connection;
    if (s == "login_attempt") return EventKind::login_attempt;
    if (s == "session_start") return EventKind::session_start;
    if (s == "session_event") return EventKind::session_event;
    if (s == "session_end") return EventKind::session_end;
    if (s == "download") return EventKind::download;
    if (s == "sensor_error") return EventKind::sensor_error;
    return std::nullopt;
}

const char* to_string(SessionEventKind k) {
    switch (k) {
    case SessionEventKind::command: return "command";
    case SessionEventKind::output: return "output";
    case SessionEventKind::download: return "download";
    case SessionEventKind::resize: return "resize";
    case SessionEventKind::disconnect: return "disconnect";
    }
    return "unknown";
}

std::optional<SessionEventKind> session_event_kind_from_string(std::string_view s) {
    if (s == "command") return SessionEventKind::command;
    if (s == "output") return SessionEventKind::output;
    if (s == "download") return SessionEventKind::download;
    if (s == "resize") return SessionEventKind::resize;
    if (s == "disconnect") return SessionEventKind::disconnect;
    return std::nullopt;
}

static const char* to_string(TransportKind t) { return t == TransportKind::tcp ? "tcp" : "udp"; }

static const char* to_string(ConnOutcome o) {
    switch (o) {
    case ConnOutcome::completed: return "completed";
    case ConnOutcome::refused: return "refused";
    case ConnOutcome::protocol_error: return "protocol_error";
    case ConnOutcome::timeout: return "timeout";
    }
    return "unknown";
}

// ---- invariants ------------------------------------------------------

static bool valid_session_id(const std::string& s) { return UlidGenerator::is_valid(s); }

// Returns the offending field name, or empty when the envelope is valid.
std::string validate_event(const EventEnvelope& e) {
    if (!UlidGenerator::is_valid(e.id)) return "id";
    if (!is_token(e.sensor)) return "sensor";
    if (e.ts_ms < 0) return "ts";

    auto body_kind_matches = [&]() -> bool {
        switch (e.kind) {
        case EventKind::connection: return std::holds_alternative<ConnectionEvent>(e.body);
        case EventKind::login_attempt: return std::holds_alternative<LoginAttempt>(e.body);
        case EventKind::session_start:
        case EventKind::session_end: return std::holds_alternative<ShellSession>(e.body);
        case EventKind::session_event: return std::holds_alternative<SessionEvent>(e.body);
        case EventKind::download: return std::holds_alternative<DownloadRecord>(e.body);
        case EventKind::sensor_error: return std::holds_alternative<SensorError>(e.body);
        }
        return false;
    };
    if (!body_kind_matches()) return "kind";

    if (auto* c = std::get_if<ConnectionEvent>(&e.body)) {
        if (!parse_ipv4(c->remote_ip)) return "body.remote_ip";
        if (c->remote_port == 0) return "body.remote_port";
        if (c->local_port == 0) return "body.local_port";
        if (!is_token(c->service_label)) return "body.service_label";
        auto raw = hex_decode(c->payload_hex);
        if (!raw) return "body.payload_hex";
        // payload is a capped prefix of the contact, so it can never account
        // for more than the observed byte count
        if (raw->size() > c->bytes_captured) return "body.bytes_captured";
    } else if (auto* l = std::get_if<LoginAttempt>(&e.body)) {
        if (!parse_ipv4(l->remote_ip)) return "body.remote_ip";
        if (l->username.size() > 256) return "body.username";
        if (l->password.size() > 256) return "body.password";
        if (l->client_banner.size() > 256) return "body.client_banner";
    } else if (auto* s = std::get_if<ShellSession>(&e.body)) {
        if (!valid_session_id(s->session_id)) return "body.session_id";
        if (!parse_ipv4(s->remote_ip)) return "body.remote_ip";
        if (s->username.size() > 256) return "body.username";
        if (s->password.size() > 256) return "body.password";
        if (s->ended_at_ms < s->started_at_ms) return "body.ended_at";
    } else if (auto* ev = std::get_if<SessionEvent>(&e.body)) {
        if (!valid_session_id(ev->session_id)) return "body.session_id";
        size_t want = 0;
        switch (ev->kind) {
        case SessionEventKind::command: want = 0; break;
        case SessionEventKind::output: want = 1; break;
        case SessionEventKind::download: want = 2; break;
        case SessionEventKind::resize: want = 3; break;
        case SessionEventKind::disconnect: want = 4; break;
        }
        if (ev->payload.index() != want) return "body.payload";
        if (auto* d = std::get_if<DownloadPayload>(&ev->payload)) {
            if (!is_sha256_hex(d->sha256)) return "body.payload.sha256";
        }
    } else if (auto* d = std::get_if<DownloadRecord>(&e.body)) {
        if (!parse_ipv4(d->remote_ip)) return "body.remote_ip";
        if (!valid_session_id(d->session_id)) return "body.session_id";
        if (!is_sha256_hex(d->sha256)) return "body.sha256";
    } else if (std::get_if<SensorError>(&e.body)) {
        // free-form
    }
    return "";
}

// ---- encode ----------------------------------------------------------

static json payload_to_json(const SessionPayload& p) {
    json j = json::object();
    if (auto* c = std::get_if<CommandPayload>(&p)) {
        j["line"] = bytes_to_json_string(c->line);
    } else if (auto* o = std::get_if<OutputPayload>(&p)) {
        j["byte_count"] = o->byte_count;
    } else if (auto* d = std::get_if<DownloadPayload>(&p)) {
        j["sha256"] = d->sha256;
        j["url"] = d->url;
        j["size_bytes"] = d->size_bytes;
        j["truncated"] = d->truncated;
    } else if (auto* r = std::get_if<ResizePayload>(&p)) {
        j["cols"] = r->cols;
        j["rows"] = r->rows;
    }
    return j;
}

static json body_to_json(const EventEnvelope& e) {
    json j = json::object();
    if (auto* c = std::get_if<ConnectionEvent>(&e.body)) {
        j["remote_ip"] = c->remote_ip;
        j["remote_port"] = c->remote_port;
        j["local_port"] = c->local_port;
        j["transport"] = to_string(c->transport);
        j["service_label"] = c->service_label;
        j["outcome"] = to_string(c->outcome);
        j["bytes_captured"] = c->bytes_captured;
        j["payload_hex"] = c->payload_hex;
    } else if (auto* l = std::get_if<LoginAttempt>(&e.body)) {
        j["remote_ip"] = l->remote_ip;
        j["username"] = bytes_to_json_string(l->username);
        j["password"] = bytes_to_json_string(l->password);
        j["client_banner"] = bytes_to_json_string(l->client_banner);
        j["success"] = l->success;
    } else if (auto* s = std::get_if<ShellSession>(&e.body)) {
        j["session_id"] = s->session_id;
        j["remote_ip"] = s->remote_ip;
        j["username"] = bytes_to_json_string(s->username);
        j["password"] = bytes_to_json_string(s->password);
        j["started_at"] = format_ts_ms(s->started_at_ms);
        j["ended_at"] = format_ts_ms(s->ended_at_ms);
        j["tty_ref"] = s->tty_ref;
        j["event_count"] = s->event_count;
    } else if (auto* ev = std::get_if<SessionEvent>(&e.body)) {
        j["session_id"] = ev->session_id;
        j["offset_ms"] = ev->offset_ms;
        j["kind"] = to_string(ev->kind);
        j["payload"] = payload_to_json(ev->payload);
    } else if (auto* d = std::get_if<DownloadRecord>(&e.body)) {
        j["remote_ip"] = d->remote_ip;
        j["session_id"] = d->session_id;
        j["sha256"] = d->sha256;
        j["url"] = d->url;
        j["size_bytes"] = d->size_bytes;
        j["truncated"] = d->truncated;
    } else if (auto* se = std::get_if<SensorError>(&e.body)) {
        j["message"] = se->message;
        j["detail"] = se->detail;
    }
    return j;
}

std::string encode_event(const EventEnvelope& e) {
    std::string bad = validate_event(e);
    if (!bad.empty()) throw std::invalid_argument("invalid envelope field: " + bad);
    json j = json::object();
    j["id"] = e.id;
    j["ts"] = format_ts_ms(e.ts_ms);
    j["sensor"] = e.sensor;
    j["kind"] = to_string(e.kind);
    j["body"] = body_to_json(e);
    return j.dump();
}

// ---- decode ----------------------------------------------------------

namespace {

struct FieldError {
    std::string field;
};

// well-typed but out of range (e.g. port 70000)
struct RangeError {
    std::string field;
};

const json* require(const json& obj, const char* key, const std::string& prefix) {
    auto it = obj.find(key);
    if (it == obj.end()) throw FieldError{prefix + key};
    return &*it;
}

std::string get_string(const json& obj, const char* key, const std::string& prefix) {
    const json* v = require(obj, key, prefix);
    if (!v->is_string()) throw FieldError{prefix + key};
    return v->get<std::string>();
}

std::string get_bytes(const json& obj, const char* key, const std::string& prefix) {
    auto decoded = bytes_from_json_string(get_string(obj, key, prefix));
    if (!decoded) throw FieldError{prefix + key};
    return *decoded;
}

uint64_t get_uint(const json& obj, const char* key, const std::string& prefix) {
    const json* v = require(obj, key, prefix);
    if (!v->is_number_unsigned()) throw FieldError{prefix + key};
    return v->get<uint64_t>();
}

bool get_bool(const json& obj, const char* key, const std::string& prefix) {
    const json* v = require(obj, key, prefix);
    if (!v->is_boolean()) throw FieldError{prefix + key};
    return v->get<bool>();
}

int64_t get_ts(const json& obj, const char* key, const std::string& prefix) {
    auto ms = parse_ts_ms(get_string(obj, key, prefix));
    if (!ms) throw FieldError{prefix + key};
    return *ms;
}

uint16_t get_port(const json& obj, const char* key, const std::string& prefix) {
    uint64_t v = get_uint(obj, key, prefix);
    if (v > 65535) throw RangeError{prefix + key};
    return static_cast<uint16_t>(v);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& prefix) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw FieldError{prefix + it.key()};
    }
}

EventBody parse_body(EventKind kind, const json& b) {
    if (!b.is_object()) throw FieldError{"body"};
    const std::string p = "body.";
    switch (kind) {
    case EventKind::connection: {
        check_keys(b,
                   {"remote_ip", "remote_port", "local_port", "transport", "service_label",
                    "outcome", "bytes_captured", "payload_hex"},
                   p);
        ConnectionEvent c;
        c.remote_ip = get_string(b, "remote_ip", p);
        c.remote_port = get_port(b, "remote_port", p);
        c.local_port = get_port(b, "local_port", p);
        std::string tr = get_string(b, "transport", p);
        if (tr == "tcp") c.transport = TransportKind::tcp;
        else if (tr == "udp") c.transport = TransportKind::udp;
        else throw FieldError{p + "transport"};
        c.service_label = get_string(b, "service_label", p);
        std::string oc = get_string(b, "outcome", p);
        if (oc == "completed") c.outcome = ConnOutcome::completed;
        else if (oc == "refused") c.outcome = ConnOutcome::refused;
        else if (oc == "protocol_error") c.outcome = ConnOutcome::protocol_error;
        else if (oc == "timeout") c.outcome = ConnOutcome::timeout;
        else throw FieldError{p + "outcome"};
        c.bytes_captured = get_uint(b, "bytes_captured", p);
        c.payload_hex = get_string(b, "payload_hex", p);
        return c;
    }
    case EventKind::login_attempt: {
        check_keys(b, {"remote_ip", "username", "password", "client_banner", "success"}, p);
        LoginAttempt l;
        l.remote_ip = get_string(b, "remote_ip", p);
        l.username = get_bytes(b, "username", p);
        l.password = get_bytes(b, "password", p);
        l.client_banner = get_bytes(b, "client_banner", p);
        l.success = get_bool(b, "success", p);
        return l;
    }
    case EventKind::session_start:
    case EventKind::session_end: {
        check_keys(b,
                   {"session_id", "remote_ip", "username", "password", "started_at", "ended_at",
                    "tty_ref", "event_count"},
                   p);
        ShellSession s;
        s.session_id = get_string(b, "session_id", p);
        s.remote_ip = get_string(b, "remote_ip", p);
        s.username = get_bytes(b, "username", p);
        s.password = get_bytes(b, "password", p);
        s.started_at_ms = get_ts(b, "started_at", p);
        s.ended_at_ms = get_ts(b, "ended_at", p);
        s.tty_ref = get_string(b, "tty_ref", p);
        s.event_count = get_uint(b, "event_count", p);
        return s;
    }
    case EventKind::session_event: {
        check_keys(b, {"session_id", "offset_ms", "kind", "payload"}, p);
        SessionEvent ev;
        ev.session_id = get_string(b, "session_id", p);
        ev.offset_ms = get_uint(b, "offset_ms", p);
        auto k = session_event_kind_from_string(get_string(b, "kind", p));
        if (!k) throw FieldError{p + "kind"};
        ev.kind = *k;
        const json* pj = require(b, "payload", p);
        if (!pj->is_object()) throw FieldError{p + "payload"};
        const std::string pp = "body.payload.";
        switch (*k) {
        case SessionEventKind::command: {
            check_keys(*pj, {"line"}, pp);
            ev.payload = CommandPayload{get_bytes(*pj, "line", pp)};
            break;
        }
        case SessionEventKind::output: {
            check_keys(*pj, {"byte_count"}, pp);
            ev.payload = OutputPayload{get_uint(*pj, "byte_count", pp)};
            break;
        }
        case SessionEventKind::download: {
            check_keys(*pj, {"sha256", "url", "size_bytes", "truncated"}, pp);
            DownloadPayload d;
            d.sha256 = get_string(*pj, "sha256", pp);
            d.url = get_string(*pj, "url", pp);
            d.size_bytes = get_uint(*pj, "size_bytes", pp);
            d.truncated = get_bool(*pj, "truncated", pp);
            ev.payload = d;
            break;
        }
        case SessionEventKind::resize: {
            check_keys(*pj, {"cols", "rows"}, pp);
            ResizePayload r;
            uint64_t cols = get_uint(*pj, "cols", pp);
            uint64_t rows = get_uint(*pj, "rows", pp);
            if (cols > 0xffffffffULL || rows > 0xffffffffULL) throw RangeError{pp + "cols"};
            r.cols = static_cast<uint32_t>(cols);
            r.rows = static_cast<uint32_t>(rows);
            ev.payload = r;
            break;
        }
        case SessionEventKind::disconnect: {
            check_keys(*pj, {}, pp);
            ev.payload = DisconnectPayload{};
            break;
        }
        }
        return ev;
    }
    case EventKind::download: {
        check_keys(b, {"remote_ip", "session_id", "sha256", "url", "size_bytes", "truncated"}, p);
        DownloadRecord d;
        d.remote_ip = get_string(b, "remote_ip", p);
        d.session_id = get_string(b, "session_id", p);
        d.sha256 = get_string(b, "sha256", p);
        d.url = get_string(b, "url", p);
        d.size_bytes = get_uint(b, "size_bytes", p);
        d.truncated = get_bool(b, "truncated", p);
        return d;
    }
    case EventKind::sensor_error: {
        check_keys(b, {"message", "detail"}, p);
        SensorError se;
        se.message = get_string(b, "message", p);
        se.detail = get_string(b, "detail", p);
        return se;
    }
    }
    throw FieldError{"kind"};
}

} // namespace

DecodeResult decode_event(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        return DecodeError{DecodeErrorKind::malformed_syntax, "line is not a JSON object"};
    try {
        check_keys(j, {"id", "ts", "sensor", "kind", "body"}, "");
        EventEnvelope e;
        e.id = get_string(j, "id", "");
        e.ts_ms = get_ts(j, "ts", "");
        e.sensor = get_string(j, "sensor", "");
        std::string kind_str = get_string(j, "kind", "");
        auto kind = event_kind_from_string(kind_str);
        if (!kind) return DecodeError{DecodeErrorKind::unknown_kind, "kind: " + kind_str};
        e.kind = *kind;
        e.body = parse_body(e.kind, *require(j, "body", ""));
        std::string bad = validate_event(e);
        if (!bad.empty()) return DecodeError{DecodeErrorKind::invariant_violation, bad};
        return e;
    } catch (const FieldError& fe) {
        return DecodeError{DecodeErrorKind::malformed_syntax, fe.field};
    } catch (const RangeError& re) {
        return DecodeError{DecodeErrorKind::invariant_violation, re.field};
    }
}

} // namespace honeykit
