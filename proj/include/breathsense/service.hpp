#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "breathsense/session_metrics.hpp"

namespace breathsense {

struct ServiceConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks an ephemeral port
    std::string log_dir = "sessions";
    std::size_t subscriber_queue = 1024;  // events buffered per WebSocket client
    double compliance_threshold = 0.7;
};

struct SessionInfo {
    std::string session_id;
    std::string started_at;  // ISO-8601 UTC
    std::string log_path;
};

/// HTTP + WebSocket front end for a live session.
///
///   GET  /health          {"status":"ok","models_loaded":bool}
///   GET  /session         current session state and live metrics
///   POST /session/start   optional exercise script body -> {"session_id",...}
///   POST /session/stop    final metrics
///   WS   /stream          one BreathEvent JSON text message per event
///
/// publish() may be called from any single producer thread; it never waits
/// on network I/O.
class SessionService {
public:
    explicit SessionService(ServiceConfig cfg);
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// Bind and start serving on a background thread. Throws PortInUse.
    void start();
    /// Close every connection and join the I/O thread. Idempotent.
    void stop();

    std::uint16_t port() const noexcept;

    void set_models_loaded(bool loaded);

    /// Log the event to the active session (if any) and fan it out.
    void publish(const BreathEvent& ev);

    /// Throws SessionAlreadyActive.
    SessionInfo start_session(std::optional<ExerciseScript> script = std::nullopt);
    /// Flushes the JSONL log (metrics as its final line). Throws NoActiveSession.
    SessionMetrics stop_session();
    std::optional<SessionInfo> active_session() const;

    std::size_t subscriber_count() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace breathsense
