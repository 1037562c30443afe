#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include <json.hpp>

#include "ridesim/config.hpp"
#include "ridesim/session.hpp"
#include "ridesim/transport.hpp"

namespace ridesim {

namespace telemetry {
class LogWriter;
}

struct LiveSummary {
    std::uint64_t ticks = 0;
    std::uint64_t frames_in = 0;
    std::uint64_t frames_rejected = 0;
    std::uint64_t late_ticks = 0; // ticks that started more than one period late
    scenario::TrialStatus trial;
};

nlohmann::ordered_json summary_json(const LiveSummary &s);

/// Drives a Session from a TransportServer at tick_rate, paced against the
/// wall clock at start + k * period so that drift does not accumulate.
class LiveRunner {
public:
    LiveRunner(SessionConfig cfg, transport::TransportServer &server, telemetry::LogWriter *log = nullptr);

    /// Runs until `stop` becomes true or `max_ticks` ticks have run. On exit
    /// the trial is aborted if still open and the log is flushed.
    LiveSummary run(const std::atomic<bool> &stop, std::optional<std::uint64_t> max_ticks = std::nullopt);

    Session &session() { return session_; }

private:
    void pump(LiveSummary &summary);

    transport::TransportServer &server_;
    telemetry::LogWriter *log_;
    Session session_;
};

} // namespace ridesim
