#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridesim/config.hpp"
#include "ridesim/wire.hpp"

namespace ridesim {
namespace telemetry {
class LogWriter;
}
} // namespace ridesim

namespace ridesim::trace {

/// A message to be ingested just before tick `tick` runs.
struct TraceEntry {
    std::uint64_t tick = 1;
    wire::WireMessage msg;
    bool operator==(const TraceEntry &) const = default;
};

using ScriptedTrace = std::vector<TraceEntry>;

/// `{"tick":N,"msg":{...}}` per line. Blank lines are skipped. Throws
/// TraceParseError on bad JSON, an invalid message, tick 0 or decreasing ticks.
ScriptedTrace parse_trace(std::istream &in);
/// Throws IoFailure when the file cannot be opened.
ScriptedTrace read_trace(const std::string &path);

std::string format_entry(const TraceEntry &e);
void write_trace(std::ostream &out, const ScriptedTrace &trace);
void write_trace_file(const std::string &path, const ScriptedTrace &trace);

struct ScriptSummary {
    scenario::TrialPhase phase = scenario::TrialPhase::running;
    std::uint32_t coins_collected = 0;
    std::uint32_t coins_total = 0;
    std::optional<std::uint64_t> duration_ticks; // start to completion
    std::uint64_t ticks_run = 0;
    std::uint64_t collisions = 0;
    std::uint64_t respawns = 0;
    std::uint64_t stale_drops = 0;
    dynamics::VehicleState final_state;

    bool complete() const { return phase == scenario::TrialPhase::complete; }
};

/// Extra ticks granted after the last trace entry when no limit is given.
inline constexpr std::uint64_t kDefaultTailTicks = 1000;

/// Runs a fresh session with the trace as its only input, unpaced, until the
/// trial ends or `max_ticks` ticks have run.
ScriptSummary run_script(const ScriptedTrace &trace, const SessionConfig &cfg,
                         std::optional<std::uint64_t> max_ticks = std::nullopt,
                         telemetry::LogWriter *log = nullptr);

nlohmann::ordered_json summary_json(const ScriptSummary &s);

/// Sensor payloads that make `v`'s mapping produce (steering, velocity_cmd)
/// under `cfg`. Inverts dead zone, full scale, axis alignment and ADC bounds.
std::vector<wire::Payload> sensor_payloads_for(Vehicle v, double steering, double velocity_cmd,
                                               const SessionConfig &cfg);

struct AuthorOptions {
    double lookahead_m = 2.5;
    double velocity_cmd = 0.8;
    std::uint64_t send_every = 2; // ticks between sensor updates
    std::uint64_t max_ticks = 20000;
    std::string sender = "trace";
};

/// Closed-loop pure-pursuit rider driving the real session along the route
/// centerline of `cfg.course`. The recorded inputs replay to the same run.
ScriptedTrace author_centerline_trace(Vehicle v, const SessionConfig &cfg, const AuthorOptions &opt = {});

/// Full lock and steady throttle for `hold_ticks`, then silence.
ScriptedTrace author_offcourse_trace(Vehicle v, const SessionConfig &cfg, std::uint64_t hold_ticks = 600,
                                     double velocity_cmd = 0.6, const std::string &sender = "trace");

} // namespace ridesim::trace
