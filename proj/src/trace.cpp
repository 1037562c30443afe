#include "ridesim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "ridesim/angles.hpp"
#include "ridesim/errors.hpp"
#include "ridesim/session.hpp"
#include "ridesim/telemetry.hpp"

namespace ridesim::trace {

using nlohmann::json;
using nlohmann::ordered_json;

ScriptedTrace parse_trace(std::istream &in) {
    ScriptedTrace out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const std::string where = "trace line " + std::to_string(lineno) + ": ";
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || j.size() != 2 || !j.contains("tick") || !j.contains("msg")) {
            throw TraceParseError(where + "expected {\"tick\":N,\"msg\":{...}}");
        }
        if (!j["tick"].is_number_unsigned()) {
            throw TraceParseError(where + "tick must be an unsigned integer");
        }
        TraceEntry e;
        e.tick = j["tick"].get<std::uint64_t>();
        if (e.tick == 0) {
            throw TraceParseError(where + "ticks start at 1");
        }
        if (!out.empty() && e.tick < out.back().tick) {
            throw TraceParseError(where + "tick " + std::to_string(e.tick) + " goes backwards");
        }
        try {
            e.msg = wire::decode(j["msg"].dump());
        } catch (const Error &err) {
            throw TraceParseError(where + err.what());
        }
        out.push_back(std::move(e));
    }
    return out;
}

ScriptedTrace read_trace(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoFailure("cannot open trace file " + path);
    }
    return parse_trace(in);
}

std::string format_entry(const TraceEntry &e) {
    return "{\"tick\":" + std::to_string(e.tick) + ",\"msg\":" + wire::encode_object(e.msg) + "}";
}

void write_trace(std::ostream &out, const ScriptedTrace &trace) {
    for (const TraceEntry &e : trace) {
        out << format_entry(e) << '\n';
    }
}

void write_trace_file(const std::string &path, const ScriptedTrace &trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoFailure("cannot write trace file " + path);
    }
    write_trace(out, trace);
    if (!out) {
        throw IoFailure("write failed for " + path);
    }
}

ScriptSummary run_script(const ScriptedTrace &trace, const SessionConfig &cfg, std::optional<std::uint64_t> max_ticks,
                         telemetry::LogWriter *log) {
    const std::uint64_t limit = max_ticks ? *max_ticks : (trace.empty() ? 0 : trace.back().tick) + kDefaultTailTicks;

    Session session(cfg, nullptr, log);
    auto next = trace.begin();
    while (session.tick_count() < limit) {
        const std::uint64_t t = session.tick_count() + 1;
        for (; next != trace.end() && next->tick <= t; ++next) {
            session.ingest(next->msg);
        }
        session.tick();
        if (session.trial().terminal()) {
            break;
        }
    }

    ScriptSummary s;
    const scenario::TrialStatus &trial = session.trial();
    s.phase = trial.phase;
    s.coins_collected = trial.coins_collected;
    s.coins_total = trial.coins_total;
    if (trial.phase == scenario::TrialPhase::complete && trial.end_tick) {
        s.duration_ticks = *trial.end_tick - trial.start_tick;
    }
    s.ticks_run = session.tick_count();
    s.collisions = session.collisions();
    s.respawns = session.respawns();
    s.stale_drops = session.stale_drops();
    s.final_state = session.vehicle_state();
    return s;
}

ordered_json summary_json(const ScriptSummary &s) {
    ordered_json j;
    j["phase"] = scenario::to_string(s.phase);
    j["complete"] = s.complete();
    j["coins_collected"] = s.coins_collected;
    j["coins_total"] = s.coins_total;
    j["duration_ticks"] = s.duration_ticks ? ordered_json(*s.duration_ticks) : ordered_json(nullptr);
    j["ticks_run"] = s.ticks_run;
    j["collisions"] = s.collisions;
    j["respawns"] = s.respawns;
    j["stale_drops"] = s.stale_drops;
    j["final"] = {{"x", s.final_state.x},
                  {"y", s.final_state.y},
                  {"heading", s.final_state.heading},
                  {"speed", s.final_state.speed}};
    return j;
}

namespace {

// Pre-image of dead_zone: the smallest |x| that yields `y`.
double undo_dead_zone(double y, double t) {
    y = std::clamp(y, -1.0, 1.0);
    if (y == 0.0) {
        return 0.0;
    }
    return std::copysign(std::abs(y) * (1.0 - t) + t, y);
}

std::uint32_t adc_between(double fraction, std::uint32_t lo, std::uint32_t hi) {
    const double raw = static_cast<double>(lo) + std::clamp(fraction, 0.0, 1.0) * (static_cast<double>(hi) - lo);
    return static_cast<std::uint32_t>(std::lround(raw));
}

} // namespace

std::vector<wire::Payload> sensor_payloads_for(Vehicle v, double steering, double velocity_cmd,
                                               const SessionConfig &cfg) {
    const control::MappingParams mp = cfg.mapping_for(v);
    const calibration::CalibrationProfile &prof = cfg.calibration;
    const double s = undo_dead_zone(steering, mp.dead_zone);

    // Desired aligned angles, then back through the signed permutation.
    std::array<double, 3> aligned{0.0, 0.0, 0.0}; // pitch, roll, yaw
    std::optional<wire::Throttle> throttle;
    std::optional<wire::Fsr> fsr;
    switch (v) {
    case Vehicle::escooter:
        aligned[2] = s * mp.yaw_full_scale;
        throttle = wire::Throttle{adc_between(velocity_cmd, prof.throttle_min, prof.throttle_max)};
        break;
    case Vehicle::segway: {
        aligned[1] = s * mp.roll_full_scale;
        const double balance = undo_dead_zone(velocity_cmd, mp.dead_zone);
        wire::Fsr f;
        f.front = adc_between(std::max(balance, 0.0), prof.fsr_baseline.front, prof.fsr_max.front);
        f.rear = adc_between(std::max(-balance, 0.0), prof.fsr_baseline.rear, prof.fsr_max.rear);
        fsr = f;
        break;
    }
    case Vehicle::unicycle:
        aligned[2] = s * mp.yaw_full_scale;
        aligned[0] = undo_dead_zone(velocity_cmd, mp.dead_zone) * mp.pitch_full_scale;
        break;
    case Vehicle::skateboard:
        aligned[1] = s * mp.roll_full_scale;
        aligned[0] = undo_dead_zone(velocity_cmd, mp.dead_zone) * mp.pitch_full_scale;
        break;
    }

    const calibration::ImuAlignment al = prof.alignment_for(v);
    std::array<double, 3> raw{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < 3; ++i) {
        const calibration::AxisSource &src = al.axis_map.slots[i];
        raw[static_cast<std::size_t>(src.from)] = src.sign * aligned[i];
    }
    raw[0] += al.imu_zero.pitch;
    raw[1] += al.imu_zero.roll;
    raw[2] += al.imu_zero.yaw;

    std::vector<wire::Payload> out;
    out.push_back(wire::Imu{wire::EulerAngles{wrap_deg(raw[0]), wrap_deg(raw[1]), wrap_deg(raw[2])}});
    if (throttle) {
        out.push_back(*throttle);
    }
    if (fsr) {
        out.push_back(*fsr);
    }
    return out;
}

namespace {

class Recorder {
public:
    Recorder(ScriptedTrace &out, std::string sender, double tick_ms)
        : out_(out), sender_(std::move(sender)), tick_ms_(tick_ms) {}

    const wire::WireMessage &add(std::uint64_t tick, wire::Payload p) {
        wire::WireMessage m;
        m.sender = sender_;
        m.seq = ++seq_;
        m.t_ms = static_cast<std::uint64_t>(std::llround(static_cast<double>(tick - 1) * tick_ms_));
        m.payload = std::move(p);
        out_.push_back({tick, std::move(m)});
        return out_.back().msg;
    }

private:
    ScriptedTrace &out_;
    std::string sender_;
    double tick_ms_;
    std::uint64_t seq_ = 0;
};

} // namespace

ScriptedTrace author_centerline_trace(Vehicle v, const SessionConfig &cfg, const AuthorOptions &opt) {
    ScriptedTrace trace;
    Recorder rec(trace, opt.sender, 1000.0 * cfg.dt());
    Session session(cfg);
    const scenario::CourseGeometry &geo = session.course().geometry;
    const double omega_max = cfg.vehicle_config(v).dynamics.omega_max;
    const std::uint64_t every = std::max<std::uint64_t>(opt.send_every, 1);

    session.ingest(rec.add(1, wire::Hello{}));
    session.ingest(rec.add(1, wire::SetVehicle{v}));

    for (std::uint64_t t = 1; t <= opt.max_ticks; ++t) {
        if ((t - 1) % every == 0) {
            const dynamics::VehicleState &s = session.vehicle_state();
            const scenario::Projection here = geo.project({s.x, s.y});
            // Aim past the end along the last segment so the finish line is crossed.
            const double aim = here.arc + opt.lookahead_m;
            scenario::Point target = geo.point_at(aim);
            if (aim > geo.total_length()) {
                const double h = geo.heading_at(geo.total_length());
                const double extra = aim - geo.total_length();
                target = {target.x + extra * std::cos(h), target.y + extra * std::sin(h)};
            }
            const double dx = target.x - s.x;
            const double dy = target.y - s.y;
            const double bearing = wrap_rad(std::atan2(dy, dx) - s.heading);
            const double dist = std::max(std::hypot(dx, dy), 1e-6);
            const double curvature = 2.0 * std::sin(bearing) / dist;
            const double speed = std::max(std::abs(s.speed), 0.5);
            const double steering = std::clamp(curvature * speed / omega_max, -1.0, 1.0);
            for (wire::Payload &p : sensor_payloads_for(v, steering, opt.velocity_cmd, cfg)) {
                session.ingest(rec.add(t, std::move(p)));
            }
        }
        session.tick();
        if (session.trial().terminal()) {
            break;
        }
    }
    return trace;
}

ScriptedTrace author_offcourse_trace(Vehicle v, const SessionConfig &cfg, std::uint64_t hold_ticks,
                                     double velocity_cmd, const std::string &sender) {
    ScriptedTrace trace;
    Recorder rec(trace, sender, 1000.0 * cfg.dt());
    rec.add(1, wire::Hello{});
    rec.add(1, wire::SetVehicle{v});
    for (std::uint64_t t = 1; t <= hold_ticks; t += 2) {
        for (wire::Payload &p : sensor_payloads_for(v, 1.0, velocity_cmd, cfg)) {
            rec.add(t, std::move(p));
        }
    }
    return trace;
}

} // namespace ridesim::trace
