#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridesim/calibration.hpp"
#include "ridesim/config.hpp"
#include "ridesim/control.hpp"
#include "ridesim/course.hpp"
#include "ridesim/dynamics.hpp"
#include "ridesim/fusion.hpp"
#include "ridesim/wire.hpp"

namespace ridesim {

namespace telemetry {
class LogWriter;
}

using ClientId = std::uint64_t;
inline constexpr ClientId kLocalClient = 0;
inline constexpr const char *kEngineSender = "engine";

/// Where the session sends replies and its broadcast stream. Implementations
/// must not block the caller.
class Outbox {
public:
    virtual ~Outbox() = default;
    virtual void send(ClientId client, const wire::WireMessage &msg) = 0;
    virtual void broadcast(const wire::WireMessage &msg) = 0;
};

enum class IngestResult { accepted, dropped, command_applied, rejected };

enum class CalibrationStage { idle, capturing_baseline, capturing_max };

struct TickReport {
    dynamics::VehicleState state;
    control::ControlInput control;
    wire::State state_msg;
    std::vector<wire::Event> events;
};

/// Payload of a state log record; identical fields to the outbound message.
nlohmann::ordered_json state_payload(const wire::State &s);

/// The receiver and tick loop. Every mutation happens through ingest() and
/// tick(), which must be called from a single thread. Messages ingested
/// between two ticks are applied to the upcoming tick; per channel only the
/// newest value is held.
class Session {
public:
    using Clock = std::chrono::steady_clock;

    /// Validates the configuration (ConfigError) and places the vehicle at the
    /// route start.
    explicit Session(SessionConfig cfg, Outbox *outbox = nullptr, telemetry::LogWriter *log = nullptr);
    ~Session();

    Session(const Session &) = delete;
    Session &operator=(const Session &) = delete;

    /// `received` is when the transport read the frame; defaults to now.
    IngestResult ingest(const wire::WireMessage &msg, ClientId origin = kLocalClient,
                        std::optional<Clock::time_point> received = std::nullopt);

    /// Replies to a frame the transport could not decode. Not logged.
    void reject_frame(ClientId origin, const std::string &reason);

    TickReport tick();

    /// Operator stop: marks the running trial aborted.
    void abort();

    const SessionConfig &config() const { return cfg_; }
    std::uint64_t tick_count() const { return tick_; }
    std::optional<Vehicle> active_vehicle() const;
    const dynamics::VehicleState &vehicle_state() const { return state_; }
    const scenario::TrialStatus &trial() const { return trial_; }
    const scenario::Course &course() const { return course_; }
    const calibration::CalibrationProfile &profile() const { return cfg_.calibration; }
    CalibrationStage calibration_stage() const { return cal_stage_; }
    /// Held frame as of the last ingest, before staleness is applied.
    const control::SensorFrame &frame() const { return frame_; }
    std::uint64_t collisions() const { return collisions_; }
    std::uint64_t respawns() const { return respawns_; }
    std::uint64_t stale_drops() const { return stale_drops_; }

private:
    struct PendingEvent {
        wire::Event event;
        double t_ms;
    };

    double now_ms() const;
    double to_ms(Clock::time_point t) const;
    wire::WireMessage outbound(wire::Payload payload);
    void reply(ClientId origin, wire::Payload payload);
    void queue_event(wire::EventName name, std::string detail);

    IngestResult apply(const wire::WireMessage &msg, ClientId origin);
    IngestResult apply_imu(const wire::Imu &imu, ClientId origin, std::uint64_t seq);
    IngestResult apply_set_vehicle(Vehicle v, ClientId origin, std::uint64_t seq);
    IngestResult apply_calibrate(wire::CalibrationPhase phase, ClientId origin, std::uint64_t seq);
    IngestResult reject(ClientId origin, std::uint64_t seq, const std::string &why);

    void select_vehicle(Vehicle v);
    void reset_trial();
    void realign();
    control::SensorFrame effective_frame() const;

    SessionConfig cfg_;
    Outbox *outbox_;
    telemetry::LogWriter *log_;
    Clock::time_point epoch_;

    scenario::Course course_;
    std::unique_ptr<control::Controller> controller_;
    dynamics::VehicleState state_;
    scenario::TrialStatus trial_;
    std::uint64_t tick_ = 0;

    wire::SeqTable seqs_;
    std::uint64_t out_seq_ = 0;

    fusion::OrientationFilter filter_;
    std::optional<fusion::OrientationEstimate> held_orientation_; // smoothed, sensor frame
    control::SensorFrame frame_;
    std::optional<std::uint64_t> imu_tick_, fsr_tick_, throttle_tick_;

    CalibrationStage cal_stage_ = CalibrationStage::idle;
    std::vector<wire::Fsr> cal_samples_;

    std::vector<PendingEvent> pending_events_;
    std::uint64_t collisions_ = 0;
    std::uint64_t respawns_ = 0;
    std::uint64_t stale_drops_ = 0;
};

} // namespace ridesim
