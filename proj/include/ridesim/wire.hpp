#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>

#include "ridesim/vehicle.hpp"

namespace ridesim::wire {

/// Upper bound of the 12-bit ADC channels (FSR insoles, thumb throttle).
inline constexpr std::uint32_t kAdcMax = 4095;
inline constexpr std::size_t kMaxSenderLength = 64;

enum class Kind { hello, imu, fsr, throttle, set_vehicle, calibrate, state, event, ack, error };

std::string_view to_string(Kind k);

struct EulerAngles {
    double pitch = 0.0;
    double roll = 0.0;
    double yaw = 0.0;
    bool operator==(const EulerAngles &) const = default;
};

struct RawImu {
    double ax = 0.0, ay = 0.0, az = 0.0; // m/s^2
    double gx = 0.0, gy = 0.0, gz = 0.0; // deg/s
    double mx = 0.0, my = 0.0, mz = 0.0; // unit-free
    bool operator==(const RawImu &) const = default;
};

struct Hello {
    bool operator==(const Hello &) const = default;
};

/// Either onboard-fused angles (mode "euler") or a raw 9-DoF sample (mode "raw").
struct Imu {
    std::variant<EulerAngles, RawImu> data;
    bool operator==(const Imu &) const = default;
};

struct Fsr {
    std::uint32_t front = 0;
    std::uint32_t rear = 0;
    bool operator==(const Fsr &) const = default;
};

struct Throttle {
    std::uint32_t raw = 0;
    bool operator==(const Throttle &) const = default;
};

struct SetVehicle {
    Vehicle vehicle = Vehicle::escooter;
    bool operator==(const SetVehicle &) const = default;
};

enum class CalibrationPhase { fsr_baseline_begin, fsr_baseline_end, fsr_max_begin, fsr_max_end, imu_zero };

std::string_view to_string(CalibrationPhase p);

struct Calibrate {
    CalibrationPhase phase = CalibrationPhase::imu_zero;
    bool operator==(const Calibrate &) const = default;
};

struct State {
    std::uint64_t tick = 0;
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double speed = 0.0;
    double steering_cmd = 0.0;
    double velocity_cmd = 0.0;
    std::uint32_t coins_collected = 0;
    std::uint32_t coins_total = 0;
    bool operator==(const State &) const = default;
};

enum class EventName { coin, collision, respawn, trial_complete, stale_drop, calibrated };

std::string_view to_string(EventName e);

struct Event {
    std::uint64_t tick = 0;
    EventName name = EventName::coin;
    std::string detail;
    bool operator==(const Event &) const = default;
};

struct Ack {
    std::uint64_t ref_seq = 0;
    bool operator==(const Ack &) const = default;
};

struct ErrorReply {
    std::uint64_t ref_seq = 0;
    std::string message;
    bool operator==(const ErrorReply &) const = default;
};

/// Alternative order matches `Kind`.
using Payload =
    std::variant<Hello, Imu, Fsr, Throttle, SetVehicle, Calibrate, State, Event, Ack, ErrorReply>;

struct WireMessage {
    std::string sender;
    std::uint64_t seq = 0;
    std::uint64_t t_ms = 0;
    Payload payload;

    Kind kind() const { return static_cast<Kind>(payload.index()); }
    bool operator==(const WireMessage &) const = default;
};

/// Throws SchemaViolation if any field is out of contract.
void validate(const WireMessage &msg);

/// One newline-terminated JSON object with a fixed field order.
std::string encode(const WireMessage &msg);

/// Accepts a single frame, with or without its trailing newline.
/// Throws MalformedFrame, UnknownKind or SchemaViolation; nothing else.
WireMessage decode(std::string_view frame);

/// Same as encode without the trailing newline; used when embedding a message
/// inside a log or trace record.
std::string encode_object(const WireMessage &msg);

enum class Staleness { accept, drop };

/// Ordering gate for one sender: accept iff seq is newer than the last accepted.
inline Staleness staleness_check(std::uint64_t last_seq, const WireMessage &msg) {
    return msg.seq > last_seq ? Staleness::accept : Staleness::drop;
}

/// Per-sender table of highest accepted seq. A sender never seen before accepts
/// any seq, including 0.
class SeqTable {
public:
    /// Returns accept and records the seq, or drop and leaves the table unchanged.
    Staleness admit(const WireMessage &msg);
    std::uint64_t last(const std::string &sender) const;
    bool known(const std::string &sender) const { return last_.count(sender) != 0; }

private:
    std::unordered_map<std::string, std::uint64_t> last_;
};

} // namespace ridesim::wire
