#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "ridesim/calibration.hpp"
#include "ridesim/vehicle.hpp"

namespace ridesim::control {

/// Latest held value per sensor channel, already normalized and aligned.
struct SensorFrame {
    calibration::AlignedAngles orientation;
    double fsr_front = 0.0; // [0, 1]
    double fsr_rear = 0.0;  // [0, 1]
    double throttle = 0.0;  // [0, 1]

    /// Ticks since each channel last updated; empty when never updated.
    std::optional<std::uint64_t> imu_age;
    std::optional<std::uint64_t> fsr_age;
    std::optional<std::uint64_t> throttle_age;
};

/// steering > 0 turns counter-clockwise; velocity_cmd < 0 reverses.
struct ControlInput {
    double steering = 0.0;
    double velocity_cmd = 0.0;
    bool operator==(const ControlInput &) const = default;
};

/// Angle that maps to a full ±1 command, per source axis, plus the dead zone.
struct MappingParams {
    double yaw_full_scale = 45.0;
    double roll_full_scale = 20.0;
    double pitch_full_scale = 15.0;
    double dead_zone = calibration::kDefaultDeadZone;

    static MappingParams defaults_for(Vehicle v);
    /// Throws ConfigError unless every full scale is positive and finite.
    void validate() const;
    bool operator==(const MappingParams &) const = default;
};

ControlInput map_escooter(const SensorFrame &frame, const MappingParams &p);
ControlInput map_segway(const SensorFrame &frame, const MappingParams &p);
ControlInput map_unicycle(const SensorFrame &frame, const MappingParams &p);
ControlInput map_skateboard(const SensorFrame &frame, const MappingParams &p);

/// Dispatches to exactly one mapping. Throws NoVehicleSelected on empty.
ControlInput active_controller(std::optional<Vehicle> vehicle, const SensorFrame &frame,
                               const MappingParams &p);

/// The controller modules share this interface; the session holds exactly one.
class Controller {
public:
    virtual ~Controller() = default;
    virtual Vehicle vehicle() const = 0;
    virtual ControlInput map(const SensorFrame &frame) const = 0;
    /// Whether negative velocity commands are possible for this vehicle.
    virtual bool allows_reverse() const = 0;
};

std::unique_ptr<Controller> make_controller(Vehicle v, const MappingParams &p);

} // namespace ridesim::control
