#include "ridesim/control.hpp"

#include <algorithm>
#include <cmath>

#include "ridesim/errors.hpp"

namespace ridesim::control {

namespace {

using calibration::dead_zone;

double axis_command(double angle, double full_scale, double t) {
    return dead_zone(std::clamp(angle / full_scale, -1.0, 1.0), t);
}

template <ControlInput (*Map)(const SensorFrame &, const MappingParams &), Vehicle V, bool Reverse>
class MappedController final : public Controller {
public:
    explicit MappedController(const MappingParams &p) : params_(p) {}
    Vehicle vehicle() const override { return V; }
    ControlInput map(const SensorFrame &frame) const override { return Map(frame, params_); }
    bool allows_reverse() const override { return Reverse; }

private:
    MappingParams params_;
};

} // namespace

MappingParams MappingParams::defaults_for(Vehicle v) {
    MappingParams p;
    switch (v) {
    case Vehicle::escooter:
        p.yaw_full_scale = 45.0;
        break;
    case Vehicle::segway:
        p.roll_full_scale = 20.0;
        break;
    case Vehicle::unicycle:
        p.pitch_full_scale = 15.0;
        p.yaw_full_scale = 30.0;
        break;
    case Vehicle::skateboard:
        p.pitch_full_scale = 15.0;
        p.roll_full_scale = 15.0;
        break;
    }
    return p;
}

void MappingParams::validate() const {
    for (double fs : {yaw_full_scale, roll_full_scale, pitch_full_scale}) {
        if (!(std::isfinite(fs) && fs > 0.0)) {
            throw ConfigError("mapping full-scale angles must be positive");
        }
    }
    if (!(dead_zone >= 0.0 && dead_zone < 0.5)) {
        throw ConfigError("dead zone must lie in [0, 0.5)");
    }
}

// Handlebar yaw steers, the thumb throttle is one-sided.
ControlInput map_escooter(const SensorFrame &frame, const MappingParams &p) {
    return {axis_command(frame.orientation.yaw, p.yaw_full_scale, p.dead_zone),
            std::clamp(frame.throttle, 0.0, 1.0)};
}

// Handlebar roll steers; front-heavy stance drives forward, rear-heavy backward.
ControlInput map_segway(const SensorFrame &frame, const MappingParams &p) {
    const double balance = std::clamp(frame.fsr_front - frame.fsr_rear, -1.0, 1.0);
    return {axis_command(frame.orientation.roll, p.roll_full_scale, p.dead_zone),
            dead_zone(balance, p.dead_zone)};
}

ControlInput map_unicycle(const SensorFrame &frame, const MappingParams &p) {
    return {axis_command(frame.orientation.yaw, p.yaw_full_scale, p.dead_zone),
            axis_command(frame.orientation.pitch, p.pitch_full_scale, p.dead_zone)};
}

ControlInput map_skateboard(const SensorFrame &frame, const MappingParams &p) {
    return {axis_command(frame.orientation.roll, p.roll_full_scale, p.dead_zone),
            axis_command(frame.orientation.pitch, p.pitch_full_scale, p.dead_zone)};
}

ControlInput active_controller(std::optional<Vehicle> vehicle, const SensorFrame &frame,
                               const MappingParams &p) {
    if (!vehicle) {
        throw NoVehicleSelected("no vehicle selected");
    }
    switch (*vehicle) {
    case Vehicle::escooter: return map_escooter(frame, p);
    case Vehicle::segway: return map_segway(frame, p);
    case Vehicle::unicycle: return map_unicycle(frame, p);
    case Vehicle::skateboard: return map_skateboard(frame, p);
    }
    throw NoVehicleSelected("invalid vehicle");
}

std::unique_ptr<Controller> make_controller(Vehicle v, const MappingParams &p) {
    switch (v) {
    case Vehicle::escooter:
        return std::make_unique<MappedController<map_escooter, Vehicle::escooter, false>>(p);
    case Vehicle::segway:
        return std::make_unique<MappedController<map_segway, Vehicle::segway, true>>(p);
    case Vehicle::unicycle:
        return std::make_unique<MappedController<map_unicycle, Vehicle::unicycle, true>>(p);
    case Vehicle::skateboard:
        return std::make_unique<MappedController<map_skateboard, Vehicle::skateboard, true>>(p);
    }
    throw NoVehicleSelected("invalid vehicle");
}

} // namespace ridesim::control
