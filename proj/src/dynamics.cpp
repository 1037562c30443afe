#include "ridesim/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "ridesim/angles.hpp"
#include "ridesim/errors.hpp"

namespace ridesim::dynamics {

VehicleParams VehicleParams::defaults_for(Vehicle v) {
    VehicleParams p;
    switch (v) {
    case Vehicle::escooter: p.v_max = 6.0; break;
    case Vehicle::segway: p.v_max = 3.5; break;
    case Vehicle::unicycle: p.v_max = 5.0; break;
    case Vehicle::skateboard: p.v_max = 5.5; break;
    }
    return p;
}

void VehicleParams::validate() const {
    for (double v : {v_max, a_accel, a_decel, omega_max}) {
        if (!(std::isfinite(v) && v > 0.0)) {
            throw ConfigError("vehicle parameters must be positive and finite");
        }
    }
    if (a_decel < a_accel) {
        throw ConfigError("a_decel must be at least a_accel");
    }
}

namespace {

double slew_speed(double speed, double target, const VehicleParams &p, double dt) {
    const bool speeding_up = std::abs(target) > std::abs(speed) && (speed == 0.0 || (speed > 0.0) == (target > 0.0));
    const double limit = (speeding_up ? p.a_accel : p.a_decel) * dt;
    const double diff = target - speed;
    if (std::abs(diff) <= limit) {
        return target;
    }
    return speed + (diff > 0.0 ? limit : -limit);
}

} // namespace

VehicleState step(const VehicleState &s, const control::ControlInput &c, const VehicleParams &p, double dt) {
    VehicleState next = s;
    const double target = std::clamp(c.velocity_cmd, -1.0, 1.0) * p.v_max;
    next.speed = std::clamp(slew_speed(s.speed, target, p, dt), -p.v_max, p.v_max);
    next.heading = wrap_rad(s.heading + std::clamp(c.steering, -1.0, 1.0) * p.omega_max * dt);
    next.x = s.x + next.speed * dt * std::cos(next.heading);
    next.y = s.y + next.speed * dt * std::sin(next.heading);
    next.tick = s.tick + 1;
    return next;
}

} // namespace ridesim::dynamics
