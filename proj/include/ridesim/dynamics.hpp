#pragma once

#include <cstdint>

#include "ridesim/control.hpp"
#include "ridesim/vehicle.hpp"

namespace ridesim::dynamics {

struct VehicleParams {
    double v_max = 6.0;     // m/s
    double a_accel = 2.0;   // m/s^2
    double a_decel = 3.0;   // m/s^2
    double omega_max = 1.2; // rad/s

    static VehicleParams defaults_for(Vehicle v);
    /// Throws ConfigError on non-positive values or a_decel < a_accel.
    void validate() const;
    bool operator==(const VehicleParams &) const = default;
};

/// Planar pose; heading in (-pi, pi] measured counter-clockwise from +x.
struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double speed = 0.0;
    std::uint64_t tick = 0;
    bool operator==(const VehicleState &) const = default;
};

/// One fixed-timestep kinematic update. Speed slews toward
/// velocity_cmd * v_max (accel limit when speeding up in the same direction,
/// decel limit otherwise), heading turns at steering * omega_max, and position
/// advances along the updated heading with the updated speed.
VehicleState step(const VehicleState &s, const control::ControlInput &c, const VehicleParams &p, double dt);

} // namespace ridesim::dynamics
