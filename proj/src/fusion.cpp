#include "ridesim/fusion.hpp"

#include <cmath>

#include "ridesim/angles.hpp"
#include "ridesim/errors.hpp"

namespace ridesim::fusion {

OrientationEstimate estimate_static(const Vec3 &accel, const Vec3 &mag) {
    const auto [ax, ay, az] = accel;
    const double norm = std::sqrt(ax * ax + ay * ay + az * az);
    if (!(norm >= kFreeFallFraction * kGravity)) {
        throw DegenerateInput("accelerometer magnitude too small to resolve tilt");
    }

    const double roll = std::atan2(ay, az);
    const double pitch = std::atan2(-ax, std::sqrt(ay * ay + az * az));

    // Rotate the field back into the level frame before taking the heading.
    const double sr = std::sin(roll), cr = std::cos(roll);
    const double sp = std::sin(pitch), cp = std::cos(pitch);
    const auto [mx, my, mz] = mag;
    const double level_x = mx * cp + my * sp * sr + mz * sp * cr;
    const double level_y = my * cr - mz * sr;
    const double yaw = std::atan2(-level_y, level_x);

    OrientationEstimate out;
    out.pitch_deg = rad_to_deg(pitch);
    out.roll_deg = rad_to_deg(roll);
    out.yaw_deg = wrap_deg(rad_to_deg(yaw));
    out.source = Source::computed;
    return out;
}

OrientationFilter::OrientationFilter(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ConfigError("filter alpha must lie in (0, 1]");
    }
}

OrientationEstimate OrientationFilter::smooth(const OrientationEstimate &obs) {
    if (!last_) {
        last_ = obs;
        return obs;
    }
    const OrientationEstimate &prev = *last_;
    OrientationEstimate out;
    out.pitch_deg = alpha_ * obs.pitch_deg + (1.0 - alpha_) * prev.pitch_deg;
    out.roll_deg = wrap_deg(prev.roll_deg + alpha_ * arc_delta_deg(prev.roll_deg, obs.roll_deg));
    out.yaw_deg = wrap_deg(prev.yaw_deg + alpha_ * arc_delta_deg(prev.yaw_deg, obs.yaw_deg));
    out.source = obs.source;
    last_ = out;
    return out;
}

} // namespace ridesim::fusion
