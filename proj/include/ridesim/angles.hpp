#pragma once

#include <cmath>
#include <numbers>

namespace ridesim {

inline constexpr double kGravity = 9.80665;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps degrees into (-180, 180].
inline double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) {
        w += 360.0;
    } else if (w > 180.0) {
        w -= 360.0;
    }
    return w;
}

/// Wraps radians into (-pi, pi].
inline double wrap_rad(double rad) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(rad, two_pi);
    if (w <= -std::numbers::pi) {
        w += two_pi;
    } else if (w > std::numbers::pi) {
        w -= two_pi;
    }
    return w;
}

/// Signed shortest arc from `from` to `to`, in degrees, within (-180, 180].
inline double arc_delta_deg(double from, double to) { return wrap_deg(to - from); }

} // namespace ridesim
