#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ridesim {

enum class Vehicle { escooter, segway, unicycle, skateboard };

inline constexpr std::array<Vehicle, 4> kAllVehicles = {
    Vehicle::escooter, Vehicle::segway, Vehicle::unicycle, Vehicle::skateboard};

constexpr std::string_view to_string(Vehicle v) {
    switch (v) {
    case Vehicle::escooter: return "escooter";
    case Vehicle::segway: return "segway";
    case Vehicle::unicycle: return "unicycle";
    case Vehicle::skateboard: return "skateboard";
    }
    return "?";
}

constexpr std::optional<Vehicle> vehicle_from_string(std::string_view s) {
    for (Vehicle v : kAllVehicles) {
        if (to_string(v) == s) {
            return v;
        }
    }
    return std::nullopt;
}

} // namespace ridesim
