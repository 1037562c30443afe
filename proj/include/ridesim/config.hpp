#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "ridesim/calibration.hpp"
#include "ridesim/control.hpp"
#include "ridesim/course.hpp"
#include "ridesim/dynamics.hpp"
#include "ridesim/vehicle.hpp"

namespace ridesim {

inline constexpr const char *kEngineVersion = "1.0.0";

/// Kinematic limits and mapping gains for one vehicle. The dead zone lives in
/// the calibration profile.
struct VehicleConfig {
    dynamics::VehicleParams dynamics;
    control::MappingParams mapping;
    bool operator==(const VehicleConfig &) const = default;
};

struct SessionConfig {
    double tick_rate = 100.0;             // Hz
    std::uint64_t stale_threshold = 50;   // ticks
    double filter_alpha = 0.2;
    std::uint64_t training_ticks = 0;
    std::optional<Vehicle> vehicle;
    scenario::CourseSpec course;
    std::map<Vehicle, VehicleConfig> vehicles;
    calibration::CalibrationProfile calibration;

    // Deployment settings; not part of the effective configuration.
    std::string listen = "127.0.0.1:9750";

    static SessionConfig defaults();

    double dt() const { return 1.0 / tick_rate; }
    const VehicleConfig &vehicle_config(Vehicle v) const { return vehicles.at(v); }
    /// Mapping gains for `v` with the profile's dead zone applied.
    control::MappingParams mapping_for(Vehicle v) const;

    /// Throws ConfigError (or InvalidBounds for calibration bounds).
    void validate() const;
};

/// Overlays a (possibly partial) config document. Unknown keys and wrongly
/// typed values throw ConfigError.
void apply_config_json(SessionConfig &cfg, const nlohmann::json &doc);

/// Every setting that influences simulation results, fully populated, in the
/// same layout apply_config_json accepts.
nlohmann::json effective_json(const SessionConfig &cfg);

/// FNV-1a over the canonical dump of effective_json, as 16 hex digits.
std::string config_hash(const SessionConfig &cfg);

nlohmann::json profile_to_json(const calibration::CalibrationProfile &p);
/// Overlays `doc` onto `p`; throws ConfigError.
void apply_profile_json(calibration::CalibrationProfile &p, const nlohmann::json &doc);

/// Reads a JSON document; IoFailure when missing, ConfigError when unparsable.
nlohmann::json read_json_file(const std::string &path);
void write_json_file(const std::string &path, const nlohmann::json &doc);

} // namespace ridesim
