#include "ridesim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ridesim/errors.hpp"

namespace ridesim {

using nlohmann::json;

namespace {

/// Rejects keys outside `allowed` so typos in config files do not pass silently.
void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where) {
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (const auto &[key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

double get_number(const json &obj, const char *key, const std::string &where) {
    const json &v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(where + "." + key + " must be a number");
    }
    return v.get<double>();
}

std::uint64_t get_unsigned(const json &obj, const char *key, const std::string &where) {
    const json &v = obj.at(key);
    if (!v.is_number_unsigned()) {
        throw ConfigError(where + "." + key + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

template <typename T>
void maybe(const json &obj, const char *key, T &out, const std::string &where) {
    if (!obj.contains(key)) {
        return;
    }
    if constexpr (std::is_same_v<T, double>) {
        out = get_number(obj, key, where);
    } else if constexpr (std::is_same_v<T, int>) {
        const json &v = obj.at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(where + "." + key + " must be an integer");
        }
        out = v.get<int>();
    } else {
        const std::uint64_t v = get_unsigned(obj, key, where);
        if (v > std::numeric_limits<T>::max()) {
            throw ConfigError(where + "." + key + " out of range");
        }
        out = static_cast<T>(v);
    }
}

Vehicle parse_vehicle(const json &v, const std::string &where) {
    if (!v.is_string()) {
        throw ConfigError(where + " must be a vehicle name");
    }
    auto parsed = vehicle_from_string(v.get<std::string>());
    if (!parsed) {
        throw ConfigError("unknown vehicle '" + v.get<std::string>() +
                          "' (valid: escooter, segway, unicycle, skateboard)");
    }
    return *parsed;
}

void apply_vehicle_json(VehicleConfig &vc, const json &doc, const std::string &where) {
    check_keys(doc,
               {"v_max", "a_accel", "a_decel", "omega_max", "yaw_full_scale", "roll_full_scale",
                "pitch_full_scale"},
               where);
    maybe(doc, "v_max", vc.dynamics.v_max, where);
    maybe(doc, "a_accel", vc.dynamics.a_accel, where);
    maybe(doc, "a_decel", vc.dynamics.a_decel, where);
    maybe(doc, "omega_max", vc.dynamics.omega_max, where);
    maybe(doc, "yaw_full_scale", vc.mapping.yaw_full_scale, where);
    maybe(doc, "roll_full_scale", vc.mapping.roll_full_scale, where);
    maybe(doc, "pitch_full_scale", vc.mapping.pitch_full_scale, where);
}

void apply_course_json(scenario::CourseSpec &c, const json &doc) {
    const std::string where = "course";
    check_keys(doc, {"route", "spacing", "half_width", "pickup_radius", "total_length", "centerline"}, where);
    maybe(doc, "route", c.route, where);
    maybe(doc, "spacing", c.spacing, where);
    maybe(doc, "half_width", c.corridor_half_width, where);
    maybe(doc, "pickup_radius", c.pickup_radius, where);
    maybe(doc, "total_length", c.total_length, where);
    if (doc.contains("centerline")) {
        const json &pts = doc.at("centerline");
        if (!pts.is_array()) {
            throw ConfigError("course.centerline must be an array of [x, y] pairs");
        }
        c.custom_centerline.clear();
        for (const json &p : pts) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                throw ConfigError("course.centerline entries must be [x, y] number pairs");
            }
            c.custom_centerline.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    }
}

void apply_fsr_bounds(calibration::FsrBounds &b, const json &doc, const std::string &where) {
    check_keys(doc, {"front", "rear"}, where);
    maybe(doc, "front", b.front, where);
    maybe(doc, "rear", b.rear, where);
}

} // namespace

SessionConfig SessionConfig::defaults() {
    SessionConfig cfg;
    for (Vehicle v : kAllVehicles) {
        cfg.vehicles[v] = VehicleConfig{dynamics::VehicleParams::defaults_for(v), control::MappingParams::defaults_for(v)};
    }
    return cfg;
}

control::MappingParams SessionConfig::mapping_for(Vehicle v) const {
    control::MappingParams p = vehicle_config(v).mapping;
    p.dead_zone = calibration.dead_zone;
    return p;
}

void SessionConfig::validate() const {
    if (!(std::isfinite(tick_rate) && tick_rate > 0.0)) {
        throw ConfigError("tick rate must be positive");
    }
    if (stale_threshold < 1) {
        throw ConfigError("stale threshold must be at least one tick");
    }
    if (!(filter_alpha > 0.0 && filter_alpha <= 1.0)) {
        throw ConfigError("filter alpha must lie in (0, 1]");
    }
    for (Vehicle v : kAllVehicles) {
        if (!vehicles.count(v)) {
            throw ConfigError("missing parameters for vehicle " + std::string(to_string(v)));
        }
        vehicles.at(v).dynamics.validate();
        mapping_for(v).validate();
    }
    calibration.validate();
    if (course.custom_centerline.empty() && (course.route < 1 || course.route > scenario::kRouteCount)) {
        throw UnknownRoute("unknown route " + std::to_string(course.route) + " (valid: 1-4)");
    }
    // Geometry invariants are checked by constructing the course.
    (void)scenario::generate_course(course);
}

void apply_config_json(SessionConfig &cfg, const json &doc) {
    check_keys(doc, {"session", "vehicle", "course", "vehicles", "calibration"}, "config");
    if (doc.contains("session")) {
        const json &s = doc.at("session");
        check_keys(s, {"tick_rate", "stale_threshold", "filter_alpha", "training_ticks"}, "session");
        maybe(s, "tick_rate", cfg.tick_rate, "session");
        maybe(s, "stale_threshold", cfg.stale_threshold, "session");
        maybe(s, "filter_alpha", cfg.filter_alpha, "session");
        maybe(s, "training_ticks", cfg.training_ticks, "session");
    }
    if (doc.contains("vehicle")) {
        const json &v = doc.at("vehicle");
        cfg.vehicle = v.is_null() ? std::nullopt : std::optional<Vehicle>(parse_vehicle(v, "vehicle"));
    }
    if (doc.contains("course")) {
        apply_course_json(cfg.course, doc.at("course"));
    }
    if (doc.contains("vehicles")) {
        const json &vs = doc.at("vehicles");
        if (!vs.is_object()) {
            throw ConfigError("vehicles must be an object");
        }
        for (const auto &[name, body] : vs.items()) {
            Vehicle v = parse_vehicle(json(name), "vehicles key");
            apply_vehicle_json(cfg.vehicles[v], body, "vehicles." + name);
        }
    }
    if (doc.contains("calibration")) {
        apply_profile_json(cfg.calibration, doc.at("calibration"));
    }
}

json profile_to_json(const calibration::CalibrationProfile &p) {
    json j;
    j["fsr_baseline"] = {{"front", p.fsr_baseline.front}, {"rear", p.fsr_baseline.rear}};
    j["fsr_max"] = {{"front", p.fsr_max.front}, {"rear", p.fsr_max.rear}};
    j["throttle"] = {{"min", p.throttle_min}, {"max", p.throttle_max}};
    j["dead_zone"] = p.dead_zone;
    json align = json::object();
    for (const auto &[v, a] : p.alignment) {
        const auto axes = a.axis_map.to_strings();
        align[std::string(to_string(v))] = {
            {"imu_zero", {{"pitch", a.imu_zero.pitch}, {"roll", a.imu_zero.roll}, {"yaw", a.imu_zero.yaw}}},
            {"axis_map", json::array({axes[0], axes[1], axes[2]})},
        };
    }
    j["alignment"] = align;
    return j;
}

void apply_profile_json(calibration::CalibrationProfile &p, const json &doc) {
    check_keys(doc, {"fsr_baseline", "fsr_max", "throttle", "dead_zone", "alignment"}, "calibration");
    if (doc.contains("fsr_baseline")) {
        apply_fsr_bounds(p.fsr_baseline, doc.at("fsr_baseline"), "calibration.fsr_baseline");
    }
    if (doc.contains("fsr_max")) {
        apply_fsr_bounds(p.fsr_max, doc.at("fsr_max"), "calibration.fsr_max");
    }
    if (doc.contains("throttle")) {
        const json &t = doc.at("throttle");
        check_keys(t, {"min", "max"}, "calibration.throttle");
        maybe(t, "min", p.throttle_min, "calibration.throttle");
        maybe(t, "max", p.throttle_max, "calibration.throttle");
    }
    maybe(doc, "dead_zone", p.dead_zone, "calibration");
    if (doc.contains("alignment")) {
        const json &al = doc.at("alignment");
        if (!al.is_object()) {
            throw ConfigError("calibration.alignment must be an object");
        }
        for (const auto &[name, body] : al.items()) {
            const std::string where = "calibration.alignment." + name;
            Vehicle v = parse_vehicle(json(name), "calibration.alignment key");
            calibration::ImuAlignment &a = p.alignment[v];
            check_keys(body, {"imu_zero", "axis_map"}, where);
            if (body.contains("imu_zero")) {
                const json &z = body.at("imu_zero");
                check_keys(z, {"pitch", "roll", "yaw"}, where + ".imu_zero");
                maybe(z, "pitch", a.imu_zero.pitch, where + ".imu_zero");
                maybe(z, "roll", a.imu_zero.roll, where + ".imu_zero");
                maybe(z, "yaw", a.imu_zero.yaw, where + ".imu_zero");
            }
            if (body.contains("axis_map")) {
                const json &m = body.at("axis_map");
                if (!m.is_array() || m.size() != 3 || !m[0].is_string() || !m[1].is_string() || !m[2].is_string()) {
                    throw ConfigError(where + ".axis_map must be three strings like \"+pitch\"");
                }
                a.axis_map = calibration::AxisMap::parse(
                    {m[0].get<std::string>(), m[1].get<std::string>(), m[2].get<std::string>()});
            }
        }
    }
}

json effective_json(const SessionConfig &cfg) {
    json j;
    j["session"] = {{"tick_rate", cfg.tick_rate},
                    {"stale_threshold", cfg.stale_threshold},
                    {"filter_alpha", cfg.filter_alpha},
                    {"training_ticks", cfg.training_ticks}};
    j["vehicle"] = cfg.vehicle ? json(std::string(to_string(*cfg.vehicle))) : json(nullptr);
    json course = {{"route", cfg.course.route},
                   {"spacing", cfg.course.spacing},
                   {"half_width", cfg.course.corridor_half_width},
                   {"pickup_radius", cfg.course.pickup_radius},
                   {"total_length", cfg.course.total_length}};
    if (!cfg.course.custom_centerline.empty()) {
        json pts = json::array();
        for (const scenario::Point &p : cfg.course.custom_centerline) {
            pts.push_back({p.x, p.y});
        }
        course["centerline"] = pts;
    }
    j["course"] = course;
    json vehicles = json::object();
    for (const auto &[v, vc] : cfg.vehicles) {
        vehicles[std::string(to_string(v))] = {
            {"v_max", vc.dynamics.v_max},
            {"a_accel", vc.dynamics.a_accel},
            {"a_decel", vc.dynamics.a_decel},
            {"omega_max", vc.dynamics.omega_max},
            {"yaw_full_scale", vc.mapping.yaw_full_scale},
            {"roll_full_scale", vc.mapping.roll_full_scale},
            {"pitch_full_scale", vc.mapping.pitch_full_scale},
        };
    }
    j["vehicles"] = vehicles;
    j["calibration"] = profile_to_json(cfg.calibration);
    return j;
}

std::string config_hash(const SessionConfig &cfg) {
    const std::string canonical = effective_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoFailure("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    json doc = json::parse(ss.str(), nullptr, false);
    if (doc.is_discarded()) {
        throw ConfigError(path + " is not valid JSON");
    }
    return doc;
}

void write_json_file(const std::string &path, const json &doc) {
    std::ofstream out(path);
    if (!out) {
        throw IoFailure("cannot write " + path);
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoFailure("write failed for " + path);
    }
}

} // namespace ridesim
