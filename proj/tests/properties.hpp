#pragma once

// Property checks shared by the unit suites and the acceptance runner. Each
// returns a small report; callers decide the sample count and tolerance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>

#include "ridesim/calibration.hpp"
#include "ridesim/control.hpp"
#include "ridesim/dynamics.hpp"
#include "ridesim/errors.hpp"
#include "ridesim/fusion.hpp"
#include "ridesim/wire.hpp"
#include "support.hpp"

namespace testing {

struct Report {
    std::uint64_t cases = 0;
    std::uint64_t failures = 0;
    double worst = 0.0; // largest observed error, when meaningful
    std::string first_failure;

    bool ok() const { return failures == 0; }
    void fail(const std::string &what) {
        if (failures++ == 0) {
            first_failure = what;
        }
    }
};

inline Report wire_round_trip(std::uint64_t n, std::uint64_t seed) {
    Rng rng(seed);
    Report r;
    for (std::uint64_t i = 0; i < n; ++i) {
        const ridesim::wire::WireMessage m = random_message(rng);
        ++r.cases;
        try {
            if (!(ridesim::wire::decode(ridesim::wire::encode(m)) == m)) {
                r.fail(ridesim::wire::encode(m));
            }
        } catch (const std::exception &e) {
            r.fail(e.what());
        }
    }
    return r;
}

/// Random bytes, half of them derived from valid frames by byte edits. Any
/// exception other than the three decode error classes counts as a failure.
inline Report wire_fuzz(std::uint64_t n, std::uint64_t seed) {
    Rng rng(seed);
    Report r;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string bytes;
        if (i % 2 == 0) {
            bytes.resize(uniform_u64(rng, 0, 96));
            for (char &c : bytes) {
                c = static_cast<char>(uniform_u64(rng, 0, 255));
            }
        } else {
            bytes = ridesim::wire::encode(random_message(rng));
            const auto edits = uniform_u64(rng, 1, 4);
            for (std::uint64_t e = 0; e < edits; ++e) {
                bytes[uniform_u64(rng, 0, bytes.size() - 1)] = static_cast<char>(uniform_u64(rng, 0, 255));
            }
        }
        ++r.cases;
        try {
            (void)ridesim::wire::decode(bytes);
        } catch (const ridesim::MalformedFrame &) {
        } catch (const ridesim::SchemaViolation &) {
        } catch (const ridesim::UnknownKind &) {
        } catch (const std::exception &e) {
            r.fail(std::string("unexpected exception: ") + e.what());
        } catch (...) {
            r.fail("non-standard exception");
        }
    }
    return r;
}

/// normalize_fsr monotone and clamped over an n-point raw sweep.
inline Report normalize_sweep(std::uint64_t n, double baseline, double max) {
    Report r;
    double prev = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < n; ++i) {
        const double raw = -500.0 + (5095.0 * static_cast<double>(i)) / static_cast<double>(n - 1);
        const double v = ridesim::calibration::normalize_fsr(raw, baseline, max);
        ++r.cases;
        if (!(v >= 0.0 && v <= 1.0) || v < prev) {
            r.fail("raw=" + std::to_string(raw));
        }
        prev = v;
    }
    return r;
}

/// dead_zone odd, identity at t=0, zero on [-t, t], and continuous at the
/// thresholds; `worst` is the largest jump across t ± eps.
inline Report dead_zone_properties(std::uint64_t n, std::uint64_t seed, double eps = 1e-13) {
    using ridesim::calibration::dead_zone;
    Rng rng(seed);
    Report r;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double t = uniform(rng, 0.0, 0.5);
        const double x = uniform(rng, -1.0, 1.0);
        ++r.cases;
        if (dead_zone(-x, t) != -dead_zone(x, t)) r.fail("odd");
        if (dead_zone(x, 0.0) != x) r.fail("identity");
        if (std::abs(x) <= t && dead_zone(x, t) != 0.0) r.fail("zero band");
        if (std::abs(dead_zone(x, t)) > 1.0) r.fail("range");
        const double jump = std::max(std::abs(dead_zone(t + eps, t) - dead_zone(t - eps, t)),
                                     std::abs(dead_zone(-t - eps, t) - dead_zone(-t + eps, t)));
        r.worst = std::max(r.worst, jump);
    }
    return r;
}

/// estimate_static against the rotation-matrix pose oracle; `worst` in degrees.
inline Report fusion_oracle(std::uint64_t n, std::uint64_t seed) {
    Rng rng(seed);
    Report r;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double yaw = uniform(rng, -180.0, 180.0);
        const double pitch = uniform(rng, -89.0, 89.0);
        const double roll = uniform(rng, -180.0, 180.0);
        const auto reading = static_reading(yaw, pitch, roll, ridesim::kGravity, uniform(rng, 0.2, 60.0),
                                            uniform(rng, -80.0, 80.0));
        const auto e = ridesim::fusion::estimate_static(reading.accel, reading.mag);
        ++r.cases;
        const double err = std::max({angle_error_deg(e.pitch_deg, pitch), angle_error_deg(e.roll_deg, roll),
                                     angle_error_deg(e.yaw_deg, yaw)});
        r.worst = std::max(r.worst, err);
    }
    return r;
}

// --- Mapping conformance --------------------------------------------------
// Independent description of which sensor channel drives which command.

enum class Channel { pitch, roll, yaw, fsr_front, fsr_rear, throttle };

struct MappingSpec {
    ridesim::Vehicle vehicle;
    Channel steering;
    Channel velocity;
    bool reverse;
};

inline const std::array<MappingSpec, 4> &mapping_specs() {
    using ridesim::Vehicle;
    static const std::array<MappingSpec, 4> specs = {{
        {Vehicle::escooter, Channel::yaw, Channel::throttle, false},
        {Vehicle::segway, Channel::roll, Channel::fsr_front, true}, // rear pushes the other way
        {Vehicle::unicycle, Channel::yaw, Channel::pitch, true},
        {Vehicle::skateboard, Channel::roll, Channel::pitch, true},
    }};
    return specs;
}

inline double &channel_ref(ridesim::control::SensorFrame &f, Channel c) {
    switch (c) {
    case Channel::pitch: return f.orientation.pitch;
    case Channel::roll: return f.orientation.roll;
    case Channel::yaw: return f.orientation.yaw;
    case Channel::fsr_front: return f.fsr_front;
    case Channel::fsr_rear: return f.fsr_rear;
    case Channel::throttle: return f.throttle;
    }
    return f.throttle;
}

inline bool is_angle(Channel c) { return c == Channel::pitch || c == Channel::roll || c == Channel::yaw; }

inline ridesim::control::SensorFrame random_frame(Rng &rng) {
    ridesim::control::SensorFrame f;
    f.orientation = {uniform(rng, -90, 90), uniform(rng, -180, 180), uniform(rng, -180, 180)};
    f.fsr_front = uniform(rng, 0, 1);
    f.fsr_rear = uniform(rng, 0, 1);
    f.throttle = uniform(rng, 0, 1);
    return f;
}

inline double full_scale(const ridesim::control::MappingParams &p, Channel c) {
    switch (c) {
    case Channel::pitch: return p.pitch_full_scale;
    case Channel::roll: return p.roll_full_scale;
    case Channel::yaw: return p.yaw_full_scale;
    default: return 1.0;
    }
}

/// Range safety, channel isolation, sign convention and monotonicity for all
/// four vehicles, `n` random frames each.
inline Report mapping_conformance(std::uint64_t n, std::uint64_t seed) {
    using namespace ridesim::control;
    Rng rng(seed);
    Report r;
    const Channel all[] = {Channel::pitch, Channel::roll, Channel::yaw,
                           Channel::fsr_front, Channel::fsr_rear, Channel::throttle};
    for (const MappingSpec &spec : mapping_specs()) {
        const MappingParams p = MappingParams::defaults_for(spec.vehicle);
        const auto ctl = make_controller(spec.vehicle, p);
        const std::string tag = std::string(ridesim::to_string(spec.vehicle)) + ": ";
        if (ctl->allows_reverse() != spec.reverse) r.fail(tag + "reverse capability");
        for (std::uint64_t i = 0; i < n; ++i) {
            SensorFrame f = random_frame(rng);
            const ControlInput out = ctl->map(f);
            ++r.cases;
            if (!(out == active_controller(spec.vehicle, f, p))) r.fail(tag + "dispatch mismatch");

            // Range safety.
            if (!(std::abs(out.steering) <= 1.0 && std::abs(out.velocity_cmd) <= 1.0)) r.fail(tag + "range");
            if (!spec.reverse && out.velocity_cmd < 0.0) r.fail(tag + "reverse on a one-way vehicle");

            // Channel isolation: perturb every channel the mapping does not name.
            for (Channel c : all) {
                const bool named = c == spec.steering || c == spec.velocity ||
                                   (spec.vehicle == ridesim::Vehicle::segway && c == Channel::fsr_rear);
                if (named) continue;
                SensorFrame g = f;
                channel_ref(g, c) = is_angle(c) ? uniform(rng, -90, 90) : uniform(rng, 0, 1);
                if (!(ctl->map(g) == out)) r.fail(tag + "output depends on an unnamed channel");
            }

            // Sign convention on the steering source angle (and pitch for tilt vehicles).
            const double s_angle = channel_ref(f, spec.steering);
            if (out.steering != 0.0 && std::signbit(out.steering) != std::signbit(s_angle)) {
                r.fail(tag + "steering sign");
            }
            if (spec.velocity == Channel::pitch && out.velocity_cmd != 0.0 &&
                std::signbit(out.velocity_cmd) != std::signbit(f.orientation.pitch)) {
                r.fail(tag + "velocity sign");
            }

            // Monotonicity in each source over its full-scale range.
            for (auto [src, is_steer] : {std::pair{spec.steering, true}, std::pair{spec.velocity, false}}) {
                const double span = full_scale(p, src);
                const double lo = is_angle(src) ? -span : 0.0;
                double a = uniform(rng, lo, span);
                double b = uniform(rng, lo, span);
                if (a > b) std::swap(a, b);
                SensorFrame fa = f, fb = f;
                channel_ref(fa, src) = a;
                channel_ref(fb, src) = b;
                const ControlInput oa = ctl->map(fa), ob = ctl->map(fb);
                if ((is_steer ? oa.steering > ob.steering : oa.velocity_cmd > ob.velocity_cmd)) {
                    r.fail(tag + "not monotone in its source channel");
                }
            }
            if (spec.vehicle == ridesim::Vehicle::segway) {
                double a = uniform(rng, 0, 1), b = uniform(rng, 0, 1);
                if (a > b) std::swap(a, b);
                SensorFrame fa = f, fb = f;
                fa.fsr_rear = a;
                fb.fsr_rear = b;
                if (ctl->map(fa).velocity_cmd < ctl->map(fb).velocity_cmd) {
                    r.fail(tag + "rear pressure must push backwards");
                }
            }
        }
    }
    return r;
}

/// Constant steering and speed for one full revolution. `worst` is the maximum relative radial error about the
/// analytic turn center.
inline Report circle_law(double steering, double speed, double omega_max, double dt) {
    using namespace ridesim::dynamics;
    VehicleParams p;
    p.omega_max = omega_max;
    p.v_max = std::max(p.v_max, speed);
    p.a_accel = 1e9; // speed is held exactly at its target
    p.a_decel = 1e9;
    const double v_cmd = speed / p.v_max;
    const double radius = speed / (steering * omega_max);
    VehicleState s;
    s.speed = speed;
    // Start on the circle centered at (0, radius) heading +x.
    const double cx = 0.0, cy = radius;
    const double omega = steering * omega_max;
    const auto steps = static_cast<std::uint64_t>(std::ceil(2.0 * std::numbers::pi / (std::abs(omega) * dt)));
    Report r;
    for (std::uint64_t i = 0; i < steps; ++i) {
        s = step(s, {steering, v_cmd}, p, dt);
        ++r.cases;
        r.worst = std::max(r.worst, std::abs(std::hypot(s.x - cx, s.y - cy) - std::abs(radius)) / std::abs(radius));
    }
    return r;
}

} // namespace testing
