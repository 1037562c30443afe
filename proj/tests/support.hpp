#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ridesim/angles.hpp"
#include "ridesim/session.hpp"
#include "ridesim/wire.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng &rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::uint64_t uniform_u64(Rng &rng, std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

/// Printable sender id of 1..64 bytes, occasionally with UTF-8 and escapes.
inline std::string random_sender(Rng &rng) {
    static const std::vector<std::string> pieces = {"a", "Z", "0", "_", "-", " ", "\"", "\\", "/", "\xc3\xa9", "\xe2\x82\xac"};
    std::string s;
    const auto n = uniform_u64(rng, 1, 12);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string &p = pieces[uniform_u64(rng, 0, pieces.size() - 1)];
        if (s.size() + p.size() > ridesim::wire::kMaxSenderLength) {
            break;
        }
        s += p;
    }
    return s.empty() ? "x" : s;
}

inline std::string random_text(Rng &rng) {
    std::string s;
    const auto n = uniform_u64(rng, 0, 40);
    for (std::uint64_t i = 0; i < n; ++i) {
        s.push_back(static_cast<char>(uniform_u64(rng, 0x20, 0x7e)));
    }
    return s;
}

/// Angle that is exactly representable and inside the wire contract, with
/// the boundaries hit on purpose now and then.
inline double random_angle(Rng &rng) {
    switch (uniform_u64(rng, 0, 9)) {
    case 0: return 180.0;
    case 1: return -180.0;
    case 2: return 0.0;
    case 3: return 90.0;
    default: return uniform(rng, -180.0, 180.0);
    }
}

inline double random_finite(Rng &rng) {
    switch (uniform_u64(rng, 0, 7)) {
    case 0: return 0.0;
    case 1: return uniform(rng, -1e-300, 1e-300);
    case 2: return uniform(rng, -1e12, 1e12);
    default: return uniform(rng, -100.0, 100.0);
    }
}

inline ridesim::wire::WireMessage random_message(Rng &rng) {
    using namespace ridesim::wire;
    WireMessage m;
    m.sender = random_sender(rng);
    m.seq = uniform_u64(rng, 0, 3) == 0 ? std::numeric_limits<std::uint64_t>::max() : uniform_u64(rng, 0, 1ull << 62);
    m.t_ms = uniform_u64(rng, 0, 1ull << 50);
    const auto adc = [&] { return static_cast<std::uint32_t>(uniform_u64(rng, 0, kAdcMax)); };
    switch (static_cast<Kind>(uniform_u64(rng, 0, 9))) {
    case Kind::hello: m.payload = Hello{}; break;
    case Kind::imu:
        if (uniform_u64(rng, 0, 1) == 0) {
            m.payload = Imu{EulerAngles{random_angle(rng), random_angle(rng), random_angle(rng)}};
        } else {
            RawImu r;
            for (double *f : {&r.ax, &r.ay, &r.az, &r.gx, &r.gy, &r.gz, &r.mx, &r.my, &r.mz}) {
                *f = random_finite(rng);
            }
            m.payload = Imu{r};
        }
        break;
    case Kind::fsr: m.payload = Fsr{adc(), adc()}; break;
    case Kind::throttle: m.payload = Throttle{adc()}; break;
    case Kind::set_vehicle:
        m.payload = SetVehicle{ridesim::kAllVehicles[uniform_u64(rng, 0, 3)]};
        break;
    case Kind::calibrate:
        m.payload = Calibrate{static_cast<CalibrationPhase>(uniform_u64(rng, 0, 4))};
        break;
    case Kind::state: {
        const auto total = static_cast<std::uint32_t>(uniform_u64(rng, 0, 100));
        m.payload = State{uniform_u64(rng, 0, 1ull << 40),
                          random_finite(rng),
                          random_finite(rng),
                          uniform(rng, -3.14159, 3.14159),
                          uniform(rng, -6, 6),
                          uniform(rng, -1, 1),
                          uniform(rng, -1, 1),
                          static_cast<std::uint32_t>(uniform_u64(rng, 0, total)),
                          total};
        break;
    }
    case Kind::event:
        m.payload = Event{uniform_u64(rng, 0, 1ull << 40), static_cast<EventName>(uniform_u64(rng, 0, 5)),
                          random_text(rng)};
        break;
    case Kind::ack: m.payload = Ack{uniform_u64(rng, 0, 1ull << 60)}; break;
    case Kind::error: m.payload = ErrorReply{uniform_u64(rng, 0, 1ull << 60), random_text(rng)}; break;
    }
    return m;
}

/// Fresh path under the system temp directory, unique per process.
inline std::string temp_path(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ridesim-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::filesystem::remove(p);
    return p.string();
}

inline ridesim::wire::WireMessage msg(std::string sender, std::uint64_t seq, ridesim::wire::Payload p) {
    ridesim::wire::WireMessage m;
    m.sender = std::move(sender);
    m.seq = seq;
    m.t_ms = seq * 10;
    m.payload = std::move(p);
    return m;
}

/// Records everything the session sends.
class CollectingOutbox : public ridesim::Outbox {
public:
    struct Sent {
        ridesim::ClientId client; // 0 for broadcast
        ridesim::wire::WireMessage msg;
    };
    void send(ridesim::ClientId client, const ridesim::wire::WireMessage &m) override {
        std::lock_guard lock(mu_);
        sent.push_back({client, m});
    }
    void broadcast(const ridesim::wire::WireMessage &m) override {
        std::lock_guard lock(mu_);
        sent.push_back({0, m});
    }
    std::vector<Sent> of_kind(ridesim::wire::Kind k) const {
        std::vector<Sent> out;
        for (const Sent &s : sent) {
            if (s.msg.kind() == k) {
                out.push_back(s);
            }
        }
        return out;
    }
    std::vector<Sent> sent;

private:
    std::mutex mu_;
};

// --- Orientation oracle --------------------------------------------------
// Builds sensor readings from a known attitude by rotating world vectors into
// the body frame with explicit matrices (Z-Y-X yaw, pitch, roll).

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec = std::array<double, 3>;

inline Mat3 mul(const Mat3 &a, const Mat3 &b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

inline Vec mul_transposed(const Mat3 &m, const Vec &v) {
    Vec r{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r[i] += m[k][i] * v[k];
    return r;
}

/// Body-to-world rotation for yaw psi, pitch theta, roll phi (radians).
inline Mat3 body_to_world(double psi, double theta, double phi) {
    const Mat3 rz{{{std::cos(psi), -std::sin(psi), 0}, {std::sin(psi), std::cos(psi), 0}, {0, 0, 1}}};
    const Mat3 ry{{{std::cos(theta), 0, std::sin(theta)}, {0, 1, 0}, {-std::sin(theta), 0, std::cos(theta)}}};
    const Mat3 rx{{{1, 0, 0}, {0, std::cos(phi), -std::sin(phi)}, {0, std::sin(phi), std::cos(phi)}}};
    return mul(rz, mul(ry, rx));
}

struct PoseReading {
    Vec accel;
    Vec mag;
};

/// Specific force of a resting sensor (reaction to gravity, +z up) and the
/// local magnetic field (north along +x, dipping by `inclination`).
inline PoseReading static_reading(double yaw_deg, double pitch_deg, double roll_deg, double g, double field,
                                  double inclination_deg) {
    const Mat3 r = body_to_world(ridesim::deg_to_rad(yaw_deg), ridesim::deg_to_rad(pitch_deg),
                                 ridesim::deg_to_rad(roll_deg));
    const double inc = ridesim::deg_to_rad(inclination_deg);
    return {mul_transposed(r, {0.0, 0.0, g}),
            mul_transposed(r, {field * std::cos(inc), 0.0, -field * std::sin(inc)})};
}

/// Shortest signed difference between two angles in degrees.
inline double angle_error_deg(double a, double b) {
    double d = std::fmod(a - b, 360.0);
    if (d > 180.0) d -= 360.0;
    if (d <= -180.0) d += 360.0;
    return std::abs(d);
}

} // namespace testing
