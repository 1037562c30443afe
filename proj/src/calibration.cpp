#include "ridesim/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "ridesim/angles.hpp"
#include "ridesim/errors.hpp"

namespace ridesim::calibration {

namespace {

constexpr std::array<const char *, 3> kAxisNames = {"pitch", "roll", "yaw"};

} // namespace

AxisMap AxisMap::parse(const std::array<std::string, 3> &spec) {
    AxisMap m;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string &s = spec[i];
        if (s.size() < 2 || (s[0] != '+' && s[0] != '-')) {
            throw ConfigError("axis map entry '" + s + "' must look like +pitch or -roll");
        }
        const std::string name = s.substr(1);
        auto it = std::find(kAxisNames.begin(), kAxisNames.end(), name);
        if (it == kAxisNames.end()) {
            throw ConfigError("axis map entry '" + s + "' names an unknown axis");
        }
        m.slots[i] = AxisSource{static_cast<Axis>(it - kAxisNames.begin()), s[0] == '-' ? -1 : 1};
    }
    if (!m.is_bijection()) {
        throw ConfigError("axis map must use each of pitch, roll, yaw exactly once");
    }
    return m;
}

std::array<std::string, 3> AxisMap::to_strings() const {
    std::array<std::string, 3> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = std::string(slots[i].sign < 0 ? "-" : "+") + kAxisNames[static_cast<int>(slots[i].from)];
    }
    return out;
}

bool AxisMap::is_bijection() const {
    std::array<bool, 3> seen{};
    for (const AxisSource &s : slots) {
        if (s.sign != 1 && s.sign != -1) {
            return false;
        }
        auto idx = static_cast<std::size_t>(s.from);
        if (idx > 2 || seen[idx]) {
            return false;
        }
        seen[idx] = true;
    }
    return true;
}

ImuAlignment CalibrationProfile::alignment_for(Vehicle v) const {
    auto it = alignment.find(v);
    return it == alignment.end() ? ImuAlignment{} : it->second;
}

void CalibrationProfile::validate() const {
    if (fsr_max.front <= fsr_baseline.front || fsr_max.rear <= fsr_baseline.rear) {
        throw InvalidBounds("FSR max must exceed baseline on both channels");
    }
    if (fsr_max.front > wire::kAdcMax || fsr_max.rear > wire::kAdcMax) {
        throw InvalidBounds("FSR max exceeds ADC range");
    }
    if (throttle_max <= throttle_min || throttle_max > wire::kAdcMax) {
        throw InvalidBounds("throttle max must exceed throttle min within ADC range");
    }
    if (!(dead_zone >= 0.0 && dead_zone < 0.5)) {
        throw ConfigError("dead zone must lie in [0, 0.5)");
    }
    for (const auto &[vehicle, a] : alignment) {
        if (!a.axis_map.is_bijection()) {
            throw ConfigError("axis map for " + std::string(to_string(vehicle)) + " is not a signed permutation");
        }
        for (double z : {a.imu_zero.pitch, a.imu_zero.roll, a.imu_zero.yaw}) {
            if (!std::isfinite(z)) {
                throw ConfigError("imu zero offsets must be finite");
            }
        }
    }
}

FsrBounds capture_fsr(std::span<const wire::Fsr> samples, CapturePhase) {
    if (samples.size() < kMinCaptureSamples) {
        throw InsufficientSamples("FSR capture needs at least " + std::to_string(kMinCaptureSamples) +
                                  " samples, got " + std::to_string(samples.size()));
    }
    std::uint64_t front = 0, rear = 0;
    for (const wire::Fsr &s : samples) {
        front += s.front;
        rear += s.rear;
    }
    const auto n = static_cast<double>(samples.size());
    return FsrBounds{static_cast<std::uint32_t>(std::lround(static_cast<double>(front) / n)),
                     static_cast<std::uint32_t>(std::lround(static_cast<double>(rear) / n))};
}

FsrBounds capture_fsr(std::span<const wire::Fsr> samples, CapturePhase phase,
                      const CalibrationProfile &profile) {
    FsrBounds got = capture_fsr(samples, phase);
    const FsrBounds &base = phase == CapturePhase::baseline ? got : profile.fsr_baseline;
    const FsrBounds &max = phase == CapturePhase::max ? got : profile.fsr_max;
    if (max.front <= base.front || max.rear <= base.rear) {
        throw InvalidBounds("captured FSR max does not exceed baseline");
    }
    return got;
}

double normalize_fsr(double raw, double baseline, double max) {
    if (!(max > baseline)) {
        throw InvalidBounds("normalization requires max > baseline");
    }
    return std::clamp((raw - baseline) / (max - baseline), 0.0, 1.0);
}

double dead_zone(double x, double t) {
    const double mag = std::abs(x);
    if (mag <= t) {
        return 0.0;
    }
    const double ramp = (mag - t) / (1.0 - t);
    return x < 0.0 ? -ramp : ramp;
}

AlignedAngles align(const fusion::OrientationEstimate &euler, const ImuAlignment &alignment) {
    const std::array<double, 3> zeroed = {
        wrap_deg(euler.pitch_deg - alignment.imu_zero.pitch),
        wrap_deg(euler.roll_deg - alignment.imu_zero.roll),
        wrap_deg(euler.yaw_deg - alignment.imu_zero.yaw),
    };
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        const AxisSource &src = alignment.axis_map.slots[i];
        out[i] = src.sign * zeroed[static_cast<std::size_t>(src.from)];
    }
    // Negating 180 gives -180, which is outside (-180, 180].
    return AlignedAngles{wrap_deg(out[0]), wrap_deg(out[1]), wrap_deg(out[2])};
}

} // namespace ridesim::calibration
