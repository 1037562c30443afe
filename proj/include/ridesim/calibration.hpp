#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "ridesim/fusion.hpp"
#include "ridesim/vehicle.hpp"
#include "ridesim/wire.hpp"

namespace ridesim::calibration {

enum class Axis { pitch = 0, roll = 1, yaw = 2 };

/// One output slot of an axis map: which input axis feeds it and with what sign.
struct AxisSource {
    Axis from = Axis::pitch;
    int sign = 1;
    bool operator==(const AxisSource &) const = default;
};

/// Signed permutation: slot i of the aligned triple (pitch, roll, yaw) reads
/// `sign * input[from]`.
struct AxisMap {
    std::array<AxisSource, 3> slots = {
        AxisSource{Axis::pitch, 1}, AxisSource{Axis::roll, 1}, AxisSource{Axis::yaw, 1}};

    static AxisMap identity() { return {}; }
    /// Parses entries like "+pitch", "-roll". Throws ConfigError.
    static AxisMap parse(const std::array<std::string, 3> &spec);
    std::array<std::string, 3> to_strings() const;
    bool is_bijection() const;
    bool operator==(const AxisMap &) const = default;
};

struct AlignedAngles {
    double pitch = 0.0;
    double roll = 0.0;
    double yaw = 0.0;
    bool operator==(const AlignedAngles &) const = default;
};

/// How one vehicle's IMU mounting relates to the virtual reference frame.
struct ImuAlignment {
    AlignedAngles imu_zero; // raw-frame offsets, degrees
    AxisMap axis_map;
    bool operator==(const ImuAlignment &) const = default;
};

struct FsrBounds {
    std::uint32_t front = 0;
    std::uint32_t rear = 0;
    bool operator==(const FsrBounds &) const = default;
};

inline constexpr double kDefaultDeadZone = 0.10;

/// Per-rider normalization bounds. The uncalibrated defaults span the full ADC
/// range with identity alignment.
struct CalibrationProfile {
    FsrBounds fsr_baseline{0, 0};
    FsrBounds fsr_max{wire::kAdcMax, wire::kAdcMax};
    std::uint32_t throttle_min = 0;
    std::uint32_t throttle_max = wire::kAdcMax;
    double dead_zone = kDefaultDeadZone;
    std::map<Vehicle, ImuAlignment> alignment;

    /// Alignment for `v`, identity when none is configured.
    ImuAlignment alignment_for(Vehicle v) const;
    /// Throws InvalidBounds or ConfigError when an invariant fails.
    void validate() const;
    bool operator==(const CalibrationProfile &) const = default;
};

enum class CapturePhase { baseline, max };

inline constexpr std::size_t kMinCaptureSamples = 10;

/// Per-channel mean of the samples, rounded to nearest. Throws
/// InsufficientSamples below kMinCaptureSamples.
FsrBounds capture_fsr(std::span<const wire::Fsr> samples, CapturePhase phase);

/// Same as capture_fsr, then checks the result against the opposite bound
/// already in `profile` and throws InvalidBounds if max would not exceed
/// baseline on some channel.
FsrBounds capture_fsr(std::span<const wire::Fsr> samples, CapturePhase phase,
                      const CalibrationProfile &profile);

/// clamp((raw - baseline) / (max - baseline), 0, 1). Throws InvalidBounds
/// unless max > baseline.
double normalize_fsr(double raw, double baseline, double max);

/// Zero on [-t, t], linear ramp to ±1 outside it.
double dead_zone(double x, double t);

/// Subtracts the zero offsets, then applies the signed permutation.
AlignedAngles align(const fusion::OrientationEstimate &euler, const ImuAlignment &alignment);

} // namespace ridesim::calibration
