#pragma once

#include <array>
#include <optional>

namespace ridesim::fusion {

using Vec3 = std::array<double, 3>;

enum class Source { onboard, computed };

/// Orientation in degrees. Pitch is positive nose-down (forward lean), roll is
/// positive about the forward axis, yaw is positive counter-clockwise seen from
/// above and lies in (-180, 180].
struct OrientationEstimate {
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    double yaw_deg = 0.0;
    Source source = Source::onboard;
    bool operator==(const OrientationEstimate &) const = default;
};

/// Accelerometer magnitudes below this fraction of g are treated as free fall.
inline constexpr double kFreeFallFraction = 0.1;

/// Static tilt from the gravity vector plus a tilt-compensated magnetometer
/// heading referenced to magnetic +x. Throws DegenerateInput in free fall.
OrientationEstimate estimate_static(const Vec3 &accel, const Vec3 &mag);

inline constexpr double kDefaultAlpha = 0.2;

/// First-order exponential smoother for one orientation stream. Yaw and roll
/// are blended along the shortest arc so the ±180 seam does not produce a
/// half-turn jump.
class OrientationFilter {
public:
    explicit OrientationFilter(double alpha = kDefaultAlpha);

    OrientationEstimate smooth(const OrientationEstimate &obs);

    double alpha() const { return alpha_; }
    const std::optional<OrientationEstimate> &last() const { return last_; }
    void reset() { last_.reset(); }

private:
    double alpha_;
    std::optional<OrientationEstimate> last_;
};

} // namespace ridesim::fusion
