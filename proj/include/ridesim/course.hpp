#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ridesim/dynamics.hpp"

namespace ridesim::scenario {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point &) const = default;
};

/// Closest point on the centerline to a query position.
struct Projection {
    double arc = 0.0;      // arc-length position of `point`
    double distance = 0.0; // Euclidean distance from the query
    Point point;
    std::size_t segment = 0;
};

/// Route centerline with a drivable corridor around it. Nearest-point queries
/// go through a uniform grid of segment buckets.
class CourseGeometry {
public:
    /// Throws ConfigError on fewer than two points, repeated consecutive points,
    /// or a non-positive half-width.
    CourseGeometry(std::vector<Point> centerline, double corridor_half_width);

    std::span<const Point> centerline() const { return points_; }
    double corridor_half_width() const { return half_width_; }
    double total_length() const { return cumulative_.back(); }
    /// Arc length at each vertex; front() == 0, back() == total_length().
    std::span<const double> cumulative() const { return cumulative_; }

    /// Position at arc length `s`, clamped to [0, total_length].
    Point point_at(double s) const;
    /// Direction of travel (radians) of the segment containing `s`.
    double heading_at(double s) const;
    Projection project(Point p) const;

private:
    std::size_t segment_at(double s) const;
    void build_index();

    std::vector<Point> points_;
    std::vector<double> cumulative_;
    double half_width_;

    double cell_ = 1.0;
    double min_x_ = 0.0, min_y_ = 0.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::uint32_t>> cells_;
};

inline constexpr int kRouteCount = 4;
inline constexpr double kDefaultTotalLength = 200.0;
inline constexpr double kDefaultSpacing = 10.0;
inline constexpr double kDefaultHalfWidth = 2.0;
inline constexpr double kDefaultPickupRadius = 0.75;

/// Centerline of built-in route 1-4 (loop, S-course, grid circuit,
/// open figure-eight), uniformly scaled to `total_length`. Throws UnknownRoute.
std::vector<Point> builtin_route(int route, double total_length = kDefaultTotalLength);

struct Coin {
    double arc = 0.0;
    Point position;
    bool collected = false;
};

struct CoinSet {
    std::vector<Coin> coins;
    double spacing = kDefaultSpacing;
    double pickup_radius = kDefaultPickupRadius;

    std::uint32_t total() const { return static_cast<std::uint32_t>(coins.size()); }
    std::uint32_t collected() const;
    void reset();
};

/// Coins at spacing, 2*spacing, ... up to the route end.
CoinSet place_coins(const CourseGeometry &course, double spacing, double pickup_radius);

struct CourseSpec {
    int route = 1;
    double spacing = kDefaultSpacing;
    double corridor_half_width = kDefaultHalfWidth;
    double pickup_radius = kDefaultPickupRadius;
    double total_length = kDefaultTotalLength;
    /// When non-empty, replaces the built-in route.
    std::vector<Point> custom_centerline;
};

struct Course {
    CourseGeometry geometry;
    CoinSet coins;
};

/// Throws UnknownRoute or ConfigError.
Course generate_course(const CourseSpec &spec);

struct CollisionEvent {
    double offset = 0.0; // distance from the centerline
    double arc = 0.0;    // projected arc position at the time of departure
};

/// Reports a collision iff the vehicle is farther than the corridor half-width
/// from the centerline.
std::optional<CollisionEvent> check_collision(const dynamics::VehicleState &s, const CourseGeometry &course);

struct Respawn {
    dynamics::VehicleState state;
    double arc = 0.0;
};

/// Puts the vehicle back on the centerline at min(projected arc, progress),
/// facing along the route, at rest.
Respawn resolve_fail(const dynamics::VehicleState &s, const CourseGeometry &course, double progress);

/// State at the route start: arc 0, facing along the first segment.
dynamics::VehicleState start_state(const CourseGeometry &course, std::uint64_t tick);

/// Marks every uncollected coin within pickup radius; returns their indices.
std::vector<std::size_t> update_pickup(const dynamics::VehicleState &s, CoinSet &coins);

enum class TrialPhase { training, running, complete, aborted };

const char *to_string(TrialPhase p);

struct TrialStatus {
    TrialPhase phase = TrialPhase::running;
    std::uint32_t coins_collected = 0;
    std::uint32_t coins_total = 0;
    std::uint64_t start_tick = 0;
    std::optional<std::uint64_t> end_tick;
    double progress = 0.0; // furthest arc reached since the last respawn

    bool terminal() const { return phase == TrialPhase::complete || phase == TrialPhase::aborted; }
};

/// Refreshes counters and completes the trial once progress reaches the route
/// end. Completion does not depend on the coin count. Returns true on the tick
/// the trial completes.
bool trial_status(TrialStatus &trial, const CoinSet &coins, const CourseGeometry &course, std::uint64_t tick);

/// Operator stop. No-op on terminal trials.
void abort_trial(TrialStatus &trial, std::uint64_t tick);

} // namespace ridesim::scenario
