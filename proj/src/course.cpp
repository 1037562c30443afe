#include "ridesim/course.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ridesim/angles.hpp"
#include "ridesim/errors.hpp"

namespace ridesim::scenario {

namespace {

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Turtle-style route builder: straights and constant-radius arcs sampled at
/// roughly one-metre chords.
class RouteBuilder {
public:
    RouteBuilder() { pts_.push_back({0.0, 0.0}); }

    RouteBuilder &straight(double length) {
        const int n = std::max(1, static_cast<int>(std::ceil(length / kStep)));
        const Point start = pts_.back();
        for (int i = 1; i <= n; ++i) {
            const double d = length * i / n;
            pts_.push_back({start.x + d * std::cos(heading_), start.y + d * std::sin(heading_)});
        }
        return *this;
    }

    /// Positive degrees turn left (counter-clockwise).
    RouteBuilder &arc(double radius, double degrees) {
        const double sweep = deg_to_rad(degrees);
        const double side = sweep > 0 ? 1.0 : -1.0;
        const Point start = pts_.back();
        const Point centre{start.x - side * radius * std::sin(heading_), start.y + side * radius * std::cos(heading_)};
        const double a0 = std::atan2(start.y - centre.y, start.x - centre.x);
        const int n = std::max(1, static_cast<int>(std::ceil(radius * std::abs(sweep) / kStep)));
        for (int i = 1; i <= n; ++i) {
            const double a = a0 + sweep * i / n;
            pts_.push_back({centre.x + radius * std::cos(a), centre.y + radius * std::sin(a)});
        }
        heading_ += sweep;
        return *this;
    }

    RouteBuilder &face(double degrees) {
        heading_ = deg_to_rad(degrees);
        return *this;
    }

    std::vector<Point> scaled_to(double total_length) const {
        double len = 0.0;
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            len += dist(pts_[i - 1], pts_[i]);
        }
        const double k = total_length / len;
        std::vector<Point> out;
        out.reserve(pts_.size());
        for (Point p : pts_) {
            out.push_back({p.x * k, p.y * k});
        }
        return out;
    }

private:
    static constexpr double kStep = 1.0;
    std::vector<Point> pts_;
    double heading_ = 0.0;
};

} // namespace

CourseGeometry::CourseGeometry(std::vector<Point> centerline, double corridor_half_width)
    : points_(std::move(centerline)), half_width_(corridor_half_width) {
    if (points_.size() < 2) {
        throw ConfigError("course centerline needs at least two points");
    }
    if (!(std::isfinite(half_width_) && half_width_ > 0.0)) {
        throw ConfigError("corridor half-width must be positive");
    }
    cumulative_.reserve(points_.size());
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const Point a = points_[i - 1], b = points_[i];
        if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(a.x) || !std::isfinite(a.y)) {
            throw ConfigError("course centerline points must be finite");
        }
        const double d = dist(a, b);
        if (d == 0.0) {
            throw ConfigError("consecutive centerline points must be distinct");
        }
        cumulative_.push_back(cumulative_.back() + d);
    }
    build_index();
}

void CourseGeometry::build_index() {
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = max_x;
    min_x_ = std::numeric_limits<double>::infinity();
    min_y_ = min_x_;
    for (Point p : points_) {
        min_x_ = std::min(min_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    cell_ = std::max(2.0 * half_width_, 1.0);
    nx_ = static_cast<int>((max_x - min_x_) / cell_) + 1;
    ny_ = static_cast<int>((max_y - min_y_) / cell_) + 1;
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});

    auto cell_of = [&](double v, double lo, int n) {
        return std::clamp(static_cast<int>(std::floor((v - lo) / cell_)), 0, n - 1);
    };
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        const Point a = points_[i], b = points_[i + 1];
        const int x0 = cell_of(std::min(a.x, b.x), min_x_, nx_), x1 = cell_of(std::max(a.x, b.x), min_x_, nx_);
        const int y0 = cell_of(std::min(a.y, b.y), min_y_, ny_), y1 = cell_of(std::max(a.y, b.y), min_y_, ny_);
        for (int cy = y0; cy <= y1; ++cy) {
            for (int cx = x0; cx <= x1; ++cx) {
                cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<std::uint32_t>(i));
            }
        }
    }
}

std::size_t CourseGeometry::segment_at(double s) const {
    if (s <= 0.0) {
        return 0;
    }
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, points_.size() - 2);
}

Point CourseGeometry::point_at(double s) const {
    s = std::clamp(s, 0.0, total_length());
    const std::size_t i = segment_at(s);
    const Point a = points_[i], b = points_[i + 1];
    const double len = cumulative_[i + 1] - cumulative_[i];
    const double t = std::clamp((s - cumulative_[i]) / len, 0.0, 1.0);
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

double CourseGeometry::heading_at(double s) const {
    const std::size_t i = segment_at(std::clamp(s, 0.0, total_length()));
    const Point a = points_[i], b = points_[i + 1];
    return std::atan2(b.y - a.y, b.x - a.x);
}

Projection CourseGeometry::project(Point p) const {
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();

    auto consider = [&](std::size_t i) {
        const Point a = points_[i], b = points_[i + 1];
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
        const Point q{a.x + t * dx, a.y + t * dy};
        const double d = dist(p, q);
        if (d < best.distance || (d == best.distance && i < best.segment)) {
            best.distance = d;
            best.point = q;
            best.segment = i;
            best.arc = cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]);
        }
    };

    const int px = static_cast<int>(std::floor((p.x - min_x_) / cell_));
    const int py = static_cast<int>(std::floor((p.y - min_y_) / cell_));
    const int max_ring =
        std::max({std::abs(px), std::abs(px - (nx_ - 1)), std::abs(py), std::abs(py - (ny_ - 1))});

    for (int r = 0; r <= max_ring; ++r) {
        for (int cy = py - r; cy <= py + r; ++cy) {
            if (cy < 0 || cy >= ny_) {
                continue;
            }
            const bool edge_row = cy == py - r || cy == py + r;
            for (int cx = px - r; cx <= px + r; cx += (edge_row ? 1 : 2 * r)) {
                if (cx >= 0 && cx < nx_) {
                    for (std::uint32_t seg : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
                        consider(seg);
                    }
                }
                if (r == 0) {
                    break;
                }
            }
        }
        // Anything in ring r+1 or beyond is at least r cells away.
        if (best.distance < r * cell_) {
            break;
        }
    }
    return best;
}

std::vector<Point> builtin_route(int route, double total_length) {
    if (!(std::isfinite(total_length) && total_length > 0.0)) {
        throw ConfigError("route total length must be positive");
    }
    RouteBuilder b;
    switch (route) {
    case 1: // open loop, ends well clear of its own start
        b.straight(50).arc(12, 90).straight(30).arc(12, 90).straight(40).arc(10, 90).straight(26.6);
        break;
    case 2: // S-course of alternating half-turns
        b.straight(20).arc(15, 90).arc(15, -180).arc(15, 180).straight(62.2);
        break;
    case 3: // city-grid circuit with right-angle corners
        b.straight(40).arc(8, 90).straight(30).arc(8, -90).straight(30).arc(8, -90).straight(30).arc(8, 90).straight(19.7);
        break;
    case 4: // figure-eight opened at the crossing: clockwise lobe, tangent link, counter-clockwise lobe
        b.face(-135).arc(12, -270).straight(24.04).arc(12, 225);
        break;
    default:
        throw UnknownRoute("unknown route " + std::to_string(route) + " (valid: 1-4)");
    }
    return b.scaled_to(total_length);
}

std::uint32_t CoinSet::collected() const {
    return static_cast<std::uint32_t>(
        std::count_if(coins.begin(), coins.end(), [](const Coin &c) { return c.collected; }));
}

void CoinSet::reset() {
    for (Coin &c : coins) {
        c.collected = false;
    }
}

CoinSet place_coins(const CourseGeometry &course, double spacing, double pickup_radius) {
    if (!(std::isfinite(spacing) && spacing > 0.0)) {
        throw ConfigError("coin spacing must be positive");
    }
    if (!(std::isfinite(pickup_radius) && pickup_radius > 0.0)) {
        throw ConfigError("pickup radius must be positive");
    }
    CoinSet set;
    set.spacing = spacing;
    set.pickup_radius = pickup_radius;
    // The tolerance keeps a coin exactly at the route end despite rounding in the arc sum.
    const auto n = static_cast<std::size_t>(std::floor(course.total_length() / spacing + 1e-9));
    set.coins.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) {
        const double arc = std::min(static_cast<double>(k) * spacing, course.total_length());
        set.coins.push_back({arc, course.point_at(arc), false});
    }
    return set;
}

Course generate_course(const CourseSpec &spec) {
    std::vector<Point> pts =
        spec.custom_centerline.empty() ? builtin_route(spec.route, spec.total_length) : spec.custom_centerline;
    CourseGeometry geometry(std::move(pts), spec.corridor_half_width);
    CoinSet coins = place_coins(geometry, spec.spacing, spec.pickup_radius);
    return {std::move(geometry), std::move(coins)};
}

std::optional<CollisionEvent> check_collision(const dynamics::VehicleState &s, const CourseGeometry &course) {
    const Projection proj = course.project({s.x, s.y});
    if (proj.distance > course.corridor_half_width()) {
        return CollisionEvent{proj.distance, proj.arc};
    }
    return std::nullopt;
}

Respawn resolve_fail(const dynamics::VehicleState &s, const CourseGeometry &course, double progress) {
    const Projection proj = course.project({s.x, s.y});
    const double arc = std::clamp(std::min(proj.arc, progress), 0.0, course.total_length());
    const Point p = course.point_at(arc);
    Respawn out;
    out.arc = arc;
    out.state = s;
    out.state.x = p.x;
    out.state.y = p.y;
    out.state.heading = wrap_rad(course.heading_at(arc));
    out.state.speed = 0.0;
    return out;
}

dynamics::VehicleState start_state(const CourseGeometry &course, std::uint64_t tick) {
    const Point p = course.centerline().front();
    dynamics::VehicleState s;
    s.x = p.x;
    s.y = p.y;
    s.heading = wrap_rad(course.heading_at(0.0));
    s.tick = tick;
    return s;
}

std::vector<std::size_t> update_pickup(const dynamics::VehicleState &s, CoinSet &coins) {
    std::vector<std::size_t> got;
    for (std::size_t i = 0; i < coins.coins.size(); ++i) {
        Coin &c = coins.coins[i];
        if (!c.collected && dist({s.x, s.y}, c.position) <= coins.pickup_radius) {
            c.collected = true;
            got.push_back(i);
        }
    }
    return got;
}

const char *to_string(TrialPhase p) {
    switch (p) {
    case TrialPhase::training: return "training";
    case TrialPhase::running: return "running";
    case TrialPhase::complete: return "complete";
    case TrialPhase::aborted: return "aborted";
    }
    return "?";
}

bool trial_status(TrialStatus &trial, const CoinSet &coins, const CourseGeometry &course, std::uint64_t tick) {
    trial.coins_collected = coins.collected();
    trial.coins_total = coins.total();
    if (trial.phase == TrialPhase::running && trial.progress >= course.total_length()) {
        trial.phase = TrialPhase::complete;
        trial.end_tick = tick;
        return true;
    }
    return false;
}

void abort_trial(TrialStatus &trial, std::uint64_t tick) {
    if (trial.terminal()) {
        return;
    }
    trial.phase = TrialPhase::aborted;
    trial.end_tick = tick;
}

} // namespace ridesim::scenario
