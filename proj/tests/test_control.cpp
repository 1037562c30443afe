#include <doctest.h>

#include "ridesim/control.hpp"
#include "ridesim/errors.hpp"
#include "properties.hpp"

using namespace ridesim;
using namespace ridesim::control;
using doctest::Approx;

namespace {

SensorFrame frame(double pitch, double roll, double yaw, double front = 0, double rear = 0, double throttle = 0) {
    SensorFrame f;
    f.orientation = {pitch, roll, yaw};
    f.fsr_front = front;
    f.fsr_rear = rear;
    f.throttle = throttle;
    return f;
}

} // namespace

TEST_SUITE("control") {

TEST_CASE("default full scales per vehicle") {
    CHECK(MappingParams::defaults_for(Vehicle::escooter).yaw_full_scale == 45.0);
    CHECK(MappingParams::defaults_for(Vehicle::segway).roll_full_scale == 20.0);
    CHECK(MappingParams::defaults_for(Vehicle::unicycle).pitch_full_scale == 15.0);
    CHECK(MappingParams::defaults_for(Vehicle::unicycle).yaw_full_scale == 30.0);
    CHECK(MappingParams::defaults_for(Vehicle::skateboard).pitch_full_scale == 15.0);
    CHECK(MappingParams::defaults_for(Vehicle::skateboard).roll_full_scale == 15.0);
    for (Vehicle v : kAllVehicles) {
        CHECK(MappingParams::defaults_for(v).dead_zone == 0.1);
    }
}

TEST_CASE("e-scooter examples") {
    const MappingParams p = MappingParams::defaults_for(Vehicle::escooter);
    CHECK(map_escooter(frame(0, 0, 0, 0, 0, 0), p) == ControlInput{0, 0});
    CHECK(map_escooter(frame(0, 0, 45, 0, 0, 1), p) == ControlInput{1, 1});
    const ControlInput c = map_escooter(frame(0, 0, 24.75, 0, 0, 0.3), p);
    CHECK(c.steering == Approx(0.5).epsilon(1e-12));
    CHECK(c.velocity_cmd == 0.3);
}

TEST_CASE("segway examples") {
    const MappingParams p = MappingParams::defaults_for(Vehicle::segway);
    CHECK(map_segway(frame(0, 0, 0, 0.6, 0.6), p) == ControlInput{0, 0});
    CHECK(map_segway(frame(0, 0, 0, 1, 0), p) == ControlInput{0, 1});
    CHECK(map_segway(frame(0, 0, 0, 0.2, 0.75), p).velocity_cmd == Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("unicycle examples") {
    const MappingParams p = MappingParams::defaults_for(Vehicle::unicycle);
    CHECK(map_unicycle(frame(0, 0, 0), p) == ControlInput{0, 0});
    CHECK(map_unicycle(frame(15, 0, 0), p).velocity_cmd == 1.0);
    CHECK(map_unicycle(frame(-8.25, 0, 0), p).velocity_cmd == Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("skateboard examples") {
    const MappingParams p = MappingParams::defaults_for(Vehicle::skateboard);
    CHECK(map_skateboard(frame(0, 0, 0), p) == ControlInput{0, 0});
    CHECK(map_skateboard(frame(0, -15, 0), p).steering == -1.0);
    CHECK(map_skateboard(frame(0, 8.25, 0), p).steering == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("active_controller isolates channels and dispatches by vehicle") {
    const SensorFrame fsr_heavy = frame(0, 0, 0, 1.0, 0.0, 0.0);
    CHECK(active_controller(Vehicle::escooter, fsr_heavy, MappingParams::defaults_for(Vehicle::escooter)) ==
          ControlInput{0, 0});
    const SensorFrame throttle_full = frame(0, 0, 0, 0.5, 0.5, 1.0);
    CHECK(active_controller(Vehicle::segway, throttle_full, MappingParams::defaults_for(Vehicle::segway)) ==
          ControlInput{0, 0});

    // Same 6° frame: the unicycle steers from yaw, the skateboard from roll.
    const SensorFrame six = frame(6, 6, 6);
    const ControlInput uni = active_controller(Vehicle::unicycle, six, MappingParams::defaults_for(Vehicle::unicycle));
    const ControlInput sk = active_controller(Vehicle::skateboard, six, MappingParams::defaults_for(Vehicle::skateboard));
    CHECK(uni.steering == Approx((6.0 / 30.0 - 0.1) / 0.9).epsilon(1e-12));
    CHECK(sk.steering == Approx((6.0 / 15.0 - 0.1) / 0.9).epsilon(1e-12));
    CHECK(uni.velocity_cmd == Approx((6.0 / 15.0 - 0.1) / 0.9).epsilon(1e-12));
    CHECK(sk.velocity_cmd == uni.velocity_cmd);

    CHECK_THROWS_AS(active_controller(std::nullopt, six, MappingParams{}), NoVehicleSelected);
}

TEST_CASE("controllers share one interface") {
    for (Vehicle v : kAllVehicles) {
        const auto c = make_controller(v, MappingParams::defaults_for(v));
        CHECK(c->vehicle() == v);
        CHECK(c->allows_reverse() == (v != Vehicle::escooter));
    }
}

TEST_CASE("saturation beyond full scale") {
    const MappingParams p = MappingParams::defaults_for(Vehicle::unicycle);
    CHECK(map_unicycle(frame(80, 0, -170), p) == ControlInput{-1, 1});
}

TEST_CASE("mapping parameter validation") {
    MappingParams p;
    CHECK_NOTHROW(p.validate());
    p.roll_full_scale = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.dead_zone = -0.1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("range, isolation, sign and monotonicity on random frames") {
    const testing::Report r = testing::mapping_conformance(2000, 9);
    INFO(r.first_failure);
    CHECK(r.ok());
    CHECK(r.cases == 8000);
}

} // TEST_SUITE
