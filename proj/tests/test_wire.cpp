#include <doctest.h>

#include <json.hpp>

#include "ridesim/errors.hpp"
#include "ridesim/wire.hpp"
#include "support.hpp"

using namespace ridesim;
using namespace ridesim::wire;

TEST_SUITE("wire") {

TEST_CASE("imu euler frame carries kind and all three angles and round-trips") {
    const WireMessage m = testing::msg("imu-1", 1, Imu{EulerAngles{0.0, 0.0, 0.0}});
    const std::string frame = encode(m);
    CHECK(frame.back() == '\n');
    CHECK(frame.find("\"kind\":\"imu\"") != std::string::npos);
    for (const char *f : {"\"pitch\":", "\"roll\":", "\"yaw\":"}) {
        CHECK(frame.find(f) != std::string::npos);
    }
    CHECK(decode(frame) == m);
}

TEST_CASE("fsr boundary values round-trip") {
    const WireMessage m = testing::msg("insole", 7, Fsr{0, 4095});
    CHECK(decode(encode(m)) == m);
}

TEST_CASE("field order is fixed: common fields, then payload in schema order") {
    WireMessage m = testing::msg("s", 3, State{9, 1.5, -2.0, 0.25, 3.0, 0.1, 0.2, 1, 20});
    m.t_ms = 42;
    CHECK(encode(m) ==
          "{\"kind\":\"state\",\"sender\":\"s\",\"seq\":3,\"t_ms\":42,\"tick\":9,\"x\":1.5,\"y\":-2.0,"
          "\"heading\":0.25,\"speed\":3.0,\"steering_cmd\":0.1,\"velocity_cmd\":0.2,\"coins_collected\":1,"
          "\"coins_total\":20}\n");
    m.payload = Imu{RawImu{1, 2, 3, 4, 5, 6, 7, 8, 9}};
    CHECK(encode_object(m) ==
          "{\"kind\":\"imu\",\"sender\":\"s\",\"seq\":3,\"t_ms\":42,\"mode\":\"raw\",\"ax\":1.0,\"ay\":2.0,"
          "\"az\":3.0,\"gx\":4.0,\"gy\":5.0,\"gz\":6.0,\"mx\":7.0,\"my\":8.0,\"mz\":9.0}");
}

TEST_CASE("decode accepts fields in any order and a CRLF terminator") {
    const WireMessage m = decode("{\"rear\":5,\"front\":4,\"t_ms\":1,\"seq\":2,\"sender\":\"a\",\"kind\":\"fsr\"}\r\n");
    CHECK(m.sender == "a");
    CHECK(std::get<Fsr>(m.payload) == Fsr{4, 5});
    CHECK(m.seq == 2);
    CHECK(m.t_ms == 1);
}

TEST_CASE("imu without angles is a schema violation") {
    CHECK_THROWS_AS(decode(R"({"kind":"imu","sender":"a","seq":1,"t_ms":0,"mode":"euler"})"), SchemaViolation);
    CHECK_THROWS_AS(decode(R"({"kind":"imu","sender":"a","seq":1,"t_ms":0})"), SchemaViolation);
}

TEST_CASE("unknown kind") {
    CHECK_THROWS_AS(decode(R"({"kind":"teleport","sender":"a","seq":1,"t_ms":0})"), UnknownKind);
}

TEST_CASE("truncated or non-object frames are malformed") {
    const std::string good = encode(testing::msg("a", 1, Throttle{100}));
    for (std::size_t n = 0; n + 2 < good.size(); ++n) {
        CHECK_THROWS_AS(decode(good.substr(0, n)), MalformedFrame);
    }
    CHECK_THROWS_AS(decode("[1,2,3]"), MalformedFrame);
    CHECK_THROWS_AS(decode("\"imu\""), MalformedFrame);
}

TEST_CASE("schema violations") {
    const char *frames[] = {
        R"({"kind":"fsr","sender":"a","seq":1,"t_ms":0,"front":4096,"rear":0})",
        R"({"kind":"fsr","sender":"a","seq":1,"t_ms":0,"front":-1,"rear":0})",
        R"({"kind":"fsr","sender":"a","seq":1,"t_ms":0,"front":1.5,"rear":0})",
        R"({"kind":"fsr","sender":"a","seq":1,"t_ms":0,"front":1})",
        R"({"kind":"fsr","sender":"a","seq":1,"t_ms":0,"front":1,"rear":2,"extra":3})",
        R"({"kind":"throttle","sender":"a","seq":-1,"t_ms":0,"raw":1})",
        R"({"kind":"throttle","sender":"","seq":1,"t_ms":0,"raw":1})",
        R"({"kind":"throttle","seq":1,"t_ms":0,"raw":1})",
        R"({"kind":"throttle","sender":"a","seq":"1","t_ms":0,"raw":1})",
        R"({"kind":"imu","sender":"a","seq":1,"t_ms":0,"mode":"euler","pitch":180.5,"roll":0,"yaw":0})",
        R"({"kind":"imu","sender":"a","seq":1,"t_ms":0,"mode":"quaternion","pitch":0,"roll":0,"yaw":0})",
        R"({"kind":"imu","sender":"a","seq":1,"t_ms":0,"mode":"euler","pitch":0,"roll":0,"yaw":0,"ax":1})",
        R"({"kind":"set_vehicle","sender":"a","seq":1,"t_ms":0,"vehicle":"hoverboard"})",
        R"({"kind":"calibrate","sender":"a","seq":1,"t_ms":0,"phase":"warmup"})",
        R"({"kind":"event","sender":"a","seq":1,"t_ms":0,"tick":1,"name":"explosion","detail":""})",
        R"({"kind":"state","sender":"a","seq":1,"t_ms":0,"tick":1,"x":0,"y":0,"heading":0,"speed":0,"steering_cmd":0,"velocity_cmd":0,"coins_collected":3,"coins_total":2})",
        R"({"kind":"hello","sender":"a","seq":1,"t_ms":0,"version":2})",
        R"({"kind":7,"sender":"a","seq":1,"t_ms":0})",
    };
    for (const char *f : frames) {
        CAPTURE(f);
        CHECK_THROWS_AS(decode(f), SchemaViolation);
    }
    std::string long_sender(65, 'x');
    CHECK_THROWS_AS(decode("{\"kind\":\"hello\",\"sender\":\"" + long_sender + "\",\"seq\":1,\"t_ms\":0}"),
                    SchemaViolation);
}

TEST_CASE("encode refuses invalid messages") {
    CHECK_THROWS_AS(encode(testing::msg("a", 1, Fsr{5000, 0})), SchemaViolation);
    CHECK_THROWS_AS(encode(testing::msg("", 1, Hello{})), SchemaViolation);
    CHECK_THROWS_AS(encode(testing::msg("a", 1, Imu{EulerAngles{0, 0, std::nan("")}})), SchemaViolation);
    CHECK_THROWS_AS(encode(testing::msg("a\n", 1, Hello{})), SchemaViolation);
}

TEST_CASE("staleness_check examples") {
    CHECK(staleness_check(5, testing::msg("a", 6, Hello{})) == Staleness::accept);
    CHECK(staleness_check(5, testing::msg("a", 5, Hello{})) == Staleness::drop);
    CHECK(staleness_check(5, testing::msg("a", 3, Hello{})) == Staleness::drop);
}

TEST_CASE("seq table is per sender and only ever increases") {
    SeqTable t;
    CHECK(t.admit(testing::msg("a", 0, Hello{})) == Staleness::accept); // first sighting
    CHECK(t.admit(testing::msg("b", 9, Hello{})) == Staleness::accept);
    CHECK(t.admit(testing::msg("a", 0, Hello{})) == Staleness::drop);
    CHECK(t.admit(testing::msg("a", 4, Hello{})) == Staleness::accept);
    CHECK(t.admit(testing::msg("b", 4, Hello{})) == Staleness::drop);
    CHECK(t.last("a") == 4);
    CHECK(t.last("b") == 9);

    testing::Rng rng(11);
    SeqTable u;
    std::uint64_t accepted_last = 0;
    bool any = false;
    for (int i = 0; i < 5000; ++i) {
        const auto seq = testing::uniform_u64(rng, 0, 300);
        if (u.admit(testing::msg("z", seq, Hello{})) == Staleness::accept) {
            CHECK((!any || seq > accepted_last));
            accepted_last = seq;
            any = true;
        }
    }
}

TEST_CASE("randomized round trip") {
    testing::Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const WireMessage m = testing::random_message(rng);
        const std::string frame = encode(m);
        REQUIRE(std::count(frame.begin(), frame.end(), '\n') == 1);
        const WireMessage back = decode(frame);
        CHECK(back == m);
        CHECK(encode(back) == frame);
    }
}

TEST_CASE("decode on arbitrary bytes yields a message or one of the three errors") {
    testing::Rng rng(2);
    auto attempt = [](const std::string &bytes) {
        try {
            (void)decode(bytes);
        } catch (const MalformedFrame &) {
        } catch (const SchemaViolation &) {
        } catch (const UnknownKind &) {
        }
    };
    for (int i = 0; i < 2000; ++i) {
        std::string bytes(testing::uniform_u64(rng, 0, 64), '\0');
        for (char &c : bytes) {
            c = static_cast<char>(testing::uniform_u64(rng, 0, 255));
        }
        CHECK_NOTHROW(attempt(bytes));
    }
    // Mutations of valid frames reach deeper into the schema checks.
    for (int i = 0; i < 2000; ++i) {
        std::string frame = encode(testing::random_message(rng));
        const auto edits = testing::uniform_u64(rng, 1, 4);
        for (std::uint64_t e = 0; e < edits && !frame.empty(); ++e) {
            frame[testing::uniform_u64(rng, 0, frame.size() - 1)] = static_cast<char>(testing::uniform_u64(rng, 0, 255));
        }
        CHECK_NOTHROW(attempt(frame));
    }
}

} // TEST_SUITE
