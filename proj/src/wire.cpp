#include "ridesim/wire.hpp"

#include <array>
#include <cmath>
#include <initializer_list>

#include <json.hpp>

#include "ridesim/errors.hpp"

namespace ridesim::wire {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 10> kKindNames = {
    "hello", "imu", "fsr", "throttle", "set_vehicle", "calibrate", "state", "event", "ack", "error"};

constexpr std::array<std::string_view, 5> kPhaseNames = {
    "fsr_baseline_begin", "fsr_baseline_end", "fsr_max_begin", "fsr_max_end", "imu_zero"};

constexpr std::array<std::string_view, 6> kEventNames = {
    "coin", "collision", "respawn", "trial_complete", "stale_drop", "calibrated"};

template <std::size_t N>
int index_of(const std::array<std::string_view, N> &names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

[[noreturn]] void violation(const std::string &what) { throw SchemaViolation(what); }

void require_finite(double v, const char *field) {
    if (!std::isfinite(v)) {
        violation(std::string("field '") + field + "' must be finite");
    }
}

void require_angle(double v, const char *field) {
    require_finite(v, field);
    if (std::abs(v) > 180.0) {
        violation(std::string("field '") + field + "' must lie within [-180, 180]");
    }
}

void require_adc(std::uint32_t v, const char *field) {
    if (v > kAdcMax) {
        violation(std::string("field '") + field + "' exceeds the 12-bit ADC range");
    }
}

void validate_sender(const std::string &s) {
    if (s.empty() || s.size() > kMaxSenderLength) {
        violation("sender must be 1-64 bytes");
    }
    for (unsigned char c : s) {
        if (c < 0x20 || c == 0x7f) {
            violation("sender contains control characters");
        }
    }
}

struct PayloadValidator {
    void operator()(const Hello &) const {}
    void operator()(const Imu &imu) const {
        if (const auto *e = std::get_if<EulerAngles>(&imu.data)) {
            require_angle(e->pitch, "pitch");
            require_angle(e->roll, "roll");
            require_angle(e->yaw, "yaw");
        } else {
            const auto &r = std::get<RawImu>(imu.data);
            for (double v : {r.ax, r.ay, r.az, r.gx, r.gy, r.gz, r.mx, r.my, r.mz}) {
                require_finite(v, "raw imu component");
            }
        }
    }
    void operator()(const Fsr &f) const {
        require_adc(f.front, "front");
        require_adc(f.rear, "rear");
    }
    void operator()(const Throttle &t) const { require_adc(t.raw, "raw"); }
    void operator()(const SetVehicle &) const {}
    void operator()(const Calibrate &) const {}
    void operator()(const State &s) const {
        require_finite(s.x, "x");
        require_finite(s.y, "y");
        require_finite(s.heading, "heading");
        require_finite(s.speed, "speed");
        require_finite(s.steering_cmd, "steering_cmd");
        require_finite(s.velocity_cmd, "velocity_cmd");
        if (s.coins_collected > s.coins_total) {
            violation("coins_collected exceeds coins_total");
        }
    }
    void operator()(const Event &) const {}
    void operator()(const Ack &) const {}
    void operator()(const ErrorReply &) const {}
};

// -- encoding ---------------------------------------------------------------

struct PayloadWriter {
    ordered_json &j;

    void operator()(const Hello &) const {}
    void operator()(const Imu &imu) const {
        if (const auto *e = std::get_if<EulerAngles>(&imu.data)) {
            j["mode"] = "euler";
            j["pitch"] = e->pitch;
            j["roll"] = e->roll;
            j["yaw"] = e->yaw;
        } else {
            const auto &r = std::get<RawImu>(imu.data);
            j["mode"] = "raw";
            j["ax"] = r.ax;
            j["ay"] = r.ay;
            j["az"] = r.az;
            j["gx"] = r.gx;
            j["gy"] = r.gy;
            j["gz"] = r.gz;
            j["mx"] = r.mx;
            j["my"] = r.my;
            j["mz"] = r.mz;
        }
    }
    void operator()(const Fsr &f) const {
        j["front"] = f.front;
        j["rear"] = f.rear;
    }
    void operator()(const Throttle &t) const { j["raw"] = t.raw; }
    void operator()(const SetVehicle &s) const { j["vehicle"] = std::string(ridesim::to_string(s.vehicle)); }
    void operator()(const Calibrate &c) const { j["phase"] = std::string(to_string(c.phase)); }
    void operator()(const State &s) const {
        j["tick"] = s.tick;
        j["x"] = s.x;
        j["y"] = s.y;
        j["heading"] = s.heading;
        j["speed"] = s.speed;
        j["steering_cmd"] = s.steering_cmd;
        j["velocity_cmd"] = s.velocity_cmd;
        j["coins_collected"] = s.coins_collected;
        j["coins_total"] = s.coins_total;
    }
    void operator()(const Event &e) const {
        j["tick"] = e.tick;
        j["name"] = std::string(to_string(e.name));
        j["detail"] = e.detail;
    }
    void operator()(const Ack &a) const { j["ref_seq"] = a.ref_seq; }
    void operator()(const ErrorReply &e) const {
        j["ref_seq"] = e.ref_seq;
        j["message"] = e.message;
    }
};

// -- decoding ---------------------------------------------------------------

class FieldReader {
public:
    explicit FieldReader(const json &obj) : obj_(obj) {}

    const json &field(const char *name) {
        auto it = obj_.find(name);
        if (it == obj_.end()) {
            violation(std::string("missing field '") + name + "'");
        }
        ++consumed_;
        return *it;
    }

    double number(const char *name) {
        const json &v = field(name);
        if (!v.is_number()) {
            violation(std::string("field '") + name + "' must be a number");
        }
        return v.get<double>();
    }

    std::uint64_t u64(const char *name) {
        const json &v = field(name);
        if (!v.is_number_unsigned()) {
            violation(std::string("field '") + name + "' must be an unsigned integer");
        }
        return v.get<std::uint64_t>();
    }

    std::uint32_t u32(const char *name) {
        std::uint64_t v = u64(name);
        if (v > 0xffffffffULL) {
            violation(std::string("field '") + name + "' out of range");
        }
        return static_cast<std::uint32_t>(v);
    }

    std::string string(const char *name) {
        const json &v = field(name);
        if (!v.is_string()) {
            violation(std::string("field '") + name + "' must be a string");
        }
        return v.get<std::string>();
    }

    void finish() const {
        if (consumed_ != obj_.size()) {
            violation("unexpected extra fields");
        }
    }

private:
    const json &obj_;
    std::size_t consumed_ = 0;
};

Payload read_payload(Kind kind, FieldReader &r) {
    switch (kind) {
    case Kind::hello:
        return Hello{};
    case Kind::imu: {
        std::string mode = r.string("mode");
        if (mode == "euler") {
            EulerAngles e;
            e.pitch = r.number("pitch");
            e.roll = r.number("roll");
            e.yaw = r.number("yaw");
            return Imu{e};
        }
        if (mode == "raw") {
            RawImu raw;
            raw.ax = r.number("ax");
            raw.ay = r.number("ay");
            raw.az = r.number("az");
            raw.gx = r.number("gx");
            raw.gy = r.number("gy");
            raw.gz = r.number("gz");
            raw.mx = r.number("mx");
            raw.my = r.number("my");
            raw.mz = r.number("mz");
            return Imu{raw};
        }
        violation("imu mode must be 'euler' or 'raw'");
    }
    case Kind::fsr: {
        Fsr f;
        f.front = r.u32("front");
        f.rear = r.u32("rear");
        return f;
    }
    case Kind::throttle:
        return Throttle{r.u32("raw")};
    case Kind::set_vehicle: {
        auto v = vehicle_from_string(r.string("vehicle"));
        if (!v) {
            violation("unknown vehicle");
        }
        return SetVehicle{*v};
    }
    case Kind::calibrate: {
        int idx = index_of(kPhaseNames, r.string("phase"));
        if (idx < 0) {
            violation("unknown calibration phase");
        }
        return Calibrate{static_cast<CalibrationPhase>(idx)};
    }
    case Kind::state: {
        State s;
        s.tick = r.u64("tick");
        s.x = r.number("x");
        s.y = r.number("y");
        s.heading = r.number("heading");
        s.speed = r.number("speed");
        s.steering_cmd = r.number("steering_cmd");
        s.velocity_cmd = r.number("velocity_cmd");
        s.coins_collected = r.u32("coins_collected");
        s.coins_total = r.u32("coins_total");
        return s;
    }
    case Kind::event: {
        Event e;
        e.tick = r.u64("tick");
        int idx = index_of(kEventNames, r.string("name"));
        if (idx < 0) {
            violation("unknown event name");
        }
        e.name = static_cast<EventName>(idx);
        e.detail = r.string("detail");
        return e;
    }
    case Kind::ack:
        return Ack{r.u64("ref_seq")};
    case Kind::error: {
        ErrorReply e;
        e.ref_seq = r.u64("ref_seq");
        e.message = r.string("message");
        return e;
    }
    }
    violation("unhandled kind");
}

} // namespace

std::string_view to_string(Kind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(CalibrationPhase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(EventName e) { return kEventNames[static_cast<std::size_t>(e)]; }

void validate(const WireMessage &msg) {
    validate_sender(msg.sender);
    std::visit(PayloadValidator{}, msg.payload);
}

std::string encode_object(const WireMessage &msg) {
    validate(msg);
    ordered_json j;
    j["kind"] = std::string(to_string(msg.kind()));
    j["sender"] = msg.sender;
    j["seq"] = msg.seq;
    j["t_ms"] = msg.t_ms;
    std::visit(PayloadWriter{j}, msg.payload);
    try {
        return j.dump();
    } catch (const nlohmann::json::exception &e) {
        throw SchemaViolation(std::string("unencodable string field: ") + e.what());
    }
}

std::string encode(const WireMessage &msg) { return encode_object(msg) + '\n'; }

WireMessage decode(std::string_view frame) {
    if (!frame.empty() && frame.back() == '\n') {
        frame.remove_suffix(1);
        if (!frame.empty() && frame.back() == '\r') {
            frame.remove_suffix(1);
        }
    }
    json j = json::parse(frame.begin(), frame.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
        throw MalformedFrame("frame is not a complete JSON object");
    }
    if (!j.is_object()) {
        throw MalformedFrame("frame is not a JSON object");
    }

    FieldReader r(j);
    std::string kind_name = r.string("kind");
    int kind_idx = index_of(kKindNames, kind_name);
    if (kind_idx < 0) {
        throw UnknownKind("unknown message kind '" + kind_name + "'");
    }

    WireMessage msg;
    msg.sender = r.string("sender");
    msg.seq = r.u64("seq");
    msg.t_ms = r.u64("t_ms");
    msg.payload = read_payload(static_cast<Kind>(kind_idx), r);
    r.finish();
    validate(msg);
    return msg;
}

Staleness SeqTable::admit(const WireMessage &msg) {
    auto it = last_.find(msg.sender);
    if (it == last_.end()) {
        last_.emplace(msg.sender, msg.seq);
        return Staleness::accept;
    }
    if (staleness_check(it->second, msg) == Staleness::drop) {
        return Staleness::drop;
    }
    it->second = msg.seq;
    return Staleness::accept;
}

std::uint64_t SeqTable::last(const std::string &sender) const {
    auto it = last_.find(sender);
    return it == last_.end() ? 0 : it->second;
}

} // namespace ridesim::wire
