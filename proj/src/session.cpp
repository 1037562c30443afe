#include "ridesim/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ridesim/angles.hpp"
#include "ridesim/errors.hpp"
#include "ridesim/telemetry.hpp"

namespace ridesim {

using nlohmann::ordered_json;

namespace {

std::string format(const char *fmt, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

ordered_json age_json(const std::optional<std::uint64_t> &age) {
    return age ? ordered_json(*age) : ordered_json(nullptr);
}

const SessionConfig &validated(const SessionConfig &cfg) {
    cfg.validate();
    return cfg;
}

} // namespace

ordered_json state_payload(const wire::State &s) {
    ordered_json j;
    j["tick"] = s.tick;
    j["x"] = s.x;
    j["y"] = s.y;
    j["heading"] = s.heading;
    j["speed"] = s.speed;
    j["steering_cmd"] = s.steering_cmd;
    j["velocity_cmd"] = s.velocity_cmd;
    j["coins_collected"] = s.coins_collected;
    j["coins_total"] = s.coins_total;
    return j;
}

Session::Session(SessionConfig cfg, Outbox *outbox, telemetry::LogWriter *log)
    : cfg_(std::move(cfg)),
      outbox_(outbox),
      log_(log),
      epoch_(Clock::now()),
      course_(scenario::generate_course(validated(cfg_).course)),
      filter_(cfg_.filter_alpha) {
    state_ = scenario::start_state(course_.geometry, 0);
    reset_trial();
    if (cfg_.vehicle) {
        select_vehicle(*cfg_.vehicle);
    }
}

Session::~Session() = default;

std::optional<Vehicle> Session::active_vehicle() const {
    return controller_ ? std::optional<Vehicle>(controller_->vehicle()) : std::nullopt;
}

double Session::now_ms() const { return to_ms(Clock::now()); }

double Session::to_ms(Clock::time_point t) const {
    return std::chrono::duration<double, std::milli>(t - epoch_).count();
}

wire::WireMessage Session::outbound(wire::Payload payload) {
    wire::WireMessage m;
    m.sender = kEngineSender;
    m.seq = ++out_seq_;
    m.t_ms = static_cast<std::uint64_t>(std::max(0.0, now_ms()));
    m.payload = std::move(payload);
    return m;
}

void Session::reply(ClientId origin, wire::Payload payload) {
    if (outbox_ && origin != kLocalClient) {
        outbox_->send(origin, outbound(std::move(payload)));
    }
}

void Session::queue_event(wire::EventName name, std::string detail) {
    // Stamped with the tick that flushes it.
    pending_events_.push_back({wire::Event{0, name, std::move(detail)}, now_ms()});
}

void Session::reject_frame(ClientId origin, const std::string &reason) {
    reply(origin, wire::ErrorReply{0, reason});
}

IngestResult Session::ingest(const wire::WireMessage &msg, ClientId origin,
                             std::optional<Clock::time_point> received) {
    const double t = received ? to_ms(*received) : now_ms();
    if (log_) {
        log_->append({tick_ + 1, t, telemetry::Stream::sensor_in, ordered_json::parse(wire::encode_object(msg))});
    }
    const std::uint64_t last = seqs_.last(msg.sender);
    if (seqs_.admit(msg) == wire::Staleness::drop) {
        ++stale_drops_;
        queue_event(wire::EventName::stale_drop,
                    format("sender=%s seq=%llu last=%llu", msg.sender.c_str(),
                           static_cast<unsigned long long>(msg.seq), static_cast<unsigned long long>(last)));
        return IngestResult::dropped;
    }
    return apply(msg, origin);
}

IngestResult Session::reject(ClientId origin, std::uint64_t seq, const std::string &why) {
    reply(origin, wire::ErrorReply{seq, why});
    return IngestResult::rejected;
}

IngestResult Session::apply(const wire::WireMessage &msg, ClientId origin) {
    const std::uint64_t upcoming = tick_ + 1;
    switch (msg.kind()) {
    case wire::Kind::hello:
        reply(origin, wire::Ack{msg.seq});
        return IngestResult::accepted;
    case wire::Kind::imu:
        return apply_imu(std::get<wire::Imu>(msg.payload), origin, msg.seq);
    case wire::Kind::fsr: {
        const auto &fsr = std::get<wire::Fsr>(msg.payload);
        if (cal_stage_ != CalibrationStage::idle) {
            cal_samples_.push_back(fsr);
        }
        const auto &p = cfg_.calibration;
        frame_.fsr_front = calibration::normalize_fsr(fsr.front, p.fsr_baseline.front, p.fsr_max.front);
        frame_.fsr_rear = calibration::normalize_fsr(fsr.rear, p.fsr_baseline.rear, p.fsr_max.rear);
        fsr_tick_ = upcoming;
        return IngestResult::accepted;
    }
    case wire::Kind::throttle: {
        const auto &th = std::get<wire::Throttle>(msg.payload);
        frame_.throttle =
            calibration::normalize_fsr(th.raw, cfg_.calibration.throttle_min, cfg_.calibration.throttle_max);
        throttle_tick_ = upcoming;
        return IngestResult::accepted;
    }
    case wire::Kind::set_vehicle:
        return apply_set_vehicle(std::get<wire::SetVehicle>(msg.payload).vehicle, origin, msg.seq);
    case wire::Kind::calibrate:
        return apply_calibrate(std::get<wire::Calibrate>(msg.payload).phase, origin, msg.seq);
    case wire::Kind::state:
    case wire::Kind::event:
    case wire::Kind::ack:
    case wire::Kind::error:
        break;
    }
    return reject(origin, msg.seq, std::string("'") + std::string(wire::to_string(msg.kind())) +
                                       "' is an outbound-only message kind");
}

IngestResult Session::apply_imu(const wire::Imu &imu, ClientId origin, std::uint64_t seq) {
    fusion::OrientationEstimate est;
    if (const auto *e = std::get_if<wire::EulerAngles>(&imu.data)) {
        est = {e->pitch, e->roll, wrap_deg(e->yaw), fusion::Source::onboard};
    } else {
        const auto &r = std::get<wire::RawImu>(imu.data);
        try {
            est = fusion::estimate_static({r.ax, r.ay, r.az}, {r.mx, r.my, r.mz});
        } catch (const DegenerateInput &e) {
            return reject(origin, seq, e.what());
        }
    }
    held_orientation_ = filter_.smooth(est);
    realign();
    imu_tick_ = tick_ + 1;
    return IngestResult::accepted;
}

IngestResult Session::apply_set_vehicle(Vehicle v, ClientId origin, std::uint64_t seq) {
    if (cal_stage_ != CalibrationStage::idle) {
        return reject(origin, seq, "set_vehicle is not allowed while an FSR capture is open");
    }
    select_vehicle(v);
    reply(origin, wire::Ack{seq});
    return IngestResult::command_applied;
}

IngestResult Session::apply_calibrate(wire::CalibrationPhase phase, ClientId origin, std::uint64_t seq) {
    using wire::CalibrationPhase;
    auto &profile = cfg_.calibration;

    auto finish_capture = [&](calibration::CapturePhase which) -> IngestResult {
        cal_stage_ = CalibrationStage::idle;
        calibration::FsrBounds got;
        try {
            got = calibration::capture_fsr(cal_samples_, which, profile);
        } catch (const Error &e) {
            cal_samples_.clear();
            return reject(origin, seq, e.what());
        }
        cal_samples_.clear();
        const bool base = which == calibration::CapturePhase::baseline;
        (base ? profile.fsr_baseline : profile.fsr_max) = got;
        queue_event(wire::EventName::calibrated,
                    format("%s front=%u rear=%u", base ? "fsr_baseline" : "fsr_max", got.front, got.rear));
        reply(origin, wire::Ack{seq});
        return IngestResult::command_applied;
    };

    auto begin_capture = [&](CalibrationStage stage) -> IngestResult {
        if (cal_stage_ != CalibrationStage::idle) {
            return reject(origin, seq, "another FSR capture is already open");
        }
        cal_stage_ = stage;
        cal_samples_.clear();
        reply(origin, wire::Ack{seq});
        return IngestResult::command_applied;
    };

    switch (phase) {
    case CalibrationPhase::fsr_baseline_begin:
        return begin_capture(CalibrationStage::capturing_baseline);
    case CalibrationPhase::fsr_max_begin:
        return begin_capture(CalibrationStage::capturing_max);
    case CalibrationPhase::fsr_baseline_end:
        if (cal_stage_ != CalibrationStage::capturing_baseline) {
            return reject(origin, seq, "fsr_baseline_end without fsr_baseline_begin");
        }
        return finish_capture(calibration::CapturePhase::baseline);
    case CalibrationPhase::fsr_max_end:
        if (cal_stage_ != CalibrationStage::capturing_max) {
            return reject(origin, seq, "fsr_max_end without fsr_max_begin");
        }
        return finish_capture(calibration::CapturePhase::max);
    case CalibrationPhase::imu_zero: {
        if (cal_stage_ != CalibrationStage::idle) {
            return reject(origin, seq, "imu_zero is not allowed while an FSR capture is open");
        }
        const auto vehicle = active_vehicle();
        if (!vehicle) {
            return reject(origin, seq, "select a vehicle before zeroing its IMU");
        }
        if (!held_orientation_) {
            return reject(origin, seq, "no IMU sample received yet");
        }
        auto &zero = profile.alignment[*vehicle].imu_zero;
        zero = {held_orientation_->pitch_deg, held_orientation_->roll_deg, held_orientation_->yaw_deg};
        realign();
        queue_event(wire::EventName::calibrated,
                    format("imu_zero %s pitch=%.3f roll=%.3f yaw=%.3f", std::string(to_string(*vehicle)).c_str(),
                           zero.pitch, zero.roll, zero.yaw));
        reply(origin, wire::Ack{seq});
        return IngestResult::command_applied;
    }
    }
    return reject(origin, seq, "unknown calibration phase");
}

void Session::select_vehicle(Vehicle v) {
    controller_ = control::make_controller(v, cfg_.mapping_for(v));
    state_ = scenario::start_state(course_.geometry, tick_);
    reset_trial();
    realign();
}

void Session::reset_trial() {
    course_.coins.reset();
    trial_ = {};
    trial_.phase = cfg_.training_ticks > 0 ? scenario::TrialPhase::training : scenario::TrialPhase::running;
    trial_.start_tick = tick_;
    trial_.coins_total = course_.coins.total();
}

void Session::realign() {
    if (!held_orientation_) {
        return;
    }
    const auto vehicle = active_vehicle();
    const calibration::ImuAlignment alignment =
        vehicle ? cfg_.calibration.alignment_for(*vehicle) : calibration::ImuAlignment{};
    frame_.orientation = calibration::align(*held_orientation_, alignment);
}

control::SensorFrame Session::effective_frame() const {
    control::SensorFrame f = frame_;
    auto age = [&](const std::optional<std::uint64_t> &updated) -> std::optional<std::uint64_t> {
        if (!updated) {
            return std::nullopt;
        }
        return tick_ - *updated;
    };
    auto stale = [&](const std::optional<std::uint64_t> &a) { return !a || *a >= cfg_.stale_threshold; };

    f.imu_age = age(imu_tick_);
    f.fsr_age = age(fsr_tick_);
    f.throttle_age = age(throttle_tick_);
    if (stale(f.imu_age)) {
        f.orientation = {};
    }
    if (stale(f.fsr_age)) {
        f.fsr_front = 0.0;
        f.fsr_rear = 0.0;
    }
    if (stale(f.throttle_age)) {
        f.throttle = 0.0;
    }
    return f;
}

TickReport Session::tick() {
    ++tick_;
    const auto &geometry = course_.geometry;

    if (trial_.phase == scenario::TrialPhase::training && tick_ - trial_.start_tick >= cfg_.training_ticks) {
        state_ = scenario::start_state(geometry, tick_ - 1);
        course_.coins.reset();
        trial_.phase = scenario::TrialPhase::running;
        trial_.start_tick = tick_;
        trial_.progress = 0.0;
    }

    const control::SensorFrame frame = effective_frame();
    control::ControlInput command{};
    if (controller_) {
        command = controller_->map(frame);
        state_ = dynamics::step(state_, command, cfg_.vehicle_config(controller_->vehicle()).dynamics, cfg_.dt());

        if (auto hit = scenario::check_collision(state_, geometry)) {
            ++collisions_;
            queue_event(wire::EventName::collision, format("offset=%.3f arc=%.3f", hit->offset, hit->arc));
            const scenario::Respawn r = scenario::resolve_fail(state_, geometry, trial_.progress);
            state_ = r.state;
            trial_.progress = r.arc;
            ++respawns_;
            queue_event(wire::EventName::respawn, format("arc=%.3f", r.arc));
        } else {
            trial_.progress = std::max(trial_.progress, geometry.project({state_.x, state_.y}).arc);
        }

        if (trial_.phase == scenario::TrialPhase::running) {
            for (std::size_t idx : scenario::update_pickup(state_, course_.coins)) {
                queue_event(wire::EventName::coin,
                            format("index=%zu arc=%.3f", idx, course_.coins.coins[idx].arc));
            }
        }
        if (scenario::trial_status(trial_, course_.coins, geometry, tick_)) {
            queue_event(wire::EventName::trial_complete,
                        format("coins=%u/%u duration_ticks=%llu", trial_.coins_collected, trial_.coins_total,
                               static_cast<unsigned long long>(tick_ - trial_.start_tick)));
        }
    }
    state_.tick = tick_;

    TickReport report;
    report.state = state_;
    report.control = command;
    report.state_msg = wire::State{tick_,
                                   state_.x,
                                   state_.y,
                                   state_.heading,
                                   state_.speed,
                                   command.steering,
                                   command.velocity_cmd,
                                   trial_.coins_collected,
                                   trial_.coins_total};

    for (PendingEvent &pe : pending_events_) {
        pe.event.tick = tick_;
    }
    const double t = now_ms();
    if (log_) {
        ordered_json c;
        const auto vehicle = active_vehicle();
        c["vehicle"] = vehicle ? ordered_json(std::string(to_string(*vehicle))) : ordered_json(nullptr);
        c["steering"] = command.steering;
        c["velocity_cmd"] = command.velocity_cmd;
        c["pitch"] = frame.orientation.pitch;
        c["roll"] = frame.orientation.roll;
        c["yaw"] = frame.orientation.yaw;
        c["fsr_front"] = frame.fsr_front;
        c["fsr_rear"] = frame.fsr_rear;
        c["throttle"] = frame.throttle;
        c["imu_age"] = age_json(frame.imu_age);
        c["fsr_age"] = age_json(frame.fsr_age);
        c["throttle_age"] = age_json(frame.throttle_age);
        c["phase"] = scenario::to_string(trial_.phase);
        c["progress"] = trial_.progress;
        log_->append({tick_, t, telemetry::Stream::control, std::move(c)});
        log_->append({tick_, t, telemetry::Stream::state, state_payload(report.state_msg)});
        for (const PendingEvent &pe : pending_events_) {
            ordered_json e;
            e["name"] = std::string(wire::to_string(pe.event.name));
            e["detail"] = pe.event.detail;
            log_->append({tick_, pe.t_ms, telemetry::Stream::event, std::move(e)});
        }
        log_->flush();
    }

    if (outbox_) {
        outbox_->broadcast(outbound(report.state_msg));
    }
    for (PendingEvent &pe : pending_events_) {
        if (outbox_) {
            outbox_->broadcast(outbound(pe.event));
        }
        report.events.push_back(std::move(pe.event));
    }
    pending_events_.clear();
    return report;
}

void Session::abort() { scenario::abort_trial(trial_, tick_); }

} // namespace ridesim
