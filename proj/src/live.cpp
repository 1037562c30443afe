#include "ridesim/live.hpp"

#include <chrono>
#include <thread>

#include "ridesim/telemetry.hpp"

namespace ridesim {

nlohmann::ordered_json summary_json(const LiveSummary &s) {
    nlohmann::ordered_json j;
    j["ticks"] = s.ticks;
    j["frames_in"] = s.frames_in;
    j["frames_rejected"] = s.frames_rejected;
    j["late_ticks"] = s.late_ticks;
    j["phase"] = scenario::to_string(s.trial.phase);
    j["coins_collected"] = s.trial.coins_collected;
    j["coins_total"] = s.trial.coins_total;
    return j;
}

LiveRunner::LiveRunner(SessionConfig cfg, transport::TransportServer &server, telemetry::LogWriter *log)
    : server_(server), log_(log), session_(std::move(cfg), &server, log) {}

void LiveRunner::pump(LiveSummary &summary) {
    for (transport::Inbound &in : server_.drain()) {
        ++summary.frames_in;
        if (in.message) {
            session_.ingest(*in.message, in.client, in.received);
        } else {
            ++summary.frames_rejected;
            session_.reject_frame(in.client, in.error);
        }
    }
}

LiveSummary LiveRunner::run(const std::atomic<bool> &stop, std::optional<std::uint64_t> max_ticks) {
    using Clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(session_.config().dt()));

    LiveSummary summary;
    const Clock::time_point start = Clock::now();
    for (std::uint64_t k = 1; !stop.load(); ++k) {
        if (max_ticks && summary.ticks >= *max_ticks) {
            break;
        }
        const Clock::time_point deadline = start + period * static_cast<Clock::rep>(k);
        // Sleep in short slices so a stop request is honoured promptly.
        while (!stop.load()) {
            const Clock::time_point now = Clock::now();
            if (now >= deadline) {
                break;
            }
            std::this_thread::sleep_until(std::min(deadline, now + std::chrono::milliseconds(50)));
        }
        if (stop.load()) {
            break;
        }
        if (Clock::now() - deadline > period) {
            ++summary.late_ticks;
        }
        pump(summary);
        session_.tick();
        ++summary.ticks;
    }

    session_.abort();
    if (log_) {
        log_->flush();
    }
    summary.trial = session_.trial();
    return summary;
}

} // namespace ridesim
