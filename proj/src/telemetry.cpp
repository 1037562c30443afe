#include "ridesim/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "ridesim/errors.hpp"
#include "ridesim/session.hpp"
#include "ridesim/wire.hpp"

namespace ridesim::telemetry {

using nlohmann::json;
using nlohmann::ordered_json;

const char *to_string(Stream s) {
    switch (s) {
    case Stream::sensor_in: return "sensor_in";
    case Stream::control: return "control";
    case Stream::state: return "state";
    case Stream::event: return "event";
    }
    return "?";
}

std::optional<Stream> stream_from_string(const std::string &s) {
    for (Stream st : {Stream::sensor_in, Stream::control, Stream::state, Stream::event}) {
        if (s == to_string(st)) {
            return st;
        }
    }
    return std::nullopt;
}

std::string format_record(const LogRecord &rec) {
    ordered_json j;
    j["tick"] = rec.tick;
    j["t_mono_ms"] = rec.t_mono_ms;
    j["stream"] = to_string(rec.stream);
    j["payload"] = rec.payload;
    return j.dump();
}

LogWriter::LogWriter(std::unique_ptr<std::ostream> out, const SessionConfig &cfg) : out_(std::move(out)) {
    ordered_json header;
    header["format"] = kLogFormat;
    header["version"] = kLogFormatVersion;
    header["engine"] = kEngineVersion;
    header["config_hash"] = config_hash(cfg);
    header["config"] = effective_json(cfg);
    *out_ << header.dump() << '\n';
    flush();
}

std::unique_ptr<LogWriter> LogWriter::open_file(const std::string &path, const SessionConfig &cfg) {
    auto file = std::make_unique<std::ofstream>(path, std::ios::out | std::ios::trunc);
    if (!*file) {
        throw IoFailure("cannot open log file " + path);
    }
    return std::make_unique<LogWriter>(std::move(file), cfg);
}

void LogWriter::append(const LogRecord &rec) {
    if (last_) {
        const auto [tick, stream] = *last_;
        if (rec.tick < tick || (rec.tick == tick && rec.stream < stream)) {
            throw OrderingViolation(std::string("log record ") + to_string(rec.stream) + "@" +
                                    std::to_string(rec.tick) + " after " + to_string(stream) + "@" +
                                    std::to_string(tick));
        }
    }
    *out_ << format_record(rec) << '\n';
    if (!*out_) {
        throw IoFailure("log write failed");
    }
    last_ = {rec.tick, rec.stream};
    ++count_;
}

void LogWriter::flush() {
    out_->flush();
    if (!*out_) {
        throw IoFailure("log flush failed");
    }
}

ParsedLog read_log(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoFailure("cannot open log file " + path);
    }
    return read_log(in);
}

ParsedLog read_log(std::istream &in) {
    ParsedLog log;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (in.eof()) {
            // No terminating newline: the writer was interrupted mid-record.
            break;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw CorruptLog("line " + std::to_string(lineno) + " is not a JSON object");
        }
        if (!have_header) {
            if (j.value("format", "") != kLogFormat) {
                throw CorruptLog("missing log header");
            }
            if (!j.contains("version") || !j["version"].is_number_integer()) {
                throw CorruptLog("log header has no version");
            }
            log.header.version = j["version"].get<int>();
            if (log.header.version != kLogFormatVersion) {
                throw VersionMismatch("log format version " + std::to_string(log.header.version) +
                                      " is not supported (expected " + std::to_string(kLogFormatVersion) + ")");
            }
            if (!j.contains("config") || !j.contains("config_hash") || !j["config_hash"].is_string()) {
                throw CorruptLog("log header lacks the configuration");
            }
            log.header.engine = j.value("engine", "");
            log.header.config_hash = j["config_hash"].get<std::string>();
            log.header.config = j["config"];
            have_header = true;
            continue;
        }
        LogRecord rec;
        try {
            rec.tick = j.at("tick").get<std::uint64_t>();
            rec.t_mono_ms = j.at("t_mono_ms").get<double>();
            auto stream = stream_from_string(j.at("stream").get<std::string>());
            if (!stream) {
                throw CorruptLog("unknown stream");
            }
            rec.stream = *stream;
            rec.payload = j.at("payload");
        } catch (const json::exception &e) {
            throw CorruptLog("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const CorruptLog &e) {
            throw CorruptLog("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!log.records.empty()) {
            const LogRecord &prev = log.records.back();
            if (rec.tick < prev.tick || (rec.tick == prev.tick && rec.stream < prev.stream)) {
                throw CorruptLog("line " + std::to_string(lineno) + " breaks record ordering");
            }
        }
        log.records.push_back(std::move(rec));
    }
    if (!have_header) {
        throw CorruptLog("empty log");
    }
    return log;
}

SessionConfig config_from_log(const ParsedLog &log, const std::optional<json> &override_doc) {
    SessionConfig cfg = SessionConfig::defaults();
    try {
        apply_config_json(cfg, log.header.config);
    } catch (const ConfigError &e) {
        throw CorruptLog(std::string("log header configuration unreadable: ") + e.what());
    }
    if (config_hash(cfg) != log.header.config_hash) {
        throw CorruptLog("log header configuration does not match its hash");
    }
    if (override_doc) {
        apply_config_json(cfg, *override_doc);
        cfg.validate();
        if (config_hash(cfg) != log.header.config_hash) {
            throw ConfigError("configuration differs from the one recorded in the log (hash " + config_hash(cfg) +
                              " vs " + log.header.config_hash + "); refusing to replay");
        }
    }
    return cfg;
}

ReplayResult replay(const ParsedLog &log, const SessionConfig &cfg) {
    std::uint64_t last_tick = 0;
    for (const LogRecord &r : log.records) {
        last_tick = std::max(last_tick, r.tick);
    }

    Session session(cfg);
    ReplayResult out;
    out.states.reserve(last_tick);
    auto next = log.records.begin();
    for (std::uint64_t t = 1; t <= last_tick; ++t) {
        for (; next != log.records.end() && next->tick <= t; ++next) {
            if (next->stream != Stream::sensor_in) {
                continue;
            }
            wire::WireMessage msg;
            try {
                msg = wire::decode(next->payload.dump());
            } catch (const Error &e) {
                throw CorruptLog("inbound record at tick " + std::to_string(next->tick) + ": " + e.what());
            }
            session.ingest(msg);
        }
        const TickReport report = session.tick();
        out.states.push_back(state_payload(report.state_msg).dump());
    }
    out.ticks = last_tick;
    return out;
}

Verdict verify(const ParsedLog &log, const ReplayResult &replayed) {
    Verdict v;
    std::size_t i = 0;
    for (const LogRecord &r : log.records) {
        if (r.stream != Stream::state) {
            continue;
        }
        if (i >= replayed.states.size()) {
            v.identical = false;
            v.divergent_tick = r.tick;
            v.reason = "log has more state records than the replay produced";
            return v;
        }
        // Parsing and re-dumping yields the same shortest round-trip text, so
        // string equality here is bitwise equality of every field.
        const std::string logged = json::parse(r.payload.dump()).dump();
        const std::string replay_text = json::parse(replayed.states[i]).dump();
        if (logged != replay_text) {
            v.identical = false;
            v.divergent_tick = r.tick;
            v.reason = "state differs: logged " + logged + " replayed " + replay_text;
            return v;
        }
        ++i;
    }
    if (i != replayed.states.size()) {
        v.identical = false;
        v.divergent_tick = i + 1;
        v.reason = "replay produced more state records than the log holds";
    }
    return v;
}

std::vector<double> ingest_latencies_ms(const ParsedLog &log) {
    std::vector<double> out;
    std::vector<double> pending;
    std::uint64_t tick = 0;
    for (const LogRecord &r : log.records) {
        if (r.tick != tick) {
            pending.clear();
            tick = r.tick;
        }
        if (r.stream == Stream::sensor_in) {
            pending.push_back(r.t_mono_ms);
        } else if (r.stream == Stream::state) {
            for (double t_in : pending) {
                out.push_back(r.t_mono_ms - t_in);
            }
            pending.clear();
        }
    }
    return out;
}

LatencyStats latency_stats(std::vector<double> samples, double bin_width_ms) {
    LatencyStats s;
    s.bin_width_ms = bin_width_ms;
    s.samples = samples.size();
    if (samples.empty()) {
        return s;
    }
    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(samples.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, samples.size() - 1);
        return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
    };
    s.median_ms = quantile(0.5);
    s.p95_ms = quantile(0.95);
    s.max_ms = samples.back();
    const auto bins = static_cast<std::size_t>(std::max(0.0, samples.back()) / bin_width_ms) + 1;
    s.histogram.assign(bins, 0);
    for (double v : samples) {
        const auto b = static_cast<std::size_t>(std::max(0.0, v) / bin_width_ms);
        ++s.histogram[std::min(b, bins - 1)];
    }
    return s;
}

ordered_json latency_json(const LatencyStats &stats, double tick_interval_ms) {
    ordered_json j;
    j["samples"] = stats.samples;
    j["median_ms"] = stats.median_ms;
    j["p95_ms"] = stats.p95_ms;
    j["max_ms"] = stats.max_ms;
    j["tick_interval_ms"] = tick_interval_ms;
    j["bin_width_ms"] = stats.bin_width_ms;
    ordered_json bins = ordered_json::array();
    for (std::size_t i = 0; i < stats.histogram.size(); ++i) {
        bins.push_back({{"lo_ms", static_cast<double>(i) * stats.bin_width_ms},
                        {"hi_ms", static_cast<double>(i + 1) * stats.bin_width_ms},
                        {"count", stats.histogram[i]}});
    }
    j["histogram"] = bins;
    return j;
}

} // namespace ridesim::telemetry
