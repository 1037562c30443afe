#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridesim/config.hpp"

namespace ridesim::telemetry {

inline constexpr const char *kLogFormat = "ridesim-log";
inline constexpr int kLogFormatVersion = 1;

/// Order within a tick: inbound messages, then the control record, then the
/// state record, then any events.
enum class Stream { sensor_in = 0, control = 1, state = 2, event = 3 };

const char *to_string(Stream s);
std::optional<Stream> stream_from_string(const std::string &s);

struct LogRecord {
    std::uint64_t tick = 0;
    double t_mono_ms = 0.0;
    Stream stream = Stream::sensor_in;
    nlohmann::ordered_json payload;
};

/// One JSON object per line, preceded by a header line.
std::string format_record(const LogRecord &rec);

/// Append-only writer. Enforces record ordering; `flush` is called by the
/// session at the end of every tick.
class LogWriter {
public:
    /// Writes the header immediately.
    LogWriter(std::unique_ptr<std::ostream> out, const SessionConfig &cfg);

    /// Opens (truncates) a file. Throws IoFailure.
    static std::unique_ptr<LogWriter> open_file(const std::string &path, const SessionConfig &cfg);

    /// Throws OrderingViolation when `rec` would break the tick/stream order,
    /// IoFailure when the stream goes bad.
    void append(const LogRecord &rec);
    void flush();
    std::uint64_t records_written() const { return count_; }

private:
    std::unique_ptr<std::ostream> out_;
    std::optional<std::pair<std::uint64_t, Stream>> last_;
    std::uint64_t count_ = 0;
};

struct LogHeader {
    int version = 0;
    std::string engine;
    std::string config_hash;
    nlohmann::json config;
};

struct ParsedLog {
    LogHeader header;
    std::vector<LogRecord> records;
};

/// Reads a log. A final line without its newline (interrupted write) is
/// ignored. Throws IoFailure, CorruptLog, VersionMismatch.
ParsedLog read_log(const std::string &path);
ParsedLog read_log(std::istream &in);

/// Rebuilds the session configuration stored in the header. When
/// `override_doc` is given it is overlaid first, and the result must still hash
/// to the recorded value or ConfigError is thrown.
SessionConfig config_from_log(const ParsedLog &log, const std::optional<nlohmann::json> &override_doc = {});

struct ReplayResult {
    std::vector<std::string> states; // canonical payload text per tick
    std::uint64_t ticks = 0;
};

/// Re-injects each inbound record at its recorded tick into a fresh, unpaced
/// session and collects the resulting state stream.
ReplayResult replay(const ParsedLog &log, const SessionConfig &cfg);

struct Verdict {
    bool identical = true;
    std::optional<std::uint64_t> divergent_tick;
    std::string reason;
};

/// Compares replayed states to the log's own state records.
Verdict verify(const ParsedLog &log, const ReplayResult &replayed);

/// Ingest-to-state delay for every inbound record: state t_mono_ms minus the
/// inbound record's t_mono_ms on the same tick.
std::vector<double> ingest_latencies_ms(const ParsedLog &log);

struct LatencyStats {
    std::size_t samples = 0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double max_ms = 0.0;
    double bin_width_ms = 0.5;
    std::vector<std::size_t> histogram; // bin i covers [i*w, (i+1)*w)
};

LatencyStats latency_stats(std::vector<double> samples, double bin_width_ms = 0.5);
nlohmann::ordered_json latency_json(const LatencyStats &stats, double tick_interval_ms);

} // namespace ridesim::telemetry
