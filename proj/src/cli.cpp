#include "ridesim/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "ridesim/config.hpp"
#include "ridesim/errors.hpp"
#include "ridesim/live.hpp"
#include "ridesim/telemetry.hpp"
#include "ridesim/trace.hpp"
#include "ridesim/transport.hpp"

namespace ridesim::cli {

using nlohmann::json;
using nlohmann::ordered_json;

int exit_code_for(const std::exception &e) {
    if (dynamic_cast<const ConfigError *>(&e)) return kConfigError;
    if (dynamic_cast<const BindFailure *>(&e)) return kBindFailure;
    if (dynamic_cast<const IoFailure *>(&e)) return kIoFailure;
    if (dynamic_cast<const CorruptLog *>(&e)) return kCorruptLog;
    if (dynamic_cast<const VersionMismatch *>(&e)) return kVersionMismatch;
    if (dynamic_cast<const TraceParseError *>(&e)) return kTraceParseError;
    if (dynamic_cast<const UnknownRoute *>(&e)) return kUnknownRoute;
    if (dynamic_cast<const InvalidBounds *>(&e)) return kInvalidBounds;
    if (dynamic_cast<const OrderingViolation *>(&e)) return kOrderingViolation;
    if (dynamic_cast<const Error *>(&e)) return kEngineError;
    return kInternal;
}

namespace {

struct SessionFlags {
    std::optional<std::string> vehicle;
    std::optional<int> route;
    std::optional<std::string> config;
    std::optional<std::string> calibration;
    std::optional<double> tick_rate;
    std::optional<std::uint64_t> max_ticks;
    std::optional<std::string> log;

    void attach(CLI::App *cmd, bool with_log = true) {
        cmd->add_option("--vehicle", vehicle, "escooter, segway, unicycle or skateboard");
        cmd->add_option("--route", route, "built-in route 1-4");
        cmd->add_option("--config", config, "session configuration file (JSON)");
        cmd->add_option("--calibration", calibration, "calibration profile file (JSON)");
        cmd->add_option("--tick-rate", tick_rate, "simulation rate in Hz");
        cmd->add_option("--max-ticks", max_ticks, "stop after this many ticks");
        if (with_log) {
            cmd->add_option("--log", log, "write a session log to this file");
        }
    }
};

Vehicle parse_vehicle(const std::string &name) {
    if (auto v = vehicle_from_string(name)) {
        return *v;
    }
    std::string valid;
    for (Vehicle v : kAllVehicles) {
        valid += (valid.empty() ? "" : ", ") + std::string(to_string(v));
    }
    throw ConfigError("unknown vehicle '" + name + "' (valid: " + valid + ")");
}

SessionConfig build_config(const SessionFlags &f) {
    SessionConfig cfg = SessionConfig::defaults();
    if (f.config) {
        apply_config_json(cfg, read_json_file(*f.config));
    }
    if (f.calibration) {
        apply_profile_json(cfg.calibration, read_json_file(*f.calibration));
    }
    if (f.vehicle) {
        cfg.vehicle = parse_vehicle(*f.vehicle);
    }
    if (f.route) {
        cfg.course.route = *f.route;
        cfg.course.custom_centerline.clear();
    }
    if (f.tick_rate) {
        cfg.tick_rate = *f.tick_rate;
    }
    cfg.validate();
    return cfg;
}

std::unique_ptr<telemetry::LogWriter> open_log(const std::optional<std::string> &path, const SessionConfig &cfg) {
    return path ? telemetry::LogWriter::open_file(*path, cfg) : nullptr;
}

int cmd_run(const SessionFlags &f, const std::optional<std::string> &listen,
            const std::optional<std::string> &save_calibration, std::ostream &out, const std::atomic<bool> *stop) {
    SessionConfig cfg = build_config(f);
    if (listen) {
        cfg.listen = *listen;
    }
    transport::TransportServer server(transport::Endpoint::parse(cfg.listen));
    auto log = open_log(f.log, cfg);
    server.start();

    ordered_json hello;
    hello["listening"] = server.bound().to_string();
    hello["log"] = f.log ? ordered_json(*f.log) : ordered_json(nullptr);
    hello["config_hash"] = config_hash(cfg);
    out << hello.dump() << std::endl;

    static const std::atomic<bool> never{false};
    LiveRunner runner(cfg, server, log.get());
    const LiveSummary summary = runner.run(stop ? *stop : never, f.max_ticks);
    server.stop();

    if (save_calibration) {
        write_json_file(*save_calibration, profile_to_json(runner.session().profile()));
    }
    out << summary_json(summary).dump() << std::endl;
    return kOk;
}

int cmd_replay(const std::string &path, const std::optional<std::string> &config, bool verify, std::ostream &out,
               std::ostream &err) {
    const telemetry::ParsedLog log = telemetry::read_log(path);
    std::optional<json> override_doc;
    if (config) {
        override_doc = read_json_file(*config);
    }
    const SessionConfig cfg = telemetry::config_from_log(log, override_doc);
    const telemetry::ReplayResult result = telemetry::replay(log, cfg);

    ordered_json j;
    j["ticks"] = result.ticks;
    j["final_state"] = result.states.empty() ? ordered_json(nullptr) : ordered_json::parse(result.states.back());
    if (!verify) {
        out << j.dump() << std::endl;
        return kOk;
    }
    const telemetry::Verdict v = telemetry::verify(log, result);
    if (v.identical) {
        j["verdict"] = "identical";
        out << j.dump() << std::endl;
        return kOk;
    }
    j["verdict"] = "divergent";
    j["divergent_tick"] = v.divergent_tick ? ordered_json(*v.divergent_tick) : ordered_json(nullptr);
    j["reason"] = v.reason;
    out << j.dump() << std::endl;
    err << "divergent at tick " << (v.divergent_tick ? std::to_string(*v.divergent_tick) : std::string("?"))
        << ": " << v.reason << '\n';
    return kDivergent;
}

int cmd_script(const std::string &path, const SessionFlags &f, std::ostream &out) {
    const SessionConfig cfg = build_config(f);
    const trace::ScriptedTrace tr = trace::read_trace(path);
    auto log = open_log(f.log, cfg);
    const trace::ScriptSummary s = trace::run_script(tr, cfg, f.max_ticks, log.get());
    out << trace::summary_json(s).dump() << std::endl;
    return kOk;
}

int cmd_course(const SessionFlags &f, bool centerline, std::ostream &out) {
    const SessionConfig cfg = build_config(f);
    const scenario::Course course = scenario::generate_course(cfg.course);
    ordered_json j;
    j["route"] = cfg.course.custom_centerline.empty() ? ordered_json(cfg.course.route) : ordered_json("custom");
    j["total_length"] = course.geometry.total_length();
    j["corridor_half_width"] = course.geometry.corridor_half_width();
    j["coin_spacing"] = course.coins.spacing;
    j["pickup_radius"] = course.coins.pickup_radius;
    j["coins_total"] = course.coins.total();
    ordered_json coins = ordered_json::array();
    for (const scenario::Coin &c : course.coins.coins) {
        coins.push_back({{"arc", c.arc}, {"x", c.position.x}, {"y", c.position.y}});
    }
    j["coins"] = coins;
    if (centerline) {
        ordered_json pts = ordered_json::array();
        for (const scenario::Point &p : course.geometry.centerline()) {
            pts.push_back({p.x, p.y});
        }
        j["centerline"] = pts;
    }
    out << j.dump() << std::endl;
    return kOk;
}

int cmd_latency(const std::string &path, const std::optional<std::string> &csv, double bin_ms, std::ostream &out) {
    if (!(bin_ms > 0.0)) {
        throw ConfigError("--bin-ms must be positive");
    }
    const telemetry::ParsedLog log = telemetry::read_log(path);
    const SessionConfig cfg = telemetry::config_from_log(log);
    const telemetry::LatencyStats stats = telemetry::latency_stats(telemetry::ingest_latencies_ms(log), bin_ms);
    if (csv) {
        std::ofstream f(*csv, std::ios::trunc);
        if (!f) {
            throw IoFailure("cannot write " + *csv);
        }
        f << "lo_ms,hi_ms,count\n";
        for (std::size_t i = 0; i < stats.histogram.size(); ++i) {
            f << static_cast<double>(i) * bin_ms << ',' << static_cast<double>(i + 1) * bin_ms << ','
              << stats.histogram[i] << '\n';
        }
    }
    out << telemetry::latency_json(stats, 1000.0 * cfg.dt()).dump() << std::endl;
    return kOk;
}

int cmd_author(const SessionFlags &f, const std::string &out_path, bool offcourse, const trace::AuthorOptions &opt,
               std::ostream &out) {
    SessionConfig cfg = build_config(f);
    const Vehicle v = cfg.vehicle.value_or(Vehicle::escooter);
    cfg.vehicle.reset(); // the trace selects the vehicle itself
    const trace::ScriptedTrace tr =
        offcourse ? trace::author_offcourse_trace(v, cfg) : trace::author_centerline_trace(v, cfg, opt);
    trace::write_trace_file(out_path, tr);
    ordered_json j;
    j["trace"] = out_path;
    j["entries"] = tr.size();
    j["last_tick"] = tr.empty() ? 0 : tr.back().tick;
    out << j.dump() << std::endl;
    return kOk;
}

int cmd_config(const SessionFlags &f, std::ostream &out) {
    const SessionConfig cfg = build_config(f);
    ordered_json j;
    j["config_hash"] = config_hash(cfg);
    j["config"] = effective_json(cfg);
    out << j.dump(2) << std::endl;
    return kOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err, const std::atomic<bool> *stop) {
    CLI::App app{"Micromobility ride simulator engine"};
    app.name("ridesim");
    app.require_subcommand(1);

    SessionFlags run_flags;
    std::optional<std::string> listen, save_calibration;
    CLI::App *run = app.add_subcommand("run", "live session over the socket endpoint");
    run_flags.attach(run);
    run->add_option("--listen", listen, "host:port (port 0 picks a free port)");
    run->add_option("--save-calibration", save_calibration, "write the calibration profile on exit");

    std::string replay_path;
    std::optional<std::string> replay_config;
    bool verify = false;
    CLI::App *replay = app.add_subcommand("replay", "re-run a session log unpaced");
    replay->add_option("log", replay_path, "session log")->required();
    replay->add_option("--config", replay_config, "must match the logged configuration");
    replay->add_flag("--verify", verify, "compare against the log's state records");

    std::string script_path;
    SessionFlags script_flags;
    CLI::App *script = app.add_subcommand("script", "run a scripted trace unpaced");
    script->add_option("trace", script_path, "trace file")->required();
    script_flags.attach(script);

    SessionFlags course_flags;
    bool centerline = false;
    CLI::App *course = app.add_subcommand("course", "print course geometry and coin placement");
    course_flags.attach(course, false);
    course->add_flag("--centerline", centerline, "include centerline vertices");

    std::string latency_path;
    std::optional<std::string> latency_csv;
    double bin_ms = 0.5;
    CLI::App *latency = app.add_subcommand("latency", "ingest-to-state latency statistics of a log");
    latency->add_option("log", latency_path, "session log")->required();
    latency->add_option("--out", latency_csv, "write the histogram as CSV");
    latency->add_option("--bin-ms", bin_ms, "histogram bin width");

    SessionFlags author_flags;
    std::string author_out;
    bool offcourse = false;
    trace::AuthorOptions author_opt;
    CLI::App *author = app.add_subcommand("author-trace", "record a centerline-following (or off-course) trace");
    author_flags.attach(author, false);
    author->add_option("--out", author_out, "trace file to write")->required();
    author->add_flag("--offcourse", offcourse, "full lock instead of following the route");
    author->add_option("--lookahead", author_opt.lookahead_m, "pursuit lookahead in meters");
    author->add_option("--velocity", author_opt.velocity_cmd, "velocity command to hold");

    SessionFlags config_flags;
    CLI::App *config = app.add_subcommand("config", "print the effective configuration and its hash");
    config_flags.attach(config, false);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(run_flags, listen, save_calibration, out, stop);
        if (*replay) return cmd_replay(replay_path, replay_config, verify, out, err);
        if (*script) return cmd_script(script_path, script_flags, out);
        if (*course) return cmd_course(course_flags, centerline, out);
        if (*latency) return cmd_latency(latency_path, latency_csv, bin_ms, out);
        if (*config) return cmd_config(config_flags, out);
        if (*author) return cmd_author(author_flags, author_out, offcourse, author_opt, out);
    } catch (const std::exception &e) {
        err << "ridesim: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kUsage;
}

} // namespace ridesim::cli
