#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ridesim/session.hpp"
#include "ridesim/wire.hpp"

namespace ridesim::transport {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    /// "host:port"; throws ConfigError.
    static Endpoint parse(const std::string &text);
    std::string to_string() const;
};

/// One decoded inbound frame (or the reason it failed to decode).
struct Inbound {
    ClientId client = 0;
    std::optional<wire::WireMessage> message;
    std::string error;
    std::chrono::steady_clock::time_point received;
};

/// Socket endpoint for sensor sources and consoles. Each connection speaks
/// either newline-delimited frames over plain TCP or one frame per WebSocket
/// text message; the first bytes decide ("GET " starts a WebSocket upgrade).
///
/// A background thread owns all sockets. Decoded frames queue up for the tick
/// loop to drain; outbound frames are appended to per-client buffers and the
/// caller never blocks. A client whose buffer exceeds the cap loses frames.
class TransportServer final : public Outbox {
public:
    static constexpr std::size_t kMaxOutboundBytes = 1 << 20;
    static constexpr std::size_t kMaxInboundLine = 64 * 1024;

    /// Binds and listens; throws BindFailure.
    explicit TransportServer(const Endpoint &listen);
    ~TransportServer() override;

    TransportServer(const TransportServer &) = delete;
    TransportServer &operator=(const TransportServer &) = delete;

    void start();
    void stop();

    Endpoint bound() const { return bound_; }

    /// Everything received since the previous call, in arrival order.
    std::vector<Inbound> drain();

    void send(ClientId client, const wire::WireMessage &msg) override;
    void broadcast(const wire::WireMessage &msg) override;

    std::size_t client_count() const;
    std::uint64_t dropped_frames() const { return dropped_frames_.load(); }

private:
    struct Connection;

    void run();
    void accept_clients();
    void handle_readable(Connection &c);
    void handle_writable(Connection &c);
    void process_stream(Connection &c);
    void process_websocket(Connection &c);
    bool process_handshake(Connection &c);
    void deliver_frame(Connection &c, std::string_view text);
    void enqueue(Connection &c, const std::string &frame_text);
    void wake();

    Endpoint bound_;
    int listen_fd_ = -1;
    int wake_pipe_[2] = {-1, -1};
    std::thread thread_;
    std::atomic<bool> running_{false};

    mutable std::mutex conn_mutex_;
    std::map<ClientId, std::unique_ptr<Connection>> conns_;
    ClientId next_id_ = 1;

    std::mutex in_mutex_;
    std::vector<Inbound> inbound_;

    std::atomic<std::uint64_t> dropped_frames_{0};
};

/// Blocking newline-delimited client, used by scripted sensor sources and tests.
class StreamClient {
public:
    /// Throws IoFailure when the connection is refused.
    explicit StreamClient(const Endpoint &server);
    ~StreamClient();

    StreamClient(const StreamClient &) = delete;
    StreamClient &operator=(const StreamClient &) = delete;

    /// Returns false once the peer has gone away.
    bool send(const wire::WireMessage &msg);
    bool send_raw(std::string_view bytes);

    /// Next complete frame, or nullopt on timeout or disconnect.
    std::optional<std::string> read_frame(std::chrono::milliseconds timeout);
    bool connected() const { return fd_ >= 0; }

private:
    int fd_ = -1;
    std::string buffer_;
};

/// SHA-1 and base64 of the RFC 6455 handshake.
std::string websocket_accept_key(const std::string &client_key);

} // namespace ridesim::transport
