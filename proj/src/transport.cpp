#include "ridesim/transport.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include "ridesim/errors.hpp"

namespace ridesim::transport {

namespace {

constexpr const char *kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

void set_nonblocking(int fd) {
    const int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(int fd) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in resolve(const Endpoint &ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) {
        return addr;
    }
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo *res = nullptr;
    if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
        throw BindFailure("cannot resolve host '" + ep.host + "'");
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in *>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return std::string(s);
}

std::string websocket_frame(std::string_view payload, std::uint8_t opcode) {
    std::string out;
    out.push_back(static_cast<char>(0x80 | opcode));
    const std::size_t n = payload.size();
    if (n < 126) {
        out.push_back(static_cast<char>(n));
    } else if (n <= 0xffff) {
        out.push_back(static_cast<char>(126));
        out.push_back(static_cast<char>((n >> 8) & 0xff));
        out.push_back(static_cast<char>(n & 0xff));
    } else {
        out.push_back(static_cast<char>(127));
        for (int shift = 56; shift >= 0; shift -= 8) {
            out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> shift) & 0xff));
        }
    }
    out.append(payload);
    return out;
}

} // namespace

Endpoint Endpoint::parse(const std::string &text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw ConfigError("listen address '" + text + "' must look like host:port");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    if (port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5) {
        throw ConfigError("listen port '" + port + "' is not a number");
    }
    const unsigned long p = std::stoul(port);
    if (p > 65535) {
        throw ConfigError("listen port out of range");
    }
    ep.port = static_cast<std::uint16_t>(p);
    return ep;
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

std::string websocket_accept_key(const std::string &client_key) {
    const std::string src = client_key + kWebSocketGuid;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char *>(src.data()), src.size(), digest);
    unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
    const int len = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
    return std::string(reinterpret_cast<char *>(encoded), static_cast<std::size_t>(len));
}

// ---------------------------------------------------------------------------

struct TransportServer::Connection {
    enum class Mode { unknown, stream, handshake, websocket };

    ClientId id = 0;
    int fd = -1;
    Mode mode = Mode::unknown;
    std::string in;
    std::string fragments; // partial WebSocket message
    bool closing = false;

    std::mutex out_mutex;
    std::string out;
};

TransportServer::TransportServer(const Endpoint &listen) : bound_(listen) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw BindFailure(std::string("socket: ") + std::strerror(errno));
    }
    int one = 1;
    setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = resolve(listen);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        throw BindFailure("cannot listen on " + listen.to_string() + ": " + why);
    }
    socklen_t len = sizeof addr;
    getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    bound_.port = ntohs(addr.sin_port);
    set_nonblocking(listen_fd_);
    if (::pipe(wake_pipe_) != 0) {
        ::close(listen_fd_);
        throw BindFailure("cannot create wake pipe");
    }
    set_nonblocking(wake_pipe_[0]);
    set_nonblocking(wake_pipe_[1]);
}

TransportServer::~TransportServer() {
    stop();
    for (auto &[id, c] : conns_) {
        ::close(c->fd);
    }
    ::close(listen_fd_);
    ::close(wake_pipe_[0]);
    ::close(wake_pipe_[1]);
}

void TransportServer::start() {
    if (running_.exchange(true)) {
        return;
    }
    thread_ = std::thread([this] { run(); });
}

void TransportServer::stop() {
    if (!running_.exchange(false)) {
        return;
    }
    wake();
    if (thread_.joinable()) {
        thread_.join();
    }
    // Best-effort flush of whatever is still buffered.
    std::lock_guard lock(conn_mutex_);
    for (auto &[id, c] : conns_) {
        std::lock_guard out_lock(c->out_mutex);
        if (!c->out.empty()) {
            (void)::send(c->fd, c->out.data(), c->out.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
        }
    }
}

void TransportServer::wake() {
    const char b = 1;
    (void)!::write(wake_pipe_[1], &b, 1);
}

std::vector<Inbound> TransportServer::drain() {
    std::lock_guard lock(in_mutex_);
    std::vector<Inbound> out;
    out.swap(inbound_);
    return out;
}

std::size_t TransportServer::client_count() const {
    std::lock_guard lock(conn_mutex_);
    return conns_.size();
}

void TransportServer::enqueue(Connection &c, const std::string &frame_text) {
    std::lock_guard lock(c.out_mutex);
    std::string framed;
    if (c.mode == Connection::Mode::websocket) {
        std::string_view body = frame_text;
        if (!body.empty() && body.back() == '\n') {
            body.remove_suffix(1);
        }
        framed = websocket_frame(body, 0x1);
    } else if (c.mode == Connection::Mode::stream || c.mode == Connection::Mode::unknown) {
        framed = frame_text;
    } else {
        return; // handshake still pending
    }
    if (c.out.size() + framed.size() > kMaxOutboundBytes) {
        dropped_frames_.fetch_add(1);
        return;
    }
    c.out += framed;
}

void TransportServer::send(ClientId client, const wire::WireMessage &msg) {
    const std::string text = wire::encode(msg);
    {
        std::lock_guard lock(conn_mutex_);
        auto it = conns_.find(client);
        if (it == conns_.end()) {
            return;
        }
        enqueue(*it->second, text);
    }
    wake();
}

void TransportServer::broadcast(const wire::WireMessage &msg) {
    const std::string text = wire::encode(msg);
    {
        std::lock_guard lock(conn_mutex_);
        for (auto &[id, c] : conns_) {
            enqueue(*c, text);
        }
    }
    wake();
}

void TransportServer::run() {
    std::vector<pollfd> fds;
    std::vector<ClientId> ids;
    while (running_.load()) {
        fds.clear();
        ids.clear();
        fds.push_back({wake_pipe_[0], POLLIN, 0});
        fds.push_back({listen_fd_, POLLIN, 0});
        {
            std::lock_guard lock(conn_mutex_);
            for (auto &[id, c] : conns_) {
                short events = POLLIN;
                std::lock_guard out_lock(c->out_mutex);
                if (!c->out.empty()) {
                    events |= POLLOUT;
                }
                fds.push_back({c->fd, events, 0});
                ids.push_back(id);
            }
        }
        if (::poll(fds.data(), fds.size(), 100) < 0) {
            if (errno == EINTR) {
                continue;
            }
            break;
        }
        if (fds[0].revents & POLLIN) {
            char buf[256];
            while (::read(wake_pipe_[0], buf, sizeof buf) > 0) {
            }
        }
        if (fds[1].revents & POLLIN) {
            accept_clients();
        }
        std::lock_guard lock(conn_mutex_);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto it = conns_.find(ids[i]);
            if (it == conns_.end()) {
                continue;
            }
            Connection &c = *it->second;
            const short rev = fds[i + 2].revents;
            if (rev & (POLLIN | POLLHUP | POLLERR)) {
                handle_readable(c);
            }
            if (!c.closing && (rev & POLLOUT)) {
                handle_writable(c);
            }
        }
        for (auto it = conns_.begin(); it != conns_.end();) {
            if (it->second->closing) {
                std::lock_guard out_lock(it->second->out_mutex);
                if (!it->second->out.empty()) {
                    (void)::send(it->second->fd, it->second->out.data(), it->second->out.size(),
                                 MSG_NOSIGNAL | MSG_DONTWAIT);
                }
                ::close(it->second->fd);
                it = conns_.erase(it);
            } else {
                ++it;
            }
        }
    }
}

void TransportServer::accept_clients() {
    while (true) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            return;
        }
        set_nonblocking(fd);
        set_nodelay(fd);
        auto c = std::make_unique<Connection>();
        c->fd = fd;
        std::lock_guard lock(conn_mutex_);
        c->id = next_id_++;
        conns_.emplace(c->id, std::move(c));
    }
}

void TransportServer::handle_readable(Connection &c) {
    char buf[8192];
    while (true) {
        const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
        if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) {
            c.closing = true;
        } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
            c.closing = true;
        }
        break;
    }

    if (c.mode == Connection::Mode::unknown && !c.in.empty()) {
        if (c.in[0] != 'G') {
            c.mode = Connection::Mode::stream;
        } else if (c.in.size() >= 4) {
            c.mode = c.in.compare(0, 4, "GET ") == 0 ? Connection::Mode::handshake : Connection::Mode::stream;
        }
    }
    if (c.mode == Connection::Mode::handshake && !process_handshake(c)) {
        return;
    }
    if (c.mode == Connection::Mode::stream) {
        process_stream(c);
    } else if (c.mode == Connection::Mode::websocket) {
        process_websocket(c);
    }
}

void TransportServer::handle_writable(Connection &c) {
    std::lock_guard lock(c.out_mutex);
    while (!c.out.empty()) {
        const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n > 0) {
            c.out.erase(0, static_cast<std::size_t>(n));
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
            return;
        }
        c.closing = true;
        return;
    }
}

void TransportServer::deliver_frame(Connection &c, std::string_view text) {
    Inbound in;
    in.client = c.id;
    in.received = std::chrono::steady_clock::now();
    try {
        in.message = wire::decode(text);
    } catch (const Error &e) {
        in.error = e.what();
    }
    std::lock_guard lock(in_mutex_);
    inbound_.push_back(std::move(in));
}

void TransportServer::process_stream(Connection &c) {
    std::size_t start = 0;
    while (true) {
        const auto nl = c.in.find('\n', start);
        if (nl == std::string::npos) {
            break;
        }
        std::string_view line(c.in.data() + start, nl - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (!line.empty()) {
            deliver_frame(c, line);
        }
        start = nl + 1;
    }
    c.in.erase(0, start);
    if (c.in.size() > kMaxInboundLine) {
        c.closing = true;
    }
}

bool TransportServer::process_handshake(Connection &c) {
    const auto end = c.in.find("\r\n\r\n");
    if (end == std::string::npos) {
        if (c.in.size() > kMaxInboundLine) {
            c.closing = true;
        }
        return false;
    }
    const std::string request = c.in.substr(0, end);
    c.in.erase(0, end + 4);

    std::string key;
    bool upgrade = false;
    std::size_t pos = request.find("\r\n");
    while (pos != std::string::npos && pos < request.size()) {
        const std::size_t next = request.find("\r\n", pos + 2);
        const std::string line = request.substr(pos + 2, next == std::string::npos ? std::string::npos : next - pos - 2);
        const auto colon = line.find(':');
        if (colon != std::string::npos) {
            const std::string name = lower(trim(line.substr(0, colon)));
            const std::string value = trim(line.substr(colon + 1));
            if (name == "sec-websocket-key") {
                key = value;
            } else if (name == "upgrade" && lower(value) == "websocket") {
                upgrade = true;
            }
        }
        pos = next;
    }

    std::lock_guard lock(c.out_mutex);
    if (!upgrade || key.empty()) {
        c.out += "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
        c.closing = true;
        return false;
    }
    c.out += "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
             "Sec-WebSocket-Accept: " +
             websocket_accept_key(key) + "\r\n\r\n";
    c.mode = Connection::Mode::websocket;
    return true;
}

void TransportServer::process_websocket(Connection &c) {
    while (true) {
        const auto *p = reinterpret_cast<const unsigned char *>(c.in.data());
        const std::size_t avail = c.in.size();
        if (avail < 2) {
            return;
        }
        const bool fin = p[0] & 0x80;
        const std::uint8_t opcode = p[0] & 0x0f;
        const bool masked = p[1] & 0x80;
        std::uint64_t len = p[1] & 0x7f;
        std::size_t header = 2;
        if (len == 126) {
            if (avail < 4) {
                return;
            }
            len = (std::uint64_t{p[2]} << 8) | p[3];
            header = 4;
        } else if (len == 127) {
            if (avail < 10) {
                return;
            }
            len = 0;
            for (int i = 0; i < 8; ++i) {
                len = (len << 8) | p[2 + i];
            }
            header = 10;
        }
        if (len > kMaxInboundLine) {
            c.closing = true;
            return;
        }
        const std::size_t mask_len = masked ? 4 : 0;
        if (avail < header + mask_len + len) {
            return;
        }
        std::string payload(c.in.data() + header + mask_len, static_cast<std::size_t>(len));
        if (masked) {
            const unsigned char *mask = p + header;
            for (std::size_t i = 0; i < payload.size(); ++i) {
                payload[i] = static_cast<char>(payload[i] ^ mask[i % 4]);
            }
        }
        c.in.erase(0, header + mask_len + static_cast<std::size_t>(len));

        switch (opcode) {
        case 0x0: // continuation
        case 0x1: // text
        case 0x2: // binary
            c.fragments += payload;
            if (c.fragments.size() > kMaxInboundLine) {
                c.closing = true;
                return;
            }
            if (fin) {
                std::string_view msg = c.fragments;
                while (!msg.empty()) {
                    const auto nl = msg.find('\n');
                    std::string_view line = msg.substr(0, nl);
                    if (!line.empty()) {
                        deliver_frame(c, line);
                    }
                    if (nl == std::string_view::npos) {
                        break;
                    }
                    msg.remove_prefix(nl + 1);
                }
                c.fragments.clear();
            }
            break;
        case 0x8: {
            std::lock_guard lock(c.out_mutex);
            c.out += websocket_frame({}, 0x8);
            c.closing = true;
            return;
        }
        case 0x9: {
            std::lock_guard lock(c.out_mutex);
            c.out += websocket_frame(payload, 0xA);
            break;
        }
        default:
            break; // pong and reserved opcodes are ignored
        }
    }
}

// ---------------------------------------------------------------------------

StreamClient::StreamClient(const Endpoint &server) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        throw IoFailure("socket failed");
    }
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(server.port);
    if (inet_pton(AF_INET, server.host.c_str(), &addr.sin_addr) != 1 ||
        ::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw IoFailure("cannot connect to " + server.to_string());
    }
    set_nodelay(fd_);
}

StreamClient::~StreamClient() {
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

bool StreamClient::send(const wire::WireMessage &msg) { return send_raw(wire::encode(msg)); }

bool StreamClient::send_raw(std::string_view bytes) {
    while (fd_ >= 0 && !bytes.empty()) {
        const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) {
                continue;
            }
            ::close(fd_);
            fd_ = -1;
            return false;
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return fd_ >= 0;
}

std::optional<std::string> StreamClient::read_frame(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl + 1);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (fd_ < 0) {
            return std::nullopt;
        }
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            return std::nullopt;
        }
        pollfd pfd{fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (r <= 0) {
            if (r < 0 && errno == EINTR) {
                continue;
            }
            return std::nullopt;
        }
        char buf[8192];
        const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n <= 0) {
            ::close(fd_);
            fd_ = -1;
            continue; // drain whatever complete lines remain
        }
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

} // namespace ridesim::transport
