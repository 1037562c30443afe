#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace testing {

/// Minimal blocking WebSocket client: handshake, masked text frames out,
/// unmasked frames in. Enough to act as a browser console in tests.
class WsClient {
public:
    explicit WsClient(std::uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        if (::connect(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) != 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }
    ~WsClient() {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }
    WsClient(const WsClient &) = delete;
    WsClient &operator=(const WsClient &) = delete;

    bool ok() const { return fd_ >= 0; }

    /// Sends the upgrade request and returns the full response head.
    std::string handshake(const std::string &key = "dGhlIHNhbXBsZSBub25jZQ==") {
        const std::string req = "GET /ws HTTP/1.1\r\nHost: localhost\r\nUpgrade: websocket\r\n"
                                "Connection: Upgrade\r\nSec-WebSocket-Key: " +
                                key + "\r\nSec-WebSocket-Version: 13\r\n\r\n";
        write_all(req);
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
        while (buf_.find("\r\n\r\n") == std::string::npos && std::chrono::steady_clock::now() < deadline) {
            if (!fill(100)) {
                break;
            }
        }
        const auto end = buf_.find("\r\n\r\n");
        if (end == std::string::npos) {
            return {};
        }
        std::string head = buf_.substr(0, end + 4);
        buf_.erase(0, end + 4);
        return head;
    }

    void send_frame(const std::string &payload, std::uint8_t opcode = 0x1, bool fin = true) {
        std::string f;
        f.push_back(static_cast<char>((fin ? 0x80 : 0x00) | opcode));
        const std::uint8_t mask[4] = {0x37, 0xfa, 0x21, 0x3d};
        if (payload.size() < 126) {
            f.push_back(static_cast<char>(0x80 | payload.size()));
        } else if (payload.size() < 65536) {
            f.push_back(static_cast<char>(0x80 | 126));
            f.push_back(static_cast<char>(payload.size() >> 8));
            f.push_back(static_cast<char>(payload.size() & 0xff));
        } else {
            f.push_back(static_cast<char>(0x80 | 127));
            for (int i = 7; i >= 0; --i) {
                f.push_back(static_cast<char>((static_cast<std::uint64_t>(payload.size()) >> (8 * i)) & 0xff));
            }
        }
        f.append(reinterpret_cast<const char *>(mask), 4);
        for (std::size_t i = 0; i < payload.size(); ++i) {
            f.push_back(static_cast<char>(payload[i] ^ mask[i % 4]));
        }
        write_all(f);
    }

    struct Frame {
        std::uint8_t opcode = 0;
        bool masked = false;
        std::string payload;
    };

    /// Next server frame, or nullopt on timeout.
    std::optional<Frame> read_frame(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            if (auto f = parse()) {
                return f;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0 || !fill(static_cast<int>(left.count()))) {
                return std::nullopt;
            }
        }
    }

    /// Next text frame, skipping control frames.
    std::optional<std::string> read_text(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (std::chrono::steady_clock::now() < deadline) {
            auto f = read_frame(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()));
            if (!f) {
                return std::nullopt;
            }
            if (f->opcode == 0x1) {
                return f->payload;
            }
        }
        return std::nullopt;
    }

private:
    void write_all(const std::string &s) {
        std::size_t off = 0;
        while (off < s.size()) {
            const ssize_t n = ::send(fd_, s.data() + off, s.size() - off, MSG_NOSIGNAL);
            if (n <= 0) {
                return;
            }
            off += static_cast<std::size_t>(n);
        }
    }

    bool fill(int timeout_ms) {
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, timeout_ms) <= 0) {
            return false;
        }
        char tmp[4096];
        const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
        if (n <= 0) {
            return false;
        }
        buf_.append(tmp, static_cast<std::size_t>(n));
        return true;
    }

    std::optional<Frame> parse() {
        if (buf_.size() < 2) {
            return std::nullopt;
        }
        const auto b0 = static_cast<std::uint8_t>(buf_[0]);
        const auto b1 = static_cast<std::uint8_t>(buf_[1]);
        std::size_t pos = 2;
        std::uint64_t len = b1 & 0x7f;
        if (len == 126) {
            if (buf_.size() < 4) {
                return std::nullopt;
            }
            len = (static_cast<std::uint8_t>(buf_[2]) << 8) | static_cast<std::uint8_t>(buf_[3]);
            pos = 4;
        } else if (len == 127) {
            if (buf_.size() < 10) {
                return std::nullopt;
            }
            len = 0;
            for (int i = 0; i < 8; ++i) {
                len = (len << 8) | static_cast<std::uint8_t>(buf_[2 + i]);
            }
            pos = 10;
        }
        const bool masked = (b1 & 0x80) != 0;
        if (masked) {
            pos += 4;
        }
        if (buf_.size() < pos + len) {
            return std::nullopt;
        }
        Frame f{static_cast<std::uint8_t>(b0 & 0x0f), masked, buf_.substr(pos, len)};
        buf_.erase(0, pos + len);
        return f;
    }

    int fd_ = -1;
    std::string buf_;
};

} // namespace testing
