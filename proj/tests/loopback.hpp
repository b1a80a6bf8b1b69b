#pragma once

// Single-connection TCP server on 127.0.0.1 for exercising the SMTP and IMAP
// clients against scripted peers.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

namespace maildust::testing {

class Connection {
public:
    explicit Connection(int fd) : fd_(fd) {}

    void write(const std::string& data) {
        std::size_t sent = 0;
        while (sent < data.size()) {
            const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) throw std::runtime_error("loopback write failed");
            sent += static_cast<std::size_t>(n);
        }
    }

    /// Line including its terminator; empty string on EOF.
    std::string read_line() {
        for (;;) {
            const auto lf = buffer_.find('\n');
            if (lf != std::string::npos) {
                std::string line = buffer_.substr(0, lf + 1);
                buffer_.erase(0, lf + 1);
                return line;
            }
            char chunk[4096];
            const auto n = ::recv(fd_, chunk, sizeof(chunk), 0);
            if (n <= 0) {
                std::string rest = std::move(buffer_);
                buffer_.clear();
                return rest;
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buffer_;
};

class LoopbackServer {
public:
    explicit LoopbackServer(std::function<void(Connection&)> handler) {
        listener_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        if (::bind(listener_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
            ::listen(listener_, 4) != 0) {
            throw std::runtime_error("loopback bind failed");
        }
        socklen_t len = sizeof(addr);
        ::getsockname(listener_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        thread_ = std::thread([this, handler = std::move(handler)] {
            const int fd = ::accept(listener_, nullptr, nullptr);
            if (fd < 0) return;
            Connection connection(fd);
            try {
                handler(connection);
            } catch (const std::exception&) {
            }
            ::close(fd);
        });
    }

    ~LoopbackServer() {
        ::shutdown(listener_, SHUT_RDWR);
        ::close(listener_);
        if (thread_.joinable()) thread_.join();
    }

    unsigned port() const { return port_; }

private:
    int listener_ = -1;
    unsigned port_ = 0;
    std::thread thread_;
};

/// A port with nothing listening on it.
inline unsigned closed_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

}  // namespace maildust::testing
