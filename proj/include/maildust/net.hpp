#pragma once

// Blocking TCP stream with optional implicit TLS, for the SMTP/IMAP clients.

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>

namespace maildust::net {

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Stream {
public:
    Stream(const std::string& host, unsigned port, bool tls, int timeout_seconds = 30) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* found = nullptr;
        if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found) != 0 || found == nullptr) {
            throw NetworkError("cannot resolve " + host);
        }
        std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(found, &freeaddrinfo);
        for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
            const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            timeval tv{timeout_seconds, 0};
            setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
            setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
                fd_ = fd;
                break;
            }
            ::close(fd);
        }
        if (fd_ < 0) {
            throw NetworkError("cannot connect to " + host + ":" + std::to_string(port));
        }
        if (tls) {
            start_tls(host);
        }
    }

    Stream(const Stream&) = delete;
    Stream& operator=(const Stream&) = delete;

    ~Stream() {
        if (ssl_ != nullptr) {
            SSL_shutdown(ssl_);
            SSL_free(ssl_);
        }
        if (ctx_ != nullptr) SSL_CTX_free(ctx_);
        if (fd_ >= 0) ::close(fd_);
    }

    void write(std::string_view data) {
        while (!data.empty()) {
            const long n = ssl_ != nullptr ? SSL_write(ssl_, data.data(), static_cast<int>(data.size()))
                                           : ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
            if (n <= 0) throw NetworkError("connection write failed");
            data.remove_prefix(static_cast<std::size_t>(n));
        }
    }

    /// One line without its CRLF (or bare LF).
    std::string read_line() {
        for (;;) {
            const auto lf = buffer_.find('\n');
            if (lf != std::string::npos) {
                std::string line = buffer_.substr(0, lf);
                buffer_.erase(0, lf + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            fill();
        }
    }

    std::string read_exact(std::size_t count) {
        while (buffer_.size() < count) fill();
        std::string out = buffer_.substr(0, count);
        buffer_.erase(0, count);
        return out;
    }

private:
    void fill() {
        char chunk[4096];
        const long n = ssl_ != nullptr ? SSL_read(ssl_, chunk, sizeof(chunk))
                                       : ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n <= 0) throw NetworkError("connection closed by peer");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }

    void start_tls(const std::string& host) {
        ctx_ = SSL_CTX_new(TLS_client_method());
        if (ctx_ == nullptr) throw NetworkError("SSL_CTX_new failed");
        SSL_CTX_set_default_verify_paths(ctx_);
        SSL_CTX_set_verify(ctx_, SSL_VERIFY_PEER, nullptr);
        ssl_ = SSL_new(ctx_);
        SSL_set_fd(ssl_, fd_);
        SSL_set_tlsext_host_name(ssl_, host.c_str());
        SSL_set1_host(ssl_, host.c_str());
        if (SSL_connect(ssl_) != 1) {
            throw NetworkError("TLS handshake with " + host + " failed");
        }
    }

    int fd_ = -1;
    SSL_CTX* ctx_ = nullptr;
    SSL* ssl_ = nullptr;
    std::string buffer_;
};

}  // namespace maildust::net
