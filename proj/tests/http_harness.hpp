#pragma once

// Runs install_routes on an ephemeral loopback port in a background thread.

#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include "httplib.h"

#include "maildust/http_api.hpp"

namespace maildust::testing {

class RunningServer {
public:
    explicit RunningServer(server::MaildustServer& service) {
        server::install_routes(http_, service);
        port_ = http_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("cannot bind test server");
        thread_ = std::thread([this] { http_.listen_after_bind(); });
        http_.wait_until_ready();
    }

    ~RunningServer() { stop(); }

    void stop() {
        http_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

private:
    httplib::Server http_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace maildust::testing
