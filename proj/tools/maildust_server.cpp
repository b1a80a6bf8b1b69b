#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "httplib.h"

#include "maildust/config.hpp"
#include "maildust/http_api.hpp"
#include "maildust/server.hpp"
#include "maildust/store.hpp"

namespace {

httplib::Server* g_http = nullptr;

void handle_signal(int) {
    if (g_http != nullptr) g_http->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maildust account service with threshold password recovery"};
    std::string config_path;
    std::string listen_override;
    app.add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    app.add_option("--listen", listen_override, "override listen address (host:port)");
    CLI11_PARSE(app, argc, argv);

    using namespace maildust;
    try {
        auto json = config::read_json(config_path);
        if (!listen_override.empty()) json["listen"] = listen_override;
        const auto cfg = config::parse_server_config(json);

        server::ServerOptions options;
        options.session_ttl = cfg.session_ttl;
        options.recovery_policy = cfg.policy;
        server::MaildustServer service(std::make_shared<server::LogStore>(cfg.store_path),
                                       config::make_transport(cfg), BitSource{}, options);

        httplib::Server http;
        server::install_routes(http, service);
        g_http = &http;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);

        // Port 0 picks a free port; the chosen one is printed.
        const int port = cfg.port == 0 ? http.bind_to_any_port(cfg.host)
                                       : (http.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1);
        if (port <= 0) {
            std::cerr << "cannot bind " << cfg.host << ":" << cfg.port << "\n";
            return 1;
        }
        std::cout << "maildust-server listening on " << cfg.host << ":" << port << " (mail backend "
                  << cfg.mail_backend << ")" << std::endl;
        http.listen_after_bind();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "maildust-server: " << e.what() << "\n";
        return 1;
    }
}
