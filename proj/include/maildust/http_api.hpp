#pragma once

// JSON-over-HTTP front end for MaildustServer.
//
//   POST /register {username, password, recovery_addresses[], k?} -> 201 {status:"registered"}
//   POST /login    {username, password}                            -> 200 {token, expires_in}
//   POST /logout   {token}                                         -> 200 {status:"logged_out"}
//   POST /recover  {username}                                      -> 202 {status:"accepted"}
//   GET  /session  (Authorization: Bearer <token>)                 -> 200 {username}
//
// Errors are {error: <code>} with a 4xx/5xx status.

#include <string>

#include "httplib.h"
#include "json.hpp"

#include "maildust/server.hpp"

namespace maildust::server {

inline int http_status(Errc code) {
    switch (code) {
        case Errc::BadRequest:
        case Errc::InvalidUsername:
        case Errc::InvalidAddressList:
        case Errc::InvalidThreshold:
        case Errc::WeakPassword: return 400;
        case Errc::AuthenticationFailed:
        case Errc::InvalidSession: return 401;
        case Errc::DuplicateUsername: return 409;
        case Errc::MailDispatchFailed: return 503;
    }
    return 500;
}

inline std::string error_body(Errc code) {
    return nlohmann::json{{"error", to_string(code)}}.dump();
}

namespace detail {

template <class Handler>
httplib::Server::Handler json_route(MaildustServer& service, Handler handler) {
    return [&service, handler](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto body = nlohmann::json::parse(req.body);
            if (!body.is_object()) {
                throw ServiceError(Errc::BadRequest, "body must be a JSON object");
            }
            handler(service, body, res);
        } catch (const ServiceError& e) {
            res.status = http_status(e.code());
            res.set_content(error_body(e.code()), "application/json");
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            res.set_content(error_body(Errc::BadRequest), "application/json");
        } catch (const std::exception&) {
            res.status = 500;
            res.set_content(R"({"error":"internal_error"})", "application/json");
        }
    };
}

inline std::string string_field(const nlohmann::json& body, const char* name) {
    const auto it = body.find(name);
    if (it == body.end() || !it->is_string()) {
        throw ServiceError(Errc::BadRequest, std::string("missing string field ") + name);
    }
    return it->get<std::string>();
}

}  // namespace detail

inline void install_routes(httplib::Server& http, MaildustServer& service) {
    using nlohmann::json;

    http.Post("/register", detail::json_route(service, [](MaildustServer& s, const json& body, httplib::Response& res) {
        const auto username = detail::string_field(body, "username");
        const auto password = detail::string_field(body, "password");
        const auto addresses = body.find("recovery_addresses");
        if (addresses == body.end() || !addresses->is_array()) {
            throw ServiceError(Errc::InvalidAddressList, "recovery_addresses must be an array");
        }
        std::vector<std::string> list;
        for (const auto& a : *addresses) {
            if (!a.is_string()) throw ServiceError(Errc::InvalidAddressList, "addresses must be strings");
            list.push_back(a.get<std::string>());
        }
        std::optional<unsigned> k;
        if (const auto it = body.find("k"); it != body.end() && !it->is_null()) {
            if (!it->is_number_integer() || it->get<long long>() < 1 || it->get<long long>() > 255) {
                throw ServiceError(Errc::InvalidThreshold, "k must be an integer in 1..n");
            }
            k = it->get<unsigned>();
        }
        s.register_user(username, password, list, k);
        res.status = 201;
        res.set_content(json{{"status", "registered"}}.dump(), "application/json");
    }));

    http.Post("/login", detail::json_route(service, [](MaildustServer& s, const json& body, httplib::Response& res) {
        std::string username, password;
        try {
            username = detail::string_field(body, "username");
            password = detail::string_field(body, "password");
        } catch (const ServiceError&) {
            throw ServiceError(Errc::AuthenticationFailed, "authentication failed");
        }
        const auto session = s.login(username, password);
        res.set_content(json{{"token", session.token}, {"expires_in", s.options().session_ttl.count()}}.dump(),
                        "application/json");
    }));

    http.Post("/logout", detail::json_route(service, [](MaildustServer& s, const json& body, httplib::Response& res) {
        s.logout(detail::string_field(body, "token"));
        res.set_content(json{{"status", "logged_out"}}.dump(), "application/json");
    }));

    http.Post("/recover", detail::json_route(service, [](MaildustServer& s, const json& body, httplib::Response& res) {
        s.recover(detail::string_field(body, "username"));
        res.status = 202;
        res.set_content(json{{"status", "accepted"}}.dump(), "application/json");
    }));

    http.Get("/session", [&service](const httplib::Request& req, httplib::Response& res) {
        const std::string header = req.get_header_value("Authorization");
        static constexpr std::string_view kBearer = "Bearer ";
        try {
            if (header.rfind(kBearer, 0) != 0) {
                throw ServiceError(Errc::InvalidSession, "missing bearer token");
            }
            const auto username = service.authenticate(header.substr(kBearer.size()));
            res.set_content(json{{"username", username}}.dump(), "application/json");
        } catch (const ServiceError& e) {
            res.status = http_status(e.code());
            res.set_content(error_body(e.code()), "application/json");
        }
    });
}

}  // namespace maildust::server
