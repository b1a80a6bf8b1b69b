#pragma once

// JSON configuration files for the server and client tools.

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "maildust/client.hpp"
#include "maildust/imap.hpp"
#include "maildust/maildir.hpp"
#include "maildust/password.hpp"
#include "maildust/sim_provider.hpp"
#include "maildust/smtp.hpp"

namespace maildust::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// {
///   "listen": "127.0.0.1:8080",
///   "session_ttl_seconds": 3600,
///   "store_path": "maildust-store.jsonl",
///   "password_policy": {"length": 16, "charset": "printable" | "alphanumeric" | "<literal chars>"},
///   "mail": {"backend": "sim", "spool_dir": "spool"}
///         | {"backend": "smtp", "host": "...", "port": 25, "tls": false,
///            "username": "...", "password": "...", "from": "..."}
/// }
struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::chrono::seconds session_ttl{3600};
    std::filesystem::path store_path = "maildust-store.jsonl";
    password::PasswordPolicy policy = password::PasswordPolicy::recovery_default();
    std::string mail_backend = "sim";
    std::filesystem::path spool_dir;
    mail::SmtpSettings smtp;
};

inline std::string charset_from_name(const std::string& name) {
    if (name == "printable") return password::PasswordPolicy::printable_ascii();
    if (name == "alphanumeric") return password::PasswordPolicy::alphanumeric();
    return name;
}

inline ServerConfig parse_server_config(const nlohmann::json& j) {
    ServerConfig c;
    try {
        if (j.contains("listen")) {
            const std::string listen = j.at("listen");
            const auto colon = listen.rfind(':');
            if (colon == std::string::npos) throw ConfigError("listen must be host:port");
            c.host = listen.substr(0, colon);
            c.port = std::stoi(listen.substr(colon + 1));
        }
        if (j.contains("session_ttl_seconds")) c.session_ttl = std::chrono::seconds(j.at("session_ttl_seconds").get<long>());
        if (j.contains("store_path")) c.store_path = j.at("store_path").get<std::string>();
        if (j.contains("password_policy")) {
            const auto& p = j.at("password_policy");
            c.policy = password::PasswordPolicy(p.value("length", std::size_t{16}),
                                                charset_from_name(p.value("charset", std::string("printable"))));
        }
        if (j.contains("mail")) {
            const auto& m = j.at("mail");
            c.mail_backend = m.value("backend", std::string("sim"));
            if (c.mail_backend == "sim") {
                c.spool_dir = m.value("spool_dir", std::string{});
            } else if (c.mail_backend == "smtp") {
                c.smtp.host = m.value("host", c.smtp.host);
                c.smtp.port = m.value("port", c.smtp.port);
                c.smtp.tls = m.value("tls", c.smtp.tls);
                c.smtp.username = m.value("username", std::string{});
                c.smtp.password = m.value("password", std::string{});
                c.smtp.from = m.value("from", c.smtp.from);
                c.smtp.helo = m.value("helo", c.smtp.helo);
            } else {
                throw ConfigError("mail.backend must be 'smtp' or 'sim'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("server config: ") + e.what());
    } catch (const password::InvalidPolicy& e) {
        throw ConfigError(std::string("password_policy: ") + e.what());
    } catch (const std::logic_error& e) {
        throw ConfigError(std::string("server config: ") + e.what());
    }
    return c;
}

/// The sim backend without a spool directory keeps mail in process memory.
inline std::shared_ptr<mail::MailTransport> make_transport(const ServerConfig& c) {
    if (c.mail_backend == "smtp") return std::make_shared<mail::SmtpTransport>(c.smtp);
    if (!c.spool_dir.empty()) return std::make_shared<mail::MaildirTransport>(c.spool_dir, c.smtp.from);
    return mail::SimProvider::create();
}

/// {"mailboxes": [
///    {"address": "a@x.org", "backend": "imap", "host": "...", "port": 993, "tls": true,
///     "username": "...", "password": "...", "folder": "INBOX"},
///    {"address": "b@y.org", "backend": "maildir", "path": "spool/b@y.org"}
/// ]}
/// Relative maildir paths resolve against `base_dir`.
inline client::MailboxConfig parse_mailbox_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    std::vector<client::MailboxEntry> entries;
    try {
        for (const auto& m : j.at("mailboxes")) {
            client::MailboxEntry entry;
            entry.address = m.at("address");
            const std::string backend = m.at("backend");
            if (backend == "imap") {
                mail::ImapSettings s;
                s.host = m.at("host");
                s.tls = m.value("tls", true);
                s.port = m.value("port", s.tls ? 993u : 143u);
                s.username = m.value("username", entry.address);
                s.password = m.value("password", std::string{});
                s.folder = m.value("folder", s.folder);
                entry.reader = std::make_shared<mail::ImapMailbox>(s);
            } else if (backend == "maildir") {
                std::filesystem::path path = m.at("path").get<std::string>();
                if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
                entry.reader = std::make_shared<mail::MaildirMailbox>(path);
            } else {
                throw ConfigError("mailbox " + entry.address + ": backend must be 'imap' or 'maildir'");
            }
            entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mailbox config: ") + e.what());
    }
    return client::MailboxConfig(std::move(entries));
}

}  // namespace maildust::config
