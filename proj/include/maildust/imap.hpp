#pragma once

// IMAP4rev1 (RFC 3501) reader for token mails.

#include <sstream>
#include <string>
#include <vector>

#include "maildust/mail.hpp"
#include "maildust/net.hpp"

namespace maildust::mail {

struct ImapSettings {
    std::string host = "localhost";
    unsigned port = 143;
    bool tls = false;  // implicit TLS (port 993 style)
    std::string username;
    std::string password;
    std::string folder = "INBOX";
};

class ImapMailbox : public MailboxReader {
public:
    explicit ImapMailbox(ImapSettings settings) : settings_(std::move(settings)) {}

    /// Fetches messages whose subject carries the token marker.
    std::vector<MailMessage> fetch() override {
        try {
            net::Stream stream(settings_.host, settings_.port, settings_.tls);
            const std::string greeting = stream.read_line();
            if (greeting.rfind("* OK", 0) != 0 && greeting.rfind("* PREAUTH", 0) != 0) {
                throw MailboxUnreachable("imap: unexpected greeting '" + greeting + "'");
            }
            Session session{stream};
            session.run("LOGIN " + quote(settings_.username) + " " + quote(settings_.password));
            session.run("SELECT " + quote(settings_.folder));
            std::vector<std::uint64_t> uids;
            for (const auto& response : session.run("UID SEARCH SUBJECT " + quote("MAILDUST-TOKEN"))) {
                if (response.text.rfind("* SEARCH", 0) != 0) continue;
                std::istringstream in(response.text.substr(8));
                std::uint64_t uid = 0;
                while (in >> uid) uids.push_back(uid);
            }
            std::vector<MailMessage> messages;
            for (const auto uid : uids) {
                for (const auto& response : session.run("UID FETCH " + std::to_string(uid) + " (INTERNALDATE BODY.PEEK[])")) {
                    if (response.text.find(" FETCH ") == std::string::npos || response.literals.empty()) continue;
                    MailMessage message = parse_rfc5322(response.literals.front());
                    const auto at = response.text.find("INTERNALDATE \"");
                    if (at != std::string::npos) {
                        const auto begin = at + 14;
                        const auto end = response.text.find('"', begin);
                        if (auto when = parse_mail_date(response.text.substr(begin, end - begin))) {
                            message.received = *when;
                        }
                    }
                    message.sequence = uid;
                    messages.push_back(std::move(message));
                }
            }
            try {
                session.run("LOGOUT");
            } catch (const std::exception&) {
            }
            std::sort(messages.begin(), messages.end(), [](const MailMessage& a, const MailMessage& b) {
                return a.sequence < b.sequence;
            });
            return messages;
        } catch (const net::NetworkError& e) {
            throw MailboxUnreachable(std::string("imap: ") + e.what());
        }
    }

    static std::string quote(const std::string& value) {
        std::string out = "\"";
        for (char c : value) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('"');
        return out;
    }

private:
    struct Response {
        std::string text;
        std::vector<std::string> literals;
    };

    struct Session {
        net::Stream& stream;
        unsigned counter = 0;

        std::vector<Response> run(const std::string& command) {
            const std::string tag = "m" + std::to_string(++counter);
            stream.write(tag + " " + command + "\r\n");
            std::vector<Response> untagged;
            for (;;) {
                Response response;
                std::string line = stream.read_line();
                // A line ending in {N} announces an N-byte literal, after which
                // the same response continues on the next line.
                while (!line.empty() && line.back() == '}') {
                    const auto open = line.rfind('{');
                    if (open == std::string::npos) break;
                    const auto size = std::stoull(line.substr(open + 1, line.size() - open - 2));
                    response.text += line.substr(0, open);
                    response.literals.push_back(stream.read_exact(size));
                    line = stream.read_line();
                }
                response.text += line;
                if (response.text.rfind(tag + " ", 0) == 0) {
                    if (response.text.compare(tag.size() + 1, 2, "OK") != 0) {
                        throw MailboxUnreachable("imap: " + response.text);
                    }
                    return untagged;
                }
                untagged.push_back(std::move(response));
            }
        }
    };

    ImapSettings settings_;
};

}  // namespace maildust::mail
