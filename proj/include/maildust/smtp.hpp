#pragma once

// SMTP submission (RFC 5321) of token mails.

#include <cctype>
#include <string>

#include "maildust/encoding.hpp"
#include "maildust/mail.hpp"
#include "maildust/net.hpp"

namespace maildust::mail {

struct SmtpSettings {
    std::string host = "localhost";
    unsigned port = 25;
    bool tls = false;  // implicit TLS (port 465 style)
    std::string username;  // AUTH PLAIN when non-empty
    std::string password;
    std::string from = "maildust@localhost";
    std::string helo = "localhost";
};

class SmtpTransport : public MailTransport {
public:
    explicit SmtpTransport(SmtpSettings settings) : settings_(std::move(settings)) {}

    void send(const MailMessage& message) override {
        try {
            net::Stream stream(settings_.host, settings_.port, settings_.tls);
            expect(stream, 220);
            command(stream, "EHLO " + settings_.helo, 250);
            if (!settings_.username.empty()) {
                std::string plain;
                plain.push_back('\0');
                plain += settings_.username;
                plain.push_back('\0');
                plain += settings_.password;
                const auto* bytes = reinterpret_cast<const std::uint8_t*>(plain.data());
                command(stream, "AUTH PLAIN " + encoding::base64_encode({bytes, plain.size()}), 235);
            }
            command(stream, "MAIL FROM:<" + settings_.from + ">", 250);
            command(stream, "RCPT TO:<" + message.to + ">", 250);
            command(stream, "DATA", 354);
            stream.write(dot_stuff(render_rfc5322(message, settings_.from)) + ".\r\n");
            expect(stream, 250);
            stream.write("QUIT\r\n");
        } catch (const net::NetworkError& e) {
            throw DeliveryFailed(std::string("smtp: ") + e.what());
        }
    }

    /// Prefixes lines starting with '.' and guarantees a trailing CRLF.
    static std::string dot_stuff(const std::string& data) {
        std::string out;
        out.reserve(data.size() + 8);
        bool line_start = true;
        for (char c : data) {
            if (line_start && c == '.') out.push_back('.');
            out.push_back(c);
            line_start = (c == '\n');
        }
        if (out.size() < 2 || out.compare(out.size() - 2, 2, "\r\n") != 0) out += "\r\n";
        return out;
    }

private:
    static void command(net::Stream& stream, const std::string& line, int code) {
        stream.write(line + "\r\n");
        expect(stream, code);
    }

    // Consumes a possibly multi-line reply.
    static void expect(net::Stream& stream, int code) {
        for (;;) {
            const std::string line = stream.read_line();
            if (line.size() < 3 || !std::isdigit(static_cast<unsigned char>(line[0])) ||
                !std::isdigit(static_cast<unsigned char>(line[1])) ||
                !std::isdigit(static_cast<unsigned char>(line[2]))) {
                throw DeliveryFailed("smtp: malformed reply '" + line + "'");
            }
            if (std::stoi(line.substr(0, 3)) != code) {
                throw DeliveryFailed("smtp: expected " + std::to_string(code) + ", got '" + line + "'");
            }
            if (line.size() == 3 || line[3] != '-') return;
        }
    }

    SmtpSettings settings_;
};

}  // namespace maildust::mail
