#pragma once

// Mail messages, transport/mailbox interfaces and token harvesting.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maildust/envelope.hpp"

namespace maildust::mail {

using Clock = std::chrono::system_clock;

struct MailMessage {
    std::string to;
    std::string subject;
    std::string body;
    /// Delivery time as recorded by the mailbox. Used to order messages
    /// across mailboxes; `sequence` breaks ties within one mailbox.
    Clock::time_point received{};
    std::uint64_t sequence = 0;
};

class DeliveryFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MailboxUnreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Outbound side.
class MailTransport {
public:
    virtual ~MailTransport() = default;

    /// Throws DeliveryFailed.
    virtual void send(const MailMessage& message) = 0;

    /// Best-effort withdrawal of already-sent token mails for a recovery
    /// that was rolled back. Transports that cannot unsend do nothing.
    virtual void recall(std::string_view /*recovery_id*/) {}
};

/// Inbound side: one readable mailbox.
class MailboxReader {
public:
    virtual ~MailboxReader() = default;

    /// All messages currently in the mailbox, oldest first. Throws
    /// MailboxUnreachable.
    virtual std::vector<MailMessage> fetch() = 0;
};

inline MailMessage make_token_message(std::string to, const TokenEnvelope& envelope) {
    MailMessage message;
    message.to = std::move(to);
    message.subject = token_subject(envelope.recovery_id);
    message.body = encode_token(envelope);
    return message;
}

struct FetchWarning {
    std::string subject;
    std::string reason;
};

struct FetchResult {
    std::vector<TokenEnvelope> envelopes;  // newest first
    std::vector<Clock::time_point> received;  // parallel to envelopes
    std::vector<FetchWarning> warnings;
};

/// Decodes every token-marked message in the mailbox. Undecodable token mails
/// and mails whose subject id disagrees with the body are reported as
/// warnings. Other mail is ignored.
inline FetchResult fetch_tokens(MailboxReader& mailbox,
                                const std::optional<std::string>& recovery_id = std::nullopt) {
    auto messages = mailbox.fetch();
    std::stable_sort(messages.begin(), messages.end(), [](const MailMessage& a, const MailMessage& b) {
        if (a.received != b.received) return a.received > b.received;
        return a.sequence > b.sequence;
    });
    FetchResult result;
    for (const auto& message : messages) {
        if (!is_token_subject(message.subject)) {
            continue;
        }
        try {
            auto envelope = decode_token(message.body);
            if (token_subject(envelope.recovery_id) != message.subject) {
                result.warnings.push_back({message.subject, "subject does not match envelope recovery id"});
                continue;
            }
            if (recovery_id && envelope.recovery_id != *recovery_id) {
                continue;
            }
            result.envelopes.push_back(std::move(envelope));
            result.received.push_back(message.received);
        } catch (const EnvelopeError& e) {
            result.warnings.push_back({message.subject, std::string(to_string(e.code())) + ": " + e.what()});
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// RFC 5322 text form, shared by the SMTP, IMAP and maildir backends.

inline std::string format_rfc5322_date(Clock::time_point when) {
    const std::time_t t = Clock::to_time_t(when);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%a, %d %b %Y %H:%M:%S +0000", &tm);
    return buf;
}

/// Parses "[Day, ]DD Mon YYYY HH:MM:SS +ZZZZ" and the IMAP INTERNALDATE
/// form "DD-Mon-YYYY HH:MM:SS +ZZZZ".
inline std::optional<Clock::time_point> parse_mail_date(std::string_view text) {
    std::string s(text);
    if (const auto comma = s.find(','); comma != std::string::npos) {
        s = s.substr(comma + 1);
    }
    // INTERNALDATE separates day, month and year with '-'; the zone sign
    // after the time must survive.
    const auto time_start = s.find(':');
    std::replace(s.begin(), time_start == std::string::npos ? s.end() : s.begin() + static_cast<std::ptrdiff_t>(time_start), '-', ' ');
    int day = 0, year = 0, hh = 0, mm = 0, ss = 0;
    char mon[4] = {};
    char sign = '+';
    int zone = 0;
    if (std::sscanf(s.c_str(), " %d %3s %d %d:%d:%d %c%d", &day, mon, &year, &hh, &mm, &ss, &sign,
                    &zone) < 6) {
        return std::nullopt;
    }
    static constexpr std::string_view kMonths = "JanFebMarAprMayJunJulAugSepOctNovDec";
    const auto pos = kMonths.find(std::string_view(mon, 3));
    if (pos == std::string_view::npos || pos % 3 != 0) {
        return std::nullopt;
    }
    std::tm tm{};
    tm.tm_mday = day;
    tm.tm_mon = static_cast<int>(pos / 3);
    tm.tm_year = year - 1900;
    tm.tm_hour = hh;
    tm.tm_min = mm;
    tm.tm_sec = ss;
    std::time_t t = timegm(&tm);
    const int offset = (zone / 100) * 3600 + (zone % 100) * 60;
    t += (sign == '-') ? offset : -offset;
    return Clock::from_time_t(t);
}

/// Renders a plain-text message with CRLF line endings.
inline std::string render_rfc5322(const MailMessage& message, std::string_view from,
                                  Clock::time_point date = Clock::now()) {
    std::string out;
    out += "From: " + std::string(from) + "\r\n";
    out += "To: " + message.to + "\r\n";
    out += "Subject: " + message.subject + "\r\n";
    out += "Date: " + format_rfc5322_date(date) + "\r\n";
    out += "MIME-Version: 1.0\r\n";
    out += "Content-Type: text/plain; charset=us-ascii\r\n";
    out += "Content-Transfer-Encoding: 7bit\r\n";
    out += "\r\n";
    for (char c : message.body) {
        if (c == '\n') {
            out += "\r\n";
        } else {
            out.push_back(c);
        }
    }
    return out;
}

/// Inverse of render_rfc5322 for the headers this project cares about.
/// Folded headers are unfolded; CRLF becomes LF in the body.
inline MailMessage parse_rfc5322(std::string_view raw) {
    std::string text;
    text.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') {
            continue;
        }
        text.push_back(raw[i]);
    }
    MailMessage message;
    std::size_t header_end = text.find("\n\n");
    std::string_view headers = std::string_view(text).substr(0, header_end);
    if (header_end != std::string::npos) {
        message.body = text.substr(header_end + 2);
    }
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= headers.size()) {
        const std::size_t end = std::min(headers.find('\n', start), headers.size());
        std::string line(headers.substr(start, end - start));
        if (!line.empty() && (line[0] == ' ' || line[0] == '\t') && !lines.empty()) {
            lines.back() += line;
        } else {
            lines.push_back(std::move(line));
        }
        start = end + 1;
    }
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    for (const auto& line : lines) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const std::string name = lower(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (name == "subject") message.subject = value;
        else if (name == "to") message.to = value;
        else if (name == "date") {
            if (auto when = parse_mail_date(value)) message.received = *when;
        }
    }
    return message;
}

/// Minimal syntactic address check: local@domain, domain has a dot, no
/// whitespace or control characters, at most 254 octets.
inline bool is_valid_address(std::string_view address) {
    if (address.empty() || address.size() > 254) return false;
    const auto at = address.find('@');
    if (at == std::string_view::npos || at == 0 || address.find('@', at + 1) != std::string_view::npos) {
        return false;
    }
    const auto domain = address.substr(at + 1);
    if (domain.size() < 3 || domain.find('.') == std::string_view::npos || domain.front() == '.' ||
        domain.back() == '.' || domain.find("..") != std::string_view::npos) {
        return false;
    }
    for (unsigned char c : address) {
        if (c <= 0x20 || c >= 0x7F || c == '<' || c == '>' || c == ',' || c == '"') return false;
    }
    return true;
}

}  // namespace maildust::mail
