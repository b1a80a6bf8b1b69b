#pragma once

// Maildir-style spool: one directory per address, one file per message.
// Used as the file-backed simulated provider and as a client mailbox backend.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "maildust/mail.hpp"

namespace maildust::mail {

class MaildirMailbox : public MailboxReader {
public:
    explicit MaildirMailbox(std::filesystem::path root) : root_(std::move(root)) {}

    std::vector<MailMessage> fetch() override {
        namespace fs = std::filesystem;
        std::error_code ec;
        if (!fs::is_directory(root_, ec)) {
            throw MailboxUnreachable("maildir " + root_.string() + " does not exist");
        }
        std::vector<std::pair<fs::path, fs::file_time_type>> files;
        for (const char* sub : {"new", "cur"}) {
            const fs::path dir = root_ / sub;
            if (!fs::is_directory(dir, ec)) continue;
            for (const auto& entry : fs::directory_iterator(dir, ec)) {
                if (entry.is_regular_file()) files.emplace_back(entry.path(), entry.last_write_time());
            }
        }
        std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
            if (a.first.filename() != b.first.filename()) return a.first.filename() < b.first.filename();
            return a.second < b.second;
        });
        std::vector<MailMessage> messages;
        std::uint64_t sequence = 0;
        for (const auto& [path, mtime] : files) {
            std::ifstream in(path, std::ios::binary);
            if (!in) continue;
            std::ostringstream raw;
            raw << in.rdbuf();
            MailMessage message = parse_rfc5322(raw.str());
            message.sequence = ++sequence;
            // Spool files written by MaildirTransport start with a microsecond
            // timestamp, which is finer than the Date header.
            const std::string name = path.filename().string();
            if (name.size() > 21 && name[20] == '.' &&
                std::all_of(name.begin(), name.begin() + 20, [](char c) { return c >= '0' && c <= '9'; })) {
                message.received = Clock::time_point(std::chrono::duration_cast<Clock::duration>(
                    std::chrono::microseconds(std::stoll(name.substr(0, 20)))));
            }
            messages.push_back(std::move(message));
        }
        return messages;
    }

private:
    std::filesystem::path root_;
};

/// Writes each message to <root>/<address>/new/<unique name>. File names
/// sort in delivery order.
class MaildirTransport : public MailTransport {
public:
    explicit MaildirTransport(std::filesystem::path root, std::string from = "maildust@localhost")
        : root_(std::move(root)), from_(std::move(from)) {}

    void send(const MailMessage& message) override {
        namespace fs = std::filesystem;
        if (!is_valid_address(message.to)) {
            throw DeliveryFailed("refusing to spool for invalid address " + message.to);
        }
        const auto now = Clock::now();
        const fs::path dir = root_ / message.to / "new";
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw DeliveryFailed("cannot create " + dir.string() + ": " + ec.message());
        std::ostringstream name;
        name << std::setw(20) << std::setfill('0')
             << std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count() << "."
             << ::getpid() << "." << std::setw(6) << counter_.fetch_add(1) << ".maildust";
        const fs::path tmp = root_ / message.to / ("." + name.str() + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << render_rfc5322(message, from_, now);
            if (!out) throw DeliveryFailed("cannot write " + tmp.string());
        }
        fs::rename(tmp, dir / name.str(), ec);
        if (ec) throw DeliveryFailed("cannot deliver " + name.str() + ": " + ec.message());
    }

    void recall(std::string_view recovery_id) override {
        namespace fs = std::filesystem;
        const std::string subject = token_subject(recovery_id);
        std::error_code ec;
        if (!fs::is_directory(root_, ec)) return;
        for (const auto& mailbox : fs::directory_iterator(root_, ec)) {
            for (const char* sub : {"new", "cur"}) {
                const fs::path dir = mailbox.path() / sub;
                if (!fs::is_directory(dir, ec)) continue;
                for (const auto& entry : fs::directory_iterator(dir, ec)) {
                    std::ifstream in(entry.path(), std::ios::binary);
                    std::ostringstream raw;
                    raw << in.rdbuf();
                    in.close();
                    if (parse_rfc5322(raw.str()).subject == subject) fs::remove(entry.path(), ec);
                }
            }
        }
    }

private:
    std::filesystem::path root_;
    std::string from_;
    std::atomic<std::uint64_t> counter_{0};
};

}  // namespace maildust::mail
