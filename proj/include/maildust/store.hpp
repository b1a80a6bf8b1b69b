#pragma once

// Account persistence: an in-memory index, optionally backed by an
// append-only JSON-lines log. A recovery (new hash + new event) is one log
// line, so it is applied entirely or not at all.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "maildust/encoding.hpp"
#include "maildust/password.hpp"

namespace maildust::server {

enum class RecoveryStatus { Active, Superseded };

inline const char* to_string(RecoveryStatus s) {
    return s == RecoveryStatus::Active ? "active" : "superseded";
}

struct UserRecord {
    std::string username;
    password::PasswordHashRecord hash;
    std::vector<std::string> recovery_addresses;
    unsigned threshold = 1;
    std::int64_t created_at = 0;  // unix seconds
    std::int64_t updated_at = 0;

    friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct RecoveryEvent {
    std::string recovery_id;
    std::string username;
    unsigned n = 0;
    unsigned k = 0;
    std::int64_t issued_at = 0;
    RecoveryStatus status = RecoveryStatus::Active;

    friend bool operator==(const RecoveryEvent&, const RecoveryEvent&) = default;
};

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by failure injection to stand in for a process crash.
class SimulatedCrash : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UserStore {
public:
    virtual ~UserStore() = default;

    virtual std::optional<UserRecord> find(const std::string& username) const = 0;

    /// False if the username is taken.
    virtual bool insert(const UserRecord& record) = 0;

    /// Replaces the user's hash, supersedes their active recovery events and
    /// records `event` as active, atomically.
    virtual void commit_recovery(const password::PasswordHashRecord& hash, const RecoveryEvent& event) = 0;

    virtual std::vector<RecoveryEvent> events(const std::string& username) const = 0;
};

class MemoryStore : public UserStore {
public:
    std::optional<UserRecord> find(const std::string& username) const override {
        std::shared_lock lock(mutex_);
        const auto it = users_.find(username);
        if (it == users_.end()) return std::nullopt;
        return it->second;
    }

    bool insert(const UserRecord& record) override {
        std::unique_lock lock(mutex_);
        if (users_.count(record.username) != 0) return false;
        persist(lock, register_line(record));
        users_.emplace(record.username, record);
        return true;
    }

    void commit_recovery(const password::PasswordHashRecord& hash, const RecoveryEvent& event) override {
        std::unique_lock lock(mutex_);
        if (users_.count(event.username) == 0) {
            throw StoreError("recovery for unknown user " + event.username);
        }
        persist(lock, recovery_line(hash, event));
        apply_recovery(hash, event);
    }

    std::vector<RecoveryEvent> events(const std::string& username) const override {
        std::shared_lock lock(mutex_);
        const auto it = events_.find(username);
        return it == events_.end() ? std::vector<RecoveryEvent>{} : it->second;
    }

protected:
    /// Durable write hook; called before the in-memory index changes.
    virtual void persist(std::unique_lock<std::shared_mutex>&, const std::string& /*line*/) {}

    void apply_line(const std::string& line) {
        const auto j = nlohmann::json::parse(line);
        const std::string op = j.at("op");
        if (op == "register") {
            UserRecord record;
            record.username = j.at("username");
            record.hash = hash_from_json(j);
            record.recovery_addresses = j.at("addresses").get<std::vector<std::string>>();
            record.threshold = j.at("k");
            record.created_at = j.at("at");
            record.updated_at = record.created_at;
            users_.emplace(record.username, record);
        } else if (op == "recovery") {
            RecoveryEvent event;
            event.recovery_id = j.at("recovery_id");
            event.username = j.at("username");
            event.n = j.at("n");
            event.k = j.at("k");
            event.issued_at = j.at("at");
            apply_recovery(hash_from_json(j), event);
        } else {
            throw StoreError("unknown log operation " + op);
        }
    }

    static std::string register_line(const UserRecord& r) {
        nlohmann::json j = {{"op", "register"},
                            {"username", r.username},
                            {"alg", r.hash.algorithm},
                            {"salt", encoding::to_hex(r.hash.salt)},
                            {"digest", encoding::to_hex(r.hash.digest)},
                            {"addresses", r.recovery_addresses},
                            {"k", r.threshold},
                            {"at", r.created_at}};
        return j.dump();
    }

    static std::string recovery_line(const password::PasswordHashRecord& hash, const RecoveryEvent& e) {
        nlohmann::json j = {{"op", "recovery"},
                            {"username", e.username},
                            {"alg", hash.algorithm},
                            {"salt", encoding::to_hex(hash.salt)},
                            {"digest", encoding::to_hex(hash.digest)},
                            {"recovery_id", e.recovery_id},
                            {"n", e.n},
                            {"k", e.k},
                            {"at", e.issued_at}};
        return j.dump();
    }

    mutable std::shared_mutex mutex_;

private:
    static password::PasswordHashRecord hash_from_json(const nlohmann::json& j) {
        password::PasswordHashRecord hash;
        hash.algorithm = j.at("alg");
        auto salt = encoding::from_hex(j.at("salt").get<std::string>());
        auto digest = encoding::from_hex(j.at("digest").get<std::string>());
        if (!salt || !digest || digest->size() != password::kDigestSize) {
            throw StoreError("corrupt hash in log");
        }
        hash.salt = std::move(*salt);
        std::copy(digest->begin(), digest->end(), hash.digest.begin());
        return hash;
    }

    void apply_recovery(const password::PasswordHashRecord& hash, const RecoveryEvent& event) {
        auto& user = users_.at(event.username);
        user.hash = hash;
        user.updated_at = event.issued_at;
        auto& list = events_[event.username];
        for (auto& previous : list) {
            previous.status = RecoveryStatus::Superseded;
        }
        RecoveryEvent active = event;
        active.status = RecoveryStatus::Active;
        list.push_back(std::move(active));
    }

    std::map<std::string, UserRecord> users_;
    std::map<std::string, std::vector<RecoveryEvent>> events_;
};

/// MemoryStore whose mutations are first appended to a JSON-lines file.
/// On open, the log is replayed; an unterminated final line (torn write) is
/// discarded and truncated away.
class LogStore : public MemoryStore {
public:
    explicit LogStore(std::filesystem::path path) : path_(std::move(path)) {
        std::ifstream in(path_, std::ios::binary);
        if (in) {
            std::ostringstream raw;
            raw << in.rdbuf();
            const std::string text = raw.str();
            std::size_t start = 0;
            std::size_t line_number = 0;
            while (start < text.size()) {
                const std::size_t end = text.find('\n', start);
                if (end == std::string::npos) {
                    break;  // torn tail
                }
                ++line_number;
                try {
                    apply_line(text.substr(start, end - start));
                } catch (const std::exception& e) {
                    throw StoreError(path_.string() + ":" + std::to_string(line_number) + ": " + e.what());
                }
                start = end + 1;
            }
            in.close();
            if (start < text.size()) {
                std::filesystem::resize_file(path_, start);
            }
        }
        fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0600);
        if (fd_ < 0) {
            throw StoreError("cannot open store log " + path_.string() + ": " + std::strerror(errno));
        }
    }

    LogStore(const LogStore&) = delete;
    LogStore& operator=(const LogStore&) = delete;

    ~LogStore() override {
        if (fd_ >= 0) ::close(fd_);
    }

    /// Failure injection: the next append writes only `bytes` bytes of its
    /// line, then throws SimulatedCrash.
    void inject_torn_write(std::size_t bytes) {
        std::unique_lock lock(mutex_);
        torn_write_ = bytes;
    }

    const std::filesystem::path& path() const noexcept { return path_; }

protected:
    void persist(std::unique_lock<std::shared_mutex>&, const std::string& line) override {
        const std::string record = line + "\n";
        if (torn_write_) {
            const std::size_t bytes = std::min(*torn_write_, record.size() - 1);
            torn_write_.reset();
            write_all(record.data(), bytes);
            throw SimulatedCrash("torn write after " + std::to_string(bytes) + " bytes");
        }
        write_all(record.data(), record.size());
        if (::fdatasync(fd_) != 0) {
            throw StoreError("fdatasync on " + path_.string() + " failed: " + std::strerror(errno));
        }
    }

private:
    void write_all(const char* data, std::size_t size) {
        while (size > 0) {
            const auto n = ::write(fd_, data, size);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
                throw StoreError("write to " + path_.string() + " failed: " + std::strerror(errno));
            }
            data += n;
            size -= static_cast<std::size_t>(n);
        }
    }

    std::filesystem::path path_;
    int fd_ = -1;
    std::optional<std::size_t> torn_write_;
};

}  // namespace maildust::server
