#pragma once

// Account service: registration, login/logout sessions and threshold
// recovery. On recovery a fresh password is generated, split into one token
// per recovery address, mailed out, and only its salted hash is kept.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <openssl/crypto.h>

#include "maildust/envelope.hpp"
#include "maildust/mail.hpp"
#include "maildust/password.hpp"
#include "maildust/random.hpp"
#include "maildust/sss.hpp"
#include "maildust/store.hpp"

namespace maildust::server {

enum class Errc {
    BadRequest,
    InvalidUsername,
    DuplicateUsername,
    InvalidAddressList,
    InvalidThreshold,
    WeakPassword,
    AuthenticationFailed,
    InvalidSession,
    MailDispatchFailed,
};

inline const char* to_string(Errc code) {
    switch (code) {
        case Errc::BadRequest: return "bad_request";
        case Errc::InvalidUsername: return "invalid_username";
        case Errc::DuplicateUsername: return "duplicate_username";
        case Errc::InvalidAddressList: return "invalid_address_list";
        case Errc::InvalidThreshold: return "invalid_threshold";
        case Errc::WeakPassword: return "weak_password";
        case Errc::AuthenticationFailed: return "authentication_failed";
        case Errc::InvalidSession: return "invalid_session";
        case Errc::MailDispatchFailed: return "mail_dispatch_failed";
    }
    return "unknown";
}

class ServiceError : public std::runtime_error {
public:
    ServiceError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Points in the recovery pipeline where a fault hook may fire.
enum class RecoveryStage {
    PasswordGenerated,
    SharesSplit,
    TokenSent,  // once per dispatched envelope
    HashComputed,
    Committed,
};

inline const char* to_string(RecoveryStage stage) {
    switch (stage) {
        case RecoveryStage::PasswordGenerated: return "password_generated";
        case RecoveryStage::SharesSplit: return "shares_split";
        case RecoveryStage::TokenSent: return "token_sent";
        case RecoveryStage::HashComputed: return "hash_computed";
        case RecoveryStage::Committed: return "committed";
    }
    return "unknown";
}

struct SessionToken {
    std::string token;  // 32 lowercase hex chars
    std::string username;
    mail::Clock::time_point expiry;
};

struct ServerOptions {
    std::chrono::seconds session_ttl{3600};
    password::PasswordPolicy recovery_policy = password::PasswordPolicy::recovery_default();
    /// Test hook, invoked after each pipeline stage with the stage and a
    /// per-stage counter. Throwing from it aborts the recovery mid-flight.
    std::function<void(RecoveryStage, std::size_t)> fault_hook;
    std::function<mail::Clock::time_point()> clock = [] { return mail::Clock::now(); };
};

/// k = n-1 for n >= 3, otherwise k = n.
inline unsigned default_threshold(std::size_t n) {
    return n >= 3 ? static_cast<unsigned>(n - 1) : static_cast<unsigned>(n);
}

inline bool is_valid_username(std::string_view name) {
    if (name.empty() || name.size() > 64) return false;
    for (unsigned char c : name) {
        if (!(std::isalnum(c) || c == '.' || c == '_' || c == '-')) return false;
    }
    return true;
}

class MaildustServer {
public:
    MaildustServer(std::shared_ptr<UserStore> store, std::shared_ptr<mail::MailTransport> transport,
                   BitSource rng = BitSource{}, ServerOptions options = {})
        : store_(std::move(store)),
          transport_(std::move(transport)),
          rng_(std::move(rng)),
          options_(std::move(options)) {
        if (password::strength(options_.recovery_policy) != password::StrengthClass::Strong) {
            throw std::invalid_argument("recovery password policy must classify as strong");
        }
        std::lock_guard lock(rng_mutex_);
        decoy_hash_ = password::hash_password(password::generate(options_.recovery_policy, rng_),
                                              password::make_salt(rng_));
    }

    void register_user(const std::string& username, const std::string& password,
                       const std::vector<std::string>& recovery_addresses,
                       std::optional<unsigned> threshold = std::nullopt) {
        if (!is_valid_username(username)) {
            throw ServiceError(Errc::InvalidUsername, "usernames are 1-64 chars of [A-Za-z0-9._-]");
        }
        if (recovery_addresses.empty() || recovery_addresses.size() > 255) {
            throw ServiceError(Errc::InvalidAddressList, "between 1 and 255 recovery addresses are required");
        }
        std::set<std::string> seen;
        for (const auto& address : recovery_addresses) {
            if (!mail::is_valid_address(address)) {
                throw ServiceError(Errc::InvalidAddressList, "invalid address: " + address);
            }
            std::string folded = address;
            std::transform(folded.begin(), folded.end(), folded.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (!seen.insert(folded).second) {
                throw ServiceError(Errc::InvalidAddressList, "duplicate address: " + address);
            }
        }
        const auto n = recovery_addresses.size();
        const unsigned k = threshold.value_or(default_threshold(n));
        if (k < 1 || k > n) {
            throw ServiceError(Errc::InvalidThreshold, "threshold must satisfy 1 <= k <= " + std::to_string(n));
        }
        if (password::estimate_strength(password) == password::StrengthClass::Weak) {
            throw ServiceError(Errc::WeakPassword, "password is too weak");
        }

        UserRecord record;
        record.username = username;
        record.recovery_addresses = recovery_addresses;
        record.threshold = k;
        record.created_at = record.updated_at = now_seconds();
        {
            std::lock_guard lock(rng_mutex_);
            record.hash = password::hash_password(password, password::make_salt(rng_));
        }
        auto user_lock = lock_user(username);
        if (!store_->insert(record)) {
            throw ServiceError(Errc::DuplicateUsername, "username already registered");
        }
    }

    /// Unknown users and wrong passwords fail identically.
    SessionToken login(const std::string& username, const std::string& password) {
        const auto record = store_->find(username);
        const bool ok = password::verify_password(password, record ? record->hash : decoy_hash_);
        if (!record || !ok) {
            throw ServiceError(Errc::AuthenticationFailed, "authentication failed");
        }
        SessionToken session;
        {
            std::lock_guard lock(rng_mutex_);
            std::array<std::uint8_t, 16> bytes{};
            for (auto& b : bytes) b = random_byte(rng_);
            session.token = encoding::to_hex(bytes);
        }
        session.username = username;
        session.expiry = options_.clock() + options_.session_ttl;
        std::lock_guard lock(sessions_mutex_);
        sessions_[session.token] = session;
        return session;
    }

    /// Idempotent.
    void logout(const std::string& token) {
        std::lock_guard lock(sessions_mutex_);
        sessions_.erase(token);
    }

    /// Username owning an unexpired session token.
    std::string authenticate(const std::string& token) {
        std::lock_guard lock(sessions_mutex_);
        const auto it = sessions_.find(token);
        if (it == sessions_.end()) {
            throw ServiceError(Errc::InvalidSession, "invalid session");
        }
        if (it->second.expiry <= options_.clock()) {
            sessions_.erase(it);
            throw ServiceError(Errc::InvalidSession, "invalid session");
        }
        return it->second.username;
    }

    /// Runs the recovery pipeline for `username`. Returns normally whether
    /// or not the user exists. If any token mail cannot be sent, nothing is
    /// committed, the sent tokens are recalled and MailDispatchFailed is
    /// thrown.
    void recover(const std::string& username) {
        if (!store_->find(username)) {
            decoy_recovery();
            return;
        }
        auto user_lock = lock_user(username);
        const auto user = store_->find(username);
        const auto n = static_cast<unsigned>(user->recovery_addresses.size());
        const sss::SharingPolicy policy(user->threshold, n);

        std::string secret;
        Wipe wipe{secret};
        std::vector<std::uint8_t> salt;
        std::string recovery_id;
        std::vector<sss::Share> shares;
        {
            std::lock_guard lock(rng_mutex_);
            secret = password::generate(options_.recovery_policy, rng_);
            hook(RecoveryStage::PasswordGenerated, 0);
            shares = sss::split(secret, policy, rng_);
            salt = password::make_salt(rng_);
            recovery_id = mail::make_uuid(rng_);
        }
        hook(RecoveryStage::SharesSplit, 0);

        try {
            for (std::size_t i = 0; i < shares.size(); ++i) {
                mail::TokenEnvelope envelope;
                envelope.recovery_id = recovery_id;
                envelope.share_index = shares[i].index;
                envelope.k = policy.k();
                envelope.n = policy.n();
                envelope.payload = std::move(shares[i].payload);
                transport_->send(mail::make_token_message(user->recovery_addresses[i], envelope));
                hook(RecoveryStage::TokenSent, i);
            }
        } catch (const mail::DeliveryFailed& e) {
            transport_->recall(recovery_id);
            throw ServiceError(Errc::MailDispatchFailed, e.what());
        }

        const auto hash = password::hash_password(secret, salt);
        hook(RecoveryStage::HashComputed, 0);

        RecoveryEvent event;
        event.recovery_id = recovery_id;
        event.username = username;
        event.n = policy.n();
        event.k = policy.k();
        event.issued_at = now_seconds();
        store_->commit_recovery(hash, event);
        hook(RecoveryStage::Committed, 0);
    }

    std::optional<UserRecord> user(const std::string& username) const { return store_->find(username); }

    std::vector<RecoveryEvent> recovery_events(const std::string& username) const {
        return store_->events(username);
    }

    const ServerOptions& options() const noexcept { return options_; }

private:
    struct Wipe {
        std::string& s;
        ~Wipe() {
            if (!s.empty()) OPENSSL_cleanse(s.data(), s.size());
        }
    };

    void hook(RecoveryStage stage, std::size_t counter) {
        if (options_.fault_hook) options_.fault_hook(stage, counter);
    }

    // Same generation, split and hashing work as a real recovery, no output.
    void decoy_recovery() {
        std::string secret;
        Wipe wipe{secret};
        std::vector<sss::Share> shares;
        std::vector<std::uint8_t> salt;
        {
            std::lock_guard lock(rng_mutex_);
            secret = password::generate(options_.recovery_policy, rng_);
            shares = sss::split(secret, sss::SharingPolicy(2, 3), rng_);
            salt = password::make_salt(rng_);
        }
        for (const auto& share : shares) {
            (void)mail::encode_token(mail::TokenEnvelope{mail::kEnvelopeVersion,
                                                         "00000000-0000-0000-0000-000000000000",
                                                         share.index, 2, 3, share.payload});
        }
        (void)password::hash_password(secret, salt);
    }

    std::unique_lock<std::mutex> lock_user(const std::string& username) {
        std::shared_ptr<std::mutex> m;
        {
            std::lock_guard lock(locks_mutex_);
            auto& slot = user_locks_[username];
            if (!slot) slot = std::make_shared<std::mutex>();
            m = slot;
        }
        return std::unique_lock<std::mutex>(*m);
    }

    std::int64_t now_seconds() const {
        return std::chrono::duration_cast<std::chrono::seconds>(options_.clock().time_since_epoch()).count();
    }

    std::shared_ptr<UserStore> store_;
    std::shared_ptr<mail::MailTransport> transport_;
    std::mutex rng_mutex_;
    BitSource rng_;
    ServerOptions options_;
    password::PasswordHashRecord decoy_hash_;

    std::mutex sessions_mutex_;
    std::map<std::string, SessionToken> sessions_;

    std::mutex locks_mutex_;
    std::unordered_map<std::string, std::shared_ptr<std::mutex>> user_locks_;
};

}  // namespace maildust::server
